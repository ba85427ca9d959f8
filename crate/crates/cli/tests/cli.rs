use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn photoconv(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_photoconv"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .expect("run photoconv")
}

fn out(dir: &Path, name: &str) -> PathBuf {
    dir.join("out").join(name)
}

// column `name` of a CSV file as numbers
fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn steady_without_swimming_is_uniform() {
    let dir = TempDir::new().unwrap();
    let o = photoconv(dir.path(), r#"{"Vc":0}"#, &["steady"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ns = column(&out(dir.path(), "basic_state.csv"), "ns");
    assert!(ns.iter().all(|n| (n - 1.0).abs() < 1e-12));
    let z = column(&out(dir.path(), "basic_state.csv"), "z");
    let ts = column(&out(dir.path(), "basic_state.csv"), "Ts");
    assert!(z.iter().zip(&ts).all(|(z, t)| (t - (1.0 - z)).abs() < 1e-15));
    assert!(out(dir.path(), "steady_report.json").exists());
}

#[test]
fn inconsistent_taxis_exits_with_config_error() {
    let dir = TempDir::new().unwrap();
    let o = photoconv(dir.path(), r#"{"Gc":0.63,"beta":0.2}"#, &["steady"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("0.63") && err.contains("0.2"), "{err}");
}

#[test]
fn empty_sweep_exits_with_config_error() {
    let dir = TempDir::new().unwrap();
    let o = photoconv(dir.path(), r#"{"kappa":0.5,"sweep":{"RaT":[]}}"#, &["table"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_format_exits_with_config_error() {
    let dir = TempDir::new().unwrap();
    let o = photoconv(dir.path(), "{}", &["--format", "xml", "steady"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn growth_is_deterministic_and_contains_decoupled_modes() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"Vc":0,"Le":1.5,"k":2.0}"#;
    let o = photoconv(dir.path(), cfg, &["growth"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(out(dir.path(), "spectrum.csv")).unwrap();
    let o = photoconv(dir.path(), cfg, &["growth"]);
    assert!(o.status.success());
    assert_eq!(first, fs::read(out(dir.path(), "spectrum.csv")).unwrap());

    let re = column(&out(dir.path(), "spectrum.csv"), "re_gamma");
    let target = -1.5 * (4.0 + PI * PI);
    assert!(re.iter().any(|g| (g - target).abs() < 1e-6 * target.abs()));
}

#[test]
fn json_spectrum_on_request() {
    let dir = TempDir::new().unwrap();
    let o = photoconv(dir.path(), r#"{"N":32}"#, &["--format", "json", "growth", "--k", "3", "--rab", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out(dir.path(), "spectrum.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v.is_object() || v.is_array());
}

#[test]
fn stationary_mode_writes_one_snapshot() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"kappa":0.5,"Gc":0.66,"RaT":1000,"modes":{"nx":17,"nz":17}}"#;
    let o = photoconv(dir.path(), cfg, &["modes", "--k", "3.3", "--rab", "245", "--snapshots", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stationary"));
    assert!(out(dir.path(), "fields.csv").exists());
    assert!(!out(dir.path(), "fields_000.csv").exists());
    assert!(!out(dir.path(), "time_series.csv").exists());
    let w1 = column(&out(dir.path(), "fields.csv"), "w1");
    assert_eq!(w1.len(), 17 * 17);
}

#[test]
fn hopf_mode_writes_quarter_period_snapshots() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"kappa":1,"Gc":0.53,"RaT":1000,"modes":{"nx":17,"nz":17}}"#;
    let o = photoconv(dir.path(), cfg, &["modes", "--k", "2.68", "--rab", "342", "--snapshots", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let times: Vec<f64> = (0..4).map(|j| column(&out(dir.path(), &format!("fields_{j:03}.csv")), "t")[0]).collect();
    let quarter = times[1];
    assert!(quarter > 0.0);
    for (j, t) in times.iter().enumerate() {
        assert!((t - j as f64 * quarter).abs() < 1e-12 * quarter.max(1.0), "{times:?}");
    }
    assert!(out(dir.path(), "time_series.csv").exists());
    assert!(out(dir.path(), "mode_profile.csv").exists());
}
