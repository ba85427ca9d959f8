//! Pipelines behind each subcommand. Every command returns its artifacts in
//! memory; writing them out is a separate step so runs can be compared byte for byte.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use photoconv::basic_state::{basic_state_residual, solvers};
use photoconv::io::{fmt_full, fmt_short, CsvBuilder};
use photoconv::model::ModelParams;
use photoconv::neutral::{curve_csv, root_strategies, CriticalResult, NeutralSolver};
use photoconv::patterns::{fields_csv, mode_to_fields, oscillation_snapshots, period, time_series, FieldSnapshot};
use photoconv::stability::{backends, spectrum_csv, EigenMode, StabilitySolver};
use photoconv::{Error, Result};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some table rows failed; they are still reported.
    Partial,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub status: Status,
    /// Human-readable one-line summary.
    pub summary: String,
}

impl Outcome {
    fn single(name: &str, contents: String, summary: String) -> Outcome {
        Outcome { artifacts: vec![Artifact { name: name.into(), contents }], status: Status::Success, summary }
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn build_stability(cfg: &RunConfig, params: &ModelParams) -> Result<StabilitySolver> {
    let basic = solvers().get(&cfg.solver.basic_state)?;
    let eigen = backends().get(&cfg.solver.eigen)?;
    StabilitySolver::with_strategies(params, basic, eigen)
}

pub fn build_neutral<'a>(cfg: &RunConfig, stability: &'a StabilitySolver) -> Result<NeutralSolver<'a>> {
    Ok(NeutralSolver::new(stability).with_roots(root_strategies().get(&cfg.solver.roots)?))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_steady(cfg: &RunConfig) -> Result<Outcome> {
    let state = solvers().get(&cfg.solver.basic_state)?.solve(&cfg.model)?;
    let residual = basic_state_residual(&state, &cfg.model);
    let report = json!({
        "N": cfg.model.n,
        "solver": cfg.solver.basic_state,
        "Gc": cfg.gc,
        "beta": cfg.model.beta,
        "residual": residual,
        "newton_residual": state.solver_residual,
        "total_cells": state.total_cells(),
    });
    let summary = format!("basic state on N = {}: residual {}", cfg.model.n, fmt_short(residual));
    Ok(Outcome {
        artifacts: vec![
            Artifact { name: "basic_state.csv".into(), contents: state.to_csv() },
            Artifact { name: "steady_report.json".into(), contents: to_json(&report)? },
        ],
        status: Status::Success,
        summary,
    })
}

pub fn cmd_growth(cfg: &RunConfig, k: f64, ra_b: f64) -> Result<Outcome> {
    let solver = build_stability(cfg, &cfg.model)?;
    let vals = solver.spectrum(k, ra_b)?;
    let lead = vals[0];
    let summary = format!("k = {}, Rab = {}: gamma_max = {} {:+}i", fmt_short(k), fmt_short(ra_b), fmt_short(lead.re), fmt_short(lead.im));
    match cfg.output.format {
        Format::Csv => Ok(Outcome::single("spectrum.csv", spectrum_csv(k, ra_b, cfg.model.ra_t, &vals), summary)),
        Format::Json => {
            let rows: Vec<_> = vals.iter().map(|g| json!({"re_gamma": g.re, "im_gamma": g.im})).collect();
            let doc = json!({"k": k, "Rab": ra_b, "RaT": cfg.model.ra_t, "spectrum": rows});
            Ok(Outcome::single("spectrum.json", to_json(&doc)?, summary))
        }
    }
}

pub fn cmd_neutral(cfg: &RunConfig) -> Result<Outcome> {
    let solver = build_stability(cfg, &cfg.model)?;
    let curve = build_neutral(cfg, &solver)?.trace(&cfg.kwindow)?;
    let failed = curve.iter().filter(|s| s.point.is_none()).count();
    let summary = format!("{} neutral samples, {failed} without a neutral point", curve.len());
    match cfg.output.format {
        Format::Csv => Ok(Outcome::single("neutral_curve.csv", curve_csv(&curve), summary)),
        Format::Json => {
            let rows: Vec<_> = curve
                .iter()
                .map(|s| json!({"k": s.k, "point": s.point, "error": s.error}))
                .collect();
            Ok(Outcome::single("neutral_curve.json", to_json(&rows)?, summary))
        }
    }
}

fn describe(c: &CriticalResult) -> String {
    let lambda = if c.infinite_wavelength { "inf".to_string() } else { fmt_short(c.lambda_c) };
    let kind = match c.period {
        Some(p) => format!("oscillatory, Im gamma = {}, period = {}", fmt_short(c.im_gamma), fmt_short(p)),
        None => "stationary".to_string(),
    };
    format!("lambda_c = {lambda}, Rab_c = {} ({kind})", fmt_short(c.rab_c))
}

pub fn cmd_critical(cfg: &RunConfig) -> Result<Outcome> {
    let solver = build_stability(cfg, &cfg.model)?;
    let crit = build_neutral(cfg, &solver)?.find_critical(&cfg.kwindow)?;
    Ok(Outcome::single("critical.json", to_json(&crit)?, describe(&crit)))
}

/// One row of a reproduced table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    #[serde(rename = "Gc")]
    pub gc: f64,
    #[serde(rename = "Vc")]
    pub vc: f64,
    pub kappa: f64,
    #[serde(rename = "RaT")]
    pub ra_t: f64,
    pub critical: Option<CriticalResult>,
    pub error: Option<String>,
}

pub fn table_row(cfg: &RunConfig, gc: f64, ra_t: f64) -> TableRow {
    let run = || -> Result<CriticalResult> {
        let params = ModelParams { ra_t, ..cfg.model }.with_critical_intensity(gc)?;
        let solver = build_stability(cfg, &params)?;
        build_neutral(cfg, &solver)?.find_critical(&cfg.kwindow)
    };
    let (critical, error) = match run() {
        Ok(c) => (Some(c), None),
        Err(e) => {
            log::warn!("row Gc = {gc}, RaT = {ra_t} failed: {e}");
            (None, Some(e.to_string()))
        }
    };
    TableRow { gc, vc: cfg.model.vc, kappa: cfg.model.kappa, ra_t, critical, error }
}

/// Evaluates rows on up to `jobs` threads; the result order follows `rows`.
pub fn table_rows(cfg: &RunConfig, rows: &[(f64, f64)], jobs: usize) -> Vec<TableRow> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<TableRow>>> = Mutex::new(vec![None; rows.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, rows.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= rows.len() {
                    break;
                }
                let (gc, ra_t) = rows[i];
                let row = table_row(cfg, gc, ra_t);
                results.lock().expect("row results lock")[i] = Some(row);
            });
        }
    });
    results.into_inner().expect("row results lock").into_iter().map(|r| r.expect("every row evaluated")).collect()
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut csv = CsvBuilder::new(&["Gc", "Vc", "kappa", "RaT", "lambda_c", "Rab_c", "im_gamma", "error"]);
    for r in rows {
        let head = [fmt_full(r.gc), fmt_full(r.vc), fmt_full(r.kappa), fmt_full(r.ra_t)];
        let tail = match (&r.critical, &r.error) {
            (Some(c), _) => [fmt_full(c.lambda_c), fmt_full(c.rab_c), fmt_full(c.im_gamma), String::new()],
            (None, e) => {
                let msg = e.clone().unwrap_or_default().replace([',', '\n'], ";");
                [fmt_full(f64::NAN), fmt_full(f64::NAN), fmt_full(f64::NAN), msg]
            }
        };
        let cells: Vec<String> = head.into_iter().chain(tail).collect();
        csv.row(&cells);
    }
    csv.finish()
}

pub fn cmd_table(cfg: &RunConfig, jobs: usize) -> Result<Outcome> {
    let rows = cfg.table_rows()?;
    let started = Instant::now();
    let results = table_rows(cfg, &rows, jobs);
    let failed = results.iter().filter(|r| r.critical.is_none()).count();
    let summary = format!(
        "{} rows, {failed} failed, {:.1} s",
        results.len(),
        started.elapsed().as_secs_f64()
    );
    let status = if failed > 0 { Status::Partial } else { Status::Success };
    let artifact = match cfg.output.format {
        Format::Csv => Artifact { name: "table.csv".into(), contents: table_csv(&results) },
        Format::Json => Artifact { name: "table.json".into(), contents: to_json(&results)? },
    };
    Ok(Outcome { artifacts: vec![artifact], status, summary })
}

fn profile_csv(mode: &EigenMode) -> String {
    let mut csv = CsvBuilder::new(&[
        "z", "re_W", "im_W", "re_Phi", "im_Phi", "re_Theta", "im_Theta", "re_T", "im_T",
    ]);
    for i in 0..mode.z.len() {
        csv.numeric_row(&[
            mode.z[i],
            mode.w[i].re,
            mode.w[i].im,
            mode.phi[i].re,
            mode.phi[i].im,
            mode.theta[i].re,
            mode.theta[i].im,
            mode.t[i].re,
            mode.t[i].im,
        ]);
    }
    csv.finish()
}

/// Field snapshots of the leading mode at `(k, Rab)`; without them, at the critical point.
pub fn cmd_modes(cfg: &RunConfig, k: Option<f64>, ra_b: Option<f64>, n_snapshots: usize) -> Result<Outcome> {
    let solver = build_stability(cfg, &cfg.model)?;
    let (k, ra_b) = match (k, ra_b) {
        (Some(k), Some(r)) => (k, r),
        _ => {
            let crit = build_neutral(cfg, &solver)?.find_critical(&cfg.kwindow)?;
            log::info!("rendering the critical mode: {}", describe(&crit));
            (k.unwrap_or(crit.k_eval), ra_b.unwrap_or(crit.rab_neutral))
        }
    };
    let gamma = solver.growth_rate(k, ra_b)?;
    let mode = solver.eigenmode(k, ra_b, gamma)?;
    let opts = cfg.modes;
    let snapshots: Vec<FieldSnapshot> = if mode.is_stationary() {
        if n_snapshots > 1 {
            log::warn!("mode is stationary; writing a single snapshot instead of {n_snapshots}");
        }
        vec![mode_to_fields(&mode, 0.0, opts.nx, opts.nz)?]
    } else if n_snapshots <= 1 {
        vec![mode_to_fields(&mode, 0.0, opts.nx, opts.nz)?]
    } else {
        oscillation_snapshots(&mode, n_snapshots, opts.nx, opts.nz)?
    };
    let mut artifacts = vec![Artifact { name: "mode_profile.csv".into(), contents: profile_csv(&mode) }];
    if opts.concatenate || snapshots.len() == 1 {
        let name = if snapshots.len() == 1 { "fields.csv" } else { "fields_all.csv" };
        artifacts.push(Artifact { name: name.into(), contents: fields_csv(&snapshots, opts.total_temperature) });
    } else {
        for s in &snapshots {
            artifacts.push(Artifact {
                name: format!("fields_{:03}.csv", s.phase_index),
                contents: fields_csv(std::slice::from_ref(s), opts.total_temperature),
            });
        }
    }
    if let Ok(p) = period(&mode) {
        let series = time_series(&mode, (0.0, 0.5), 2.0 * p, 400)?;
        artifacts.push(Artifact { name: "time_series.csv".into(), contents: series.to_csv() });
    }
    let summary = format!(
        "k = {}, Rab = {}: gamma = {} {:+}i, {} snapshot(s), residual {}",
        fmt_short(k),
        fmt_short(ra_b),
        fmt_short(mode.gamma.re),
        fmt_short(mode.gamma.im),
        snapshots.len(),
        fmt_short(mode.residual)
    );
    Ok(Outcome { artifacts, status: Status::Success, summary })
}

/// Maps an error to the documented exit code.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config_error() {
        2
    } else {
        3
    }
}
