//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use photoconv::model::{critical_intensity, ModelParams};
use photoconv::neutral::KWindow;
use photoconv::{Error, Result};

/// Agreement required between an explicit `beta` and `Gc`.
pub const TAXIS_CONSISTENCY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown output format '{other}' (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(rename = "RaT", default)]
    pub ra_t: Vec<f64>,
    #[serde(rename = "Gc", default)]
    pub gc: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_dir(), format: Format::Csv }
    }
}

/// Names of the registered strategies to use.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverChoice {
    #[serde(default = "default_basic")]
    pub basic_state: String,
    #[serde(default = "default_eigen")]
    pub eigen: String,
    #[serde(default = "default_roots")]
    pub roots: String,
}

fn default_basic() -> String {
    "collocation".into()
}
fn default_eigen() -> String {
    "reduced".into()
}
fn default_roots() -> String {
    "brent".into()
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice { basic_state: default_basic(), eigen: default_eigen(), roots: default_roots() }
    }
}

/// Figure export options.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeOptions {
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_grid")]
    pub nx: usize,
    #[serde(default = "default_grid")]
    pub nz: usize,
    /// One file per snapshot (false) or everything in a single file (true).
    #[serde(default)]
    pub concatenate: bool,
    /// Adds the total temperature column.
    #[serde(default)]
    pub total_temperature: bool,
}

fn default_snapshots() -> usize {
    4
}
fn default_grid() -> usize {
    41
}

impl Default for ModeOptions {
    fn default() -> Self {
        ModeOptions { snapshots: 4, nx: 41, nz: 41, concatenate: false, total_temperature: false }
    }
}

// Raw document: every field optional so defaults and consistency checks live in one place.
#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kappa: Option<f64>,
    #[serde(rename = "Gc")]
    gc: Option<f64>,
    beta: Option<f64>,
    #[serde(rename = "RaT")]
    ra_t: Option<f64>,
    #[serde(rename = "Rab")]
    ra_b: Option<f64>,
    #[serde(rename = "Sc")]
    sc: Option<f64>,
    #[serde(rename = "Le")]
    le: Option<f64>,
    #[serde(rename = "Vc")]
    vc: Option<f64>,
    #[serde(rename = "Gt")]
    gt: Option<f64>,
    #[serde(rename = "N")]
    n: Option<usize>,
    k: Option<f64>,
    sweep: Option<Sweep>,
    kwindow: Option<KWindow>,
    output: Option<OutputSpec>,
    solver: Option<SolverChoice>,
    modes: Option<ModeOptions>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelParams,
    /// Critical intensity implied by (or given with) `model.beta`.
    pub gc: f64,
    /// Wavenumber for single-point commands.
    pub k: Option<f64>,
    /// Whether `Rab` was given explicitly.
    pub ra_b_given: bool,
    pub sweep: Option<Sweep>,
    pub kwindow: KWindow,
    pub output: OutputSpec,
    pub solver: SolverChoice,
    pub modes: ModeOptions,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        Self::resolve(raw)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn resolve(raw: RawConfig) -> Result<RunConfig> {
        let defaults = ModelParams::default();
        let mut model = ModelParams {
            sc: raw.sc.unwrap_or(defaults.sc),
            le: raw.le.unwrap_or(defaults.le),
            vc: raw.vc.unwrap_or(defaults.vc),
            kappa: raw.kappa.unwrap_or(defaults.kappa),
            gt: raw.gt.unwrap_or(defaults.gt),
            beta: defaults.beta,
            ra_t: raw.ra_t.unwrap_or(defaults.ra_t),
            ra_b: raw.ra_b.unwrap_or(defaults.ra_b),
            n: raw.n.unwrap_or(defaults.n),
        };
        let gc = match (raw.beta, raw.gc) {
            (Some(beta), Some(gc)) => {
                let implied = critical_intensity(beta, model.gt)?;
                if (implied - gc).abs() > TAXIS_CONSISTENCY {
                    return Err(Error::InconsistentTaxis { beta, gc, implied_gc: implied });
                }
                model.beta = beta;
                gc
            }
            (Some(beta), None) => {
                model.beta = beta;
                critical_intensity(beta, model.gt)?
            }
            (None, gc) => {
                let gc = gc.unwrap_or(model.gt);
                model = model.with_critical_intensity(gc)?;
                gc
            }
        };
        model.validate()?;
        let kwindow = raw.kwindow.unwrap_or_default();
        kwindow.validate()?;
        if let Some(k) = raw.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("k must be positive, got {k}")));
            }
        }
        Ok(RunConfig {
            model,
            gc,
            k: raw.k,
            ra_b_given: raw.ra_b.is_some(),
            sweep: raw.sweep,
            kwindow,
            output: raw.output.unwrap_or_default(),
            solver: raw.solver.unwrap_or_default(),
            modes: raw.modes.unwrap_or_default(),
        })
    }

    /// The (Gc, RaT) rows of a table sweep, Gc-major.
    pub fn table_rows(&self) -> Result<Vec<(f64, f64)>> {
        let sweep = self.sweep.as_ref().ok_or_else(|| Error::Config("table needs a 'sweep' section".into()))?;
        if sweep.ra_t.is_empty() {
            return Err(Error::Config("sweep.RaT is empty".into()));
        }
        let gcs = if sweep.gc.is_empty() { vec![self.gc] } else { sweep.gc.clone() };
        Ok(gcs.iter().flat_map(|&g| sweep.ra_t.iter().map(move |&r| (g, r))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_json(r#"{"kappa":0.5,"Gc":0.8,"RaT":1000}"#).unwrap();
        assert_eq!(c.model.kappa, 0.5);
        assert_eq!(c.model.ra_t, 1000.0);
        assert_eq!(c.model.sc, 20.0);
        assert_eq!(c.model.n, 64);
        assert!((c.model.critical_intensity().unwrap() - 0.8).abs() < 1e-10);
        assert_eq!(c.kwindow, KWindow::default());
    }

    #[test]
    fn beta_and_gc_must_agree() {
        let ok = ModelParams::default().with_critical_intensity(0.63).unwrap().beta;
        let text = format!(r#"{{"Gc":0.63,"beta":{ok}}}"#);
        assert!(RunConfig::from_json(&text).is_ok());
        let err = RunConfig::from_json(r#"{"Gc":0.63,"beta":0.2}"#).unwrap_err();
        assert!(err.is_config_error());
        let msg = err.to_string();
        assert!(msg.contains("0.63") && msg.contains("0.2"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"kappa":0.5,"RaX":1}"#).is_err());
    }

    #[test]
    fn table_needs_a_sweep() {
        let c = RunConfig::from_json(r#"{"sweep":{"RaT":[]}}"#).unwrap();
        assert!(c.table_rows().is_err());
        let c = RunConfig::from_json(r#"{"sweep":{"RaT":[0,1000],"Gc":[0.8,0.63]}}"#).unwrap();
        assert_eq!(c.table_rows().unwrap(), vec![(0.8, 0.0), (0.8, 1000.0), (0.63, 0.0), (0.63, 1000.0)]);
    }

    #[test]
    fn bad_window_rejected() {
        assert!(RunConfig::from_json(r#"{"kwindow":{"k_min":1,"k_max":0.5,"samples":10}}"#).is_err());
    }
}
