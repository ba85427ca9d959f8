use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent taxis parameters: beta = {beta} implies Gc = {implied_gc}, but Gc = {gc} was given")]
    InconsistentTaxis { beta: f64, gc: f64, implied_gc: f64 },

    #[error("no root of the taxis function in (0, {gt}] for beta = {beta}")]
    NoRootInRange { beta: f64, gt: f64 },

    #[error("critical intensity {gc} is outside the invertible window [{lo}, {hi}]")]
    OutOfRange { gc: f64, lo: f64, hi: f64 },

    #[error("basic state did not converge after {iterations} iterations (residual trace: {trace:?})")]
    NonConvergence { iterations: usize, trace: Vec<f64> },

    #[error("basic state is inconsistent with its parameters: residual {residual:e} exceeds {tolerance:e}")]
    InconsistentState { residual: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("every eigenvalue candidate was rejected as spurious")]
    AllSpurious,

    #[error("no computed eigenvalue within {tolerance:e} of {target}")]
    NoMatchingEigenvalue { target: String, tolerance: f64 },

    #[error("could not bracket a neutral Rayleigh number at k = {k} after {doublings} expansions (last bracket [{lo}, {hi}])")]
    BracketExpansion { k: f64, doublings: usize, lo: f64, hi: f64 },

    #[error("neutral curve minimum abuts the upper window edge k = {k_max}")]
    WindowTooNarrow { k_max: f64 },

    #[error("no neutral point found anywhere in the wavenumber window")]
    NoNeutralPoint,

    #[error("mode is stationary (|Im gamma| = {im:e}); oscillation snapshots need a Hopf mode")]
    StationaryMode { im: f64 },

    #[error("unknown {kind} strategy '{name}' (available: {available})")]
    UnknownStrategy { kind: &'static str, name: String, available: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InconsistentTaxis { .. }
                | Error::OutOfRange { .. }
                | Error::UnknownStrategy { .. }
                | Error::Config(_)
                | Error::Json(_)
                | Error::DimensionMismatch { .. }
        )
    }
}
