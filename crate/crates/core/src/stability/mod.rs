//! Growth rates and eigenfunctions of the linearised perturbation problem.

mod eigen;
mod operators;

use std::cmp::Ordering;
use std::sync::{Arc, OnceLock};

use faer::c64;
use faer::prelude::*;
use faer::Mat;

pub use eigen::{backends, EigenBackend, Qz, Reduced};
pub use operators::{assemble_operators, assemble_with_rayleigh, StabilityOperators};

use crate::basic_state::{solvers, BasicState, BasicStateSolver};
use crate::error::{Error, Result};
use crate::io::CsvBuilder;
use crate::model::ModelParams;

/// Default cap on the number of eigenvalues returned by [`StabilitySolver::leading_eigenvalues`].
pub const LEADING_CAP: usize = 20;

/// Orders growth rates: larger real part first, then larger |Im γ|, then
/// positive Im γ before its conjugate.
pub fn growth_order(a: &c64, b: &c64) -> Ordering {
    b.re.total_cmp(&a.re)
        .then_with(|| b.im.abs().total_cmp(&a.im.abs()))
        .then_with(|| b.im.total_cmp(&a.im))
}

/// Rejects discretisation artefacts from a computed spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpuriousFilter {
    /// Eigenvalues with |γ| above `magnitude_factor · (3N)²` are dropped.
    pub magnitude_factor: f64,
    /// Extra collocation points used for the cross-resolution check.
    pub check_offset: usize,
    /// Allowed drift between resolutions, relative to max(|γ|, 1).
    pub drift: f64,
}

impl Default for SpuriousFilter {
    fn default() -> Self {
        SpuriousFilter { magnitude_factor: 10.0, check_offset: 16, drift: 1e-3 }
    }
}

impl SpuriousFilter {
    pub fn magnitude_cap(&self, n: usize) -> f64 {
        self.magnitude_factor * (3.0 * n as f64).powi(2)
    }

    /// True when `gamma` has a partner in `reference` within the allowed drift.
    pub fn confirmed(&self, gamma: c64, reference: &[c64]) -> bool {
        let tol = self.drift * gamma.norm().max(1.0);
        reference.iter().any(|r| (r - gamma).norm() <= tol)
    }
}

/// A normalised eigenfunction. Profiles are sampled on the collocation nodes.
#[derive(Debug, Clone)]
pub struct EigenMode {
    pub gamma: c64,
    pub k: f64,
    pub z: Vec<f64>,
    pub w: Vec<c64>,
    /// Integrated concentration, Φ(z) = ∫_1^z Θ.
    pub phi: Vec<c64>,
    pub theta: Vec<c64>,
    pub t: Vec<c64>,
    /// ‖A y − γ B y‖ / ‖y‖ on the row-scaled pencil.
    pub residual: f64,
}

impl EigenMode {
    pub fn is_stationary(&self) -> bool {
        self.gamma.im.abs() <= 1e-6
    }

    /// Multiplies every profile by `c`.
    pub fn scaled(&self, c: c64) -> EigenMode {
        let s = |v: &[c64]| v.iter().map(|x| x * c).collect();
        EigenMode { w: s(&self.w), phi: s(&self.phi), theta: s(&self.theta), t: s(&self.t), ..self.clone() }
    }

    /// The mode belonging to the conjugate eigenvalue.
    pub fn conjugate(&self) -> EigenMode {
        let s = |v: &[c64]| v.iter().map(|x| x.conj()).collect();
        EigenMode {
            gamma: self.gamma.conj(),
            w: s(&self.w),
            phi: s(&self.phi),
            theta: s(&self.theta),
            t: s(&self.t),
            ..self.clone()
        }
    }

    fn max_amplitude(&self) -> f64 {
        [&self.w, &self.theta, &self.t].iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.norm()))
    }

    /// Largest boundary-condition defect relative to the largest amplitude.
    pub fn boundary_residual(&self, state: &BasicState) -> f64 {
        let grid = &state.grid;
        let d1 = grid.d1();
        let g = &state.gamma;
        let n = self.w.len();
        let last = n - 1;
        let deriv = |v: &[c64], i: usize| (0..n).fold(c64::new(0.0, 0.0), |acc, j| acc + v[j] * d1[(i, j)]);
        let mut worst = 0.0f64;
        for node in [0, last] {
            let flux = self.phi[node] * g.gamma2[node] + self.theta[node] * (2.0 * g.gamma3[node])
                - deriv(&self.theta, node) * 2.0;
            for defect in [self.w[node], deriv(&self.w, node), self.t[node], flux] {
                worst = worst.max(defect.norm());
            }
        }
        worst = worst.max(self.phi[last].norm());
        worst / self.max_amplitude().max(f64::MIN_POSITIVE)
    }
}

/// Growth-rate solver bound to one parameter set and its basic state.
pub struct StabilitySolver {
    params: ModelParams,
    state: Arc<BasicState>,
    basic_solver: Arc<dyn BasicStateSolver>,
    backend: Arc<dyn EigenBackend>,
    filter: SpuriousFilter,
    check: OnceLock<std::result::Result<Arc<BasicState>, String>>,
}

impl StabilitySolver {
    /// Solves the basic state with the default strategies.
    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::with_strategies(params, solvers().default_strategy()?, backends().default_strategy()?)
    }

    pub fn with_strategies(
        params: &ModelParams,
        basic_solver: Arc<dyn BasicStateSolver>,
        backend: Arc<dyn EigenBackend>,
    ) -> Result<Self> {
        params.validate()?;
        let state = Arc::new(basic_solver.solve(params)?);
        Ok(StabilitySolver {
            params: *params,
            state,
            basic_solver,
            backend,
            filter: SpuriousFilter::default(),
            check: OnceLock::new(),
        })
    }

    /// Wraps an already computed basic state.
    pub fn from_state(state: Arc<BasicState>, params: &ModelParams) -> Result<Self> {
        if state.len() != params.n {
            return Err(Error::DimensionMismatch { expected: params.n, found: state.len() });
        }
        Ok(StabilitySolver {
            params: *params,
            state,
            basic_solver: solvers().default_strategy()?,
            backend: backends().default_strategy()?,
            filter: SpuriousFilter::default(),
            check: OnceLock::new(),
        })
    }

    pub fn with_filter(mut self, filter: SpuriousFilter) -> Self {
        self.filter = filter;
        self.check = OnceLock::new();
        self
    }

    pub fn with_backend(mut self, backend: Arc<dyn EigenBackend>) -> Self {
        self.backend = backend;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn state(&self) -> &Arc<BasicState> {
        &self.state
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn operators(&self, k: f64, ra_b: f64) -> Result<StabilityOperators> {
        assemble_with_rayleigh(&self.state, &self.params, k, ra_b)
    }

    fn check_state(&self) -> Result<&Arc<BasicState>> {
        let cached = self.check.get_or_init(|| {
            let p = self.params.with_resolution(self.params.n + self.filter.check_offset);
            self.basic_solver.solve(&p).map(Arc::new).map_err(|e| e.to_string())
        });
        cached.as_ref().map_err(|e| Error::Eigensolver(format!("check resolution failed: {e}")))
    }

    /// Finite eigenvalues below the magnitude cap, sorted by [`growth_order`].
    pub fn raw_spectrum(&self, k: f64, ra_b: f64) -> Result<Vec<c64>> {
        let ops = self.operators(k, ra_b)?;
        self.sorted_capped(&ops)
    }

    fn sorted_capped(&self, ops: &StabilityOperators) -> Result<Vec<c64>> {
        let cap = self.filter.magnitude_cap(ops.nodes());
        let mut vals: Vec<c64> = self.backend.eigenvalues(ops)?.into_iter().filter(|g| g.norm() <= cap).collect();
        vals.sort_by(growth_order);
        Ok(vals)
    }

    /// The full filtered spectrum: capped in magnitude and confirmed at `N + check_offset`.
    pub fn spectrum(&self, k: f64, ra_b: f64) -> Result<Vec<c64>> {
        let vals = self.raw_spectrum(k, ra_b)?;
        let check_state = self.check_state()?;
        let check_params = check_state.params;
        let reference = self.backend.eigenvalues(&assemble_with_rayleigh(check_state, &check_params, k, ra_b)?)?;
        let kept: Vec<c64> = vals.into_iter().filter(|g| self.filter.confirmed(*g, &reference)).collect();
        if kept.is_empty() {
            return Err(Error::AllSpurious);
        }
        Ok(kept)
    }

    /// Up to `count` leading physical eigenvalues; a conjugate partner split
    /// off by the cut is appended so the list stays closed under conjugation.
    pub fn leading_eigenvalues(&self, k: f64, ra_b: f64, count: usize) -> Result<Vec<c64>> {
        if count == 0 || count > LEADING_CAP {
            return Err(Error::InvalidParameter(format!("eigenvalue count must lie in 1..={LEADING_CAP}, got {count}")));
        }
        let all = self.spectrum(k, ra_b)?;
        Ok(truncate_conjugate_closed(all, count))
    }

    /// The confirmed eigenvalue with the largest real part.
    pub fn growth_rate(&self, k: f64, ra_b: f64) -> Result<c64> {
        Ok(self.spectrum(k, ra_b)?[0])
    }

    /// Like [`growth_rate`](Self::growth_rate) without the cross-resolution check.
    /// Used inside root finders; callers confirm the final answer.
    pub fn growth_rate_unchecked(&self, k: f64, ra_b: f64) -> Result<c64> {
        self.raw_spectrum(k, ra_b)?.first().copied().ok_or(Error::AllSpurious)
    }

    /// Eigenfunction for the eigenvalue nearest `target` at `(k, ra_b)`.
    pub fn eigenmode(&self, k: f64, ra_b: f64, target: c64) -> Result<EigenMode> {
        eigenmode_with(&self.operators(k, ra_b)?, target, self.backend.as_ref())
    }

    /// The spectrum as CSV rows `k,Rab,RaT,re_gamma,im_gamma`.
    pub fn spectrum_csv(&self, k: f64, ra_b: f64) -> Result<String> {
        Ok(spectrum_csv(k, ra_b, self.params.ra_t, &self.spectrum(k, ra_b)?))
    }
}

fn truncate_conjugate_closed(mut vals: Vec<c64>, count: usize) -> Vec<c64> {
    if vals.len() > count {
        let last = vals[count - 1];
        let keep = if last.im != 0.0 && (vals[count].conj() - last).norm() <= 1e-10 * last.norm().max(1.0) {
            count + 1
        } else {
            count
        };
        vals.truncate(keep);
    }
    vals
}

pub fn spectrum_csv(k: f64, ra_b: f64, ra_t: f64, vals: &[c64]) -> String {
    let mut csv = CsvBuilder::new(&["k", "Rab", "RaT", "re_gamma", "im_gamma"]);
    for g in vals {
        csv.numeric_row(&[k, ra_b, ra_t, g.re, g.im]);
    }
    csv.finish()
}

/// Leading growth rate with the default strategies.
pub fn growth_rate(state: &Arc<BasicState>, params: &ModelParams, k: f64, ra_b: f64) -> Result<c64> {
    StabilitySolver::from_state(Arc::clone(state), params)?.growth_rate(k, ra_b)
}

/// Up to `count` eigenvalues of the pencil, magnitude-capped and sorted, without the
/// cross-resolution check (which needs a second basic state).
pub fn leading_eigenvalues(ops: &StabilityOperators, count: usize) -> Result<Vec<c64>> {
    let cap = SpuriousFilter::default().magnitude_cap(ops.nodes());
    let mut vals: Vec<c64> = Reduced.eigenvalues(ops)?.into_iter().filter(|g| g.norm() <= cap).collect();
    if vals.is_empty() {
        return Err(Error::AllSpurious);
    }
    vals.sort_by(growth_order);
    Ok(truncate_conjugate_closed(vals, count.max(1)))
}

/// Eigenfunction for the eigenvalue of `ops` nearest `target` (default backend).
pub fn eigenmode(ops: &StabilityOperators, target: c64) -> Result<EigenMode> {
    eigenmode_with(ops, target, &Reduced)
}

fn eigenmode_with(ops: &StabilityOperators, target: c64, backend: &dyn EigenBackend) -> Result<EigenMode> {
    let vals = backend.eigenvalues(ops)?;
    let tolerance = 1e-6 * target.norm().max(1.0);
    let nearest = vals
        .iter()
        .copied()
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
        .filter(|g| (g - target).norm() <= tolerance)
        .ok_or_else(|| Error::NoMatchingEigenvalue { target: format!("{target}"), tolerance })?;
    let (gamma, y) = inverse_iteration(ops, nearest)?;
    Ok(split_mode(ops, gamma, &y))
}

fn to_complex(m: &Mat<f64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

fn dot(x: &Mat<c64>, y: &Mat<c64>) -> c64 {
    (0..x.nrows()).fold(c64::new(0.0, 0.0), |acc, i| acc + x[(i, 0)].conj() * y[(i, 0)])
}

fn col_norm(x: &Mat<c64>) -> f64 {
    (0..x.nrows()).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt()
}

/// Shifted inverse iteration on `(A − σB)⁻¹B`, starting next to an eigenvalue.
fn inverse_iteration(ops: &StabilityOperators, gamma0: c64) -> Result<(c64, Mat<c64>)> {
    let size = ops.order();
    let a = to_complex(&ops.a);
    let b = to_complex(&ops.b);
    let sigma = gamma0 + c64::new(1e-9, 1e-9) * gamma0.norm().max(1.0);
    let shifted = Mat::<c64>::from_fn(size, size, |i, j| a[(i, j)] - sigma * b[(i, j)]);
    let lu = shifted.partial_piv_lu();
    let mut x = Mat::<c64>::from_fn(size, 1, |i, _| c64::new(1.0 + 0.1 * (i as f64).sin(), 0.05 * (i as f64).cos()));
    let scale = col_norm(&x);
    x = x * faer::Scale(c64::new(1.0 / scale, 0.0));
    let mut gamma = gamma0;
    for _ in 0..30 {
        let bx = &b * &x;
        let y = lu.solve(&bx);
        let nu = dot(&x, &y) / dot(&x, &x);
        let next = sigma + nu.inv();
        let ny = col_norm(&y);
        if !ny.is_finite() || ny == 0.0 {
            return Err(Error::Eigensolver("inverse iteration broke down".into()));
        }
        x = y * faer::Scale(c64::new(1.0 / ny, 0.0));
        let done = (next - gamma).norm() <= 1e-13 * next.norm().max(1.0);
        gamma = next;
        if done {
            break;
        }
    }
    // Rayleigh-type refinement along the converged direction
    let ax = &a * &x;
    let bx = &b * &x;
    let denom = dot(&bx, &bx);
    if denom.norm() > 0.0 {
        gamma = dot(&bx, &ax) / denom;
    }
    Ok((gamma, x))
}

fn split_mode(ops: &StabilityOperators, gamma: c64, y: &Mat<c64>) -> EigenMode {
    let n = ops.nodes();
    let take = |off: usize| (0..n).map(|i| y[(off + i, 0)]).collect::<Vec<c64>>();
    let (w, theta, t) = (take(0), take(n), take(2 * n));
    let pivot = |v: &[c64]| v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    let mut p = pivot(&w);
    if p.norm() <= 1e-12 * col_norm(y) {
        // velocity-free mode (decoupled blocks): fix the phase on the largest component
        p = y.col(0).iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(c64::new(1.0, 0.0));
    }
    let c = p.inv();
    let s = ops.state.grid.integration();
    let norm = |v: Vec<c64>| v.into_iter().map(|x| x * c).collect::<Vec<c64>>();
    let (w, theta, t) = (norm(w), norm(theta), norm(t));
    let phi: Vec<c64> =
        (0..n).map(|i| (0..n).fold(c64::new(0.0, 0.0), |acc, j| acc + theta[j] * s[(i, j)])).collect();

    let size = ops.order();
    let mut num = 0.0;
    let mut den = 0.0;
    let full: Vec<c64> = w.iter().chain(theta.iter()).chain(t.iter()).copied().collect();
    for i in 0..size {
        let mut r = c64::new(0.0, 0.0);
        for j in 0..size {
            r += full[j] * (ops.a[(i, j)] - gamma * ops.b[(i, j)]);
        }
        num += r.norm_sqr();
        den += full[i].norm_sqr();
    }
    let residual = (num / den).sqrt();
    EigenMode { gamma, k: ops.k, z: ops.state.z.clone(), w, phi, theta, t, residual }
}
