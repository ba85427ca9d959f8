//! Motionless equilibrium: cell concentration, light field, temperature and
//! the Γ coefficient profiles that feed the perturbation operators.
//!
//! The cumulative concentration ω̄(z) = ∫_1^z n_s obeys
//! ω̄'' − V_c M(G_s) ω̄' = 0 with ω̄(0) = −1, ω̄(1) = 0 and G_s = G_t e^{κω̄}.
//! Two interchangeable solvers are provided:
//!
//! * `collocation` (default): damped Newton on the collocated equations,
//!   with n_s as unknown and ω̄ recovered through the spectral integration
//!   matrix, so the top condition ω̄(1) = 0 holds exactly.
//! * `shooting`: integrates the equivalent first-order system downward
//!   from the top wall and adjusts n_s(1) until ω̄(0) = −1.

use std::sync::Arc;

use faer::prelude::*;
use faer::Mat;

use crate::error::{Error, Result};
use crate::io::CsvBuilder;
use crate::model::{taxis, taxis_derivatives, ModelParams};
use crate::registry::{Named, Registry};
use crate::spectral::{matvec, ChebGrid};

/// Tolerance on the collocated Newton residual.
pub const NEWTON_TOLERANCE: f64 = 1e-12;
/// Iteration cap of the damped Newton loop.
pub const NEWTON_MAX_ITER: usize = 50;
/// Defect of dn_s/dz = V_c M n_s above which a state is considered inconsistent.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BasicState {
    pub params: ModelParams,
    pub grid: Arc<ChebGrid>,
    pub z: Vec<f64>,
    pub omega_bar: Vec<f64>,
    pub ns: Vec<f64>,
    /// dn_s/dz = V_c M_s n_s.
    pub dns: Vec<f64>,
    pub gs: Vec<f64>,
    pub ts: Vec<f64>,
    pub gamma: GammaProfiles,
    /// Max-norm residual of the discrete nonlinear system at convergence.
    pub solver_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaProfiles {
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub gamma3: Vec<f64>,
}

/// A strategy for solving the equilibrium boundary-value problem.
pub trait BasicStateSolver: Named + Send + Sync {
    fn solve(&self, params: &ModelParams) -> Result<BasicState>;
}

/// Registry of the available equilibrium solvers; `collocation` is the default.
pub fn solvers() -> Registry<dyn BasicStateSolver> {
    let mut reg: Registry<dyn BasicStateSolver> = Registry::new("basic-state solver", "collocation");
    reg.register(Arc::new(CollocationNewton::default()));
    reg.register(Arc::new(Shooting::default()));
    reg
}

/// Solves the equilibrium with the default strategy.
pub fn solve_basic_state(params: &ModelParams) -> Result<BasicState> {
    CollocationNewton::default().solve(params)
}

#[derive(Debug, Clone, Copy)]
pub struct CollocationNewton {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for CollocationNewton {
    fn default() -> Self {
        CollocationNewton { tolerance: NEWTON_TOLERANCE, max_iter: NEWTON_MAX_ITER }
    }
}

impl Named for CollocationNewton {
    fn name(&self) -> &'static str {
        "collocation"
    }
}

impl CollocationNewton {
    fn residual(grid: &ChebGrid, p: &ModelParams, ns: &[f64]) -> Vec<f64> {
        let omega = grid.cumulative_from_top(ns);
        let dn = grid.derivative(ns);
        let mut r: Vec<f64> = (0..ns.len())
            .map(|i| {
                let g = p.gt * (p.kappa * omega[i]).exp();
                dn[i] - p.vc * taxis(g, p.beta) * ns[i]
            })
            .collect();
        // the bottom row carries the normalisation ω̄(0) = −1 instead
        r[0] = omega[0] + 1.0;
        r
    }
}

impl BasicStateSolver for CollocationNewton {
    fn solve(&self, params: &ModelParams) -> Result<BasicState> {
        params.validate()?;
        let n = params.n;
        let grid = Arc::new(ChebGrid::new(n));
        let s = grid.integration();
        let d = grid.d1();
        let p = *params;

        let mut ns = vec![1.0; n];
        let mut res = Self::residual(&grid, &p, &ns);
        let mut norm = max_abs(&res);
        let mut trace = vec![norm];
        let mut iter = 0;
        while norm > self.tolerance {
            if iter == self.max_iter {
                return Err(Error::NonConvergence { iterations: iter, trace });
            }
            iter += 1;
            let omega = grid.cumulative_from_top(&ns);
            let mut jac = Mat::<f64>::zeros(n, n);
            for i in 1..n {
                let g = p.gt * (p.kappa * omega[i]).exp();
                let m = taxis(g, p.beta);
                let (dm, _) = taxis_derivatives(g, p.beta);
                let coupling = p.vc * ns[i] * dm * p.kappa * g;
                for j in 0..n {
                    jac[(i, j)] = d[(i, j)] - coupling * s[(i, j)];
                }
                jac[(i, i)] -= p.vc * m;
            }
            for j in 0..n {
                jac[(0, j)] = s[(0, j)];
            }
            let rhs = Mat::<f64>::from_fn(n, 1, |i, _| -res[i]);
            let step = jac.partial_piv_lu().solve(&rhs);

            let mut damping = 1.0;
            loop {
                let trial: Vec<f64> = (0..n).map(|i| ns[i] + damping * step[(i, 0)]).collect();
                let trial_res = Self::residual(&grid, &p, &trial);
                let trial_norm = max_abs(&trial_res);
                if trial_norm < norm || damping < 1.0 / 1024.0 {
                    ns = trial;
                    res = trial_res;
                    norm = trial_norm;
                    break;
                }
                damping *= 0.5;
            }
            trace.push(norm);
            if !norm.is_finite() {
                return Err(Error::NonConvergence { iterations: iter, trace });
            }
            let step_norm = (0..n).fold(0.0f64, |m, i| m.max(step[(i, 0)].abs()));
            // rounding floor: the update no longer changes the iterate
            if step_norm < 1e-14 * max_abs(&ns) && norm < 1e-10 {
                break;
            }
        }
        log::debug!("collocation basic state converged in {iter} iterations, residual {norm:e}");
        Ok(assemble_state(p, grid, ns, norm))
    }
}

/// Fourth-order Runge–Kutta shooting from the top wall.
#[derive(Debug, Clone, Copy)]
pub struct Shooting {
    /// Upper bound on the RK4 step.
    pub max_step: f64,
}

impl Default for Shooting {
    fn default() -> Self {
        Shooting { max_step: 2.5e-4 }
    }
}

impl Named for Shooting {
    fn name(&self) -> &'static str {
        "shooting"
    }
}

impl Shooting {
    /// Integrates (n, ω̄) from z = 1 down through the nodes.
    fn integrate(&self, p: &ModelParams, z: &[f64], top_concentration: f64) -> (Vec<f64>, Vec<f64>) {
        let rhs = |_z: f64, y: [f64; 2]| -> [f64; 2] {
            let g = p.gt * (p.kappa * y[1]).exp();
            [p.vc * taxis(g, p.beta) * y[0], y[0]]
        };
        let n = z.len();
        let mut ns = vec![0.0; n];
        let mut omega = vec![0.0; n];
        let mut y = [top_concentration, 0.0];
        ns[n - 1] = y[0];
        for i in (0..n - 1).rev() {
            let (z0, z1) = (z[i + 1], z[i]);
            let steps = ((z0 - z1) / self.max_step).ceil().max(1.0) as usize;
            let h = (z1 - z0) / steps as f64;
            let mut zz = z0;
            for _ in 0..steps {
                let k1 = rhs(zz, y);
                let k2 = rhs(zz + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
                let k3 = rhs(zz + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
                let k4 = rhs(zz + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
                y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
                zz += h;
            }
            ns[i] = y[0];
            omega[i] = y[1];
        }
        (ns, omega)
    }
}

impl BasicStateSolver for Shooting {
    fn solve(&self, params: &ModelParams) -> Result<BasicState> {
        params.validate()?;
        let p = *params;
        let grid = Arc::new(ChebGrid::new(p.n));
        let z = grid.nodes().to_vec();
        // ω̄(0) + 1 as a function of ln n_s(1); decreasing in n_s(1)
        let miss = |log_a: f64| self.integrate(&p, &z, log_a.exp()).1[0] + 1.0;
        let lo = -60.0;
        let mut hi = 0.0;
        let mut expansions = 0;
        while miss(hi) > 0.0 {
            hi += 2.0;
            expansions += 1;
            if expansions > 30 {
                return Err(Error::NonConvergence { iterations: expansions, trace: vec![miss(hi)] });
            }
        }
        let log_a = crate::roots::bisect_secant(miss, lo, hi, 1e-15)
            .ok_or(Error::NonConvergence { iterations: 0, trace: vec![miss(lo), miss(hi)] })?;
        let (ns, omega) = self.integrate(&p, &z, log_a.exp());
        let defect = (omega[0] + 1.0).abs();
        Ok(assemble_state(p, grid, ns, defect))
    }
}

fn assemble_state(p: ModelParams, grid: Arc<ChebGrid>, ns: Vec<f64>, solver_residual: f64) -> BasicState {
    let z = grid.nodes().to_vec();
    let omega_bar = grid.cumulative_from_top(&ns);
    let gs: Vec<f64> = omega_bar.iter().map(|w| p.gt * (p.kappa * w).exp()).collect();
    let dns: Vec<f64> = ns.iter().zip(&gs).map(|(n, g)| p.vc * taxis(*g, p.beta) * n).collect();
    let ts = z.iter().map(|z| 1.0 - z).collect();
    let gamma = analytic_gamma(&p, &ns, &gs);
    BasicState { params: p, grid, z, omega_bar, ns, dns, gs, ts, gamma, solver_residual }
}

fn analytic_gamma(p: &ModelParams, ns: &[f64], gs: &[f64]) -> GammaProfiles {
    let (k, vc) = (p.kappa, p.vc);
    let mut gamma1 = Vec::with_capacity(ns.len());
    let mut gamma2 = Vec::with_capacity(ns.len());
    let mut gamma3 = Vec::with_capacity(ns.len());
    for (&n, &g) in ns.iter().zip(gs) {
        let m = taxis(g, p.beta);
        let (dm, d2m) = taxis_derivatives(g, p.beta);
        // d/dz (n G M') with n' = V_c M n and G' = κ n G
        gamma1.push(k * vc * n * g * (vc * m * dm + k * n * dm + k * n * g * d2m));
        gamma2.push(2.0 * k * vc * n * g * dm);
        gamma3.push(vc * m);
    }
    GammaProfiles { gamma1, gamma2, gamma3 }
}

/// Γ₁, Γ₂, Γ₃ for a solved state; refuses states whose concentration equation defect is too large.
pub fn gamma_coefficients(state: &BasicState, params: &ModelParams) -> Result<GammaProfiles> {
    if state.ns.len() != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, found: state.ns.len() });
    }
    let defect = ode_defect(state, params);
    if !(defect <= CONSISTENCY_TOLERANCE) {
        return Err(Error::InconsistentState { residual: defect, tolerance: CONSISTENCY_TOLERANCE });
    }
    Ok(analytic_gamma(params, &state.ns, &state.gs))
}

fn ode_defect(state: &BasicState, p: &ModelParams) -> f64 {
    let dn = state.grid.derivative(&state.ns);
    state
        .ns
        .iter()
        .zip(&state.gs)
        .zip(&dn)
        .map(|((n, g), d)| (d - p.vc * taxis(*g, p.beta) * n).abs())
        .fold(0.0, f64::max)
}

/// Max-norm defect of the concentration equation plus boundary, light-field and normalisation defects.
pub fn basic_state_residual(state: &BasicState, params: &ModelParams) -> f64 {
    let grid = &state.grid;
    let n = state.ns.len();
    if n != grid.len() {
        return f64::INFINITY;
    }
    let mut total = ode_defect(state, params);
    total += (state.omega_bar[0] + 1.0).abs();
    total += state.omega_bar[n - 1].abs();
    total += (grid.integral(&state.ns) - 1.0).abs();
    let light = state
        .omega_bar
        .iter()
        .zip(&state.gs)
        .map(|(w, g)| (g - params.gt * (params.kappa * w).exp()).abs())
        .fold(0.0, f64::max);
    total + light
}

impl BasicState {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// ∫₀¹ n_s dz by Clenshaw–Curtis quadrature.
    pub fn total_cells(&self) -> f64 {
        self.grid.integral(&self.ns)
    }

    /// Interpolated concentration at an arbitrary height.
    pub fn concentration_at(&self, z: f64) -> f64 {
        self.grid.interpolate(&self.ns, z)
    }

    /// Numerical derivative of n_s G_s M'(G_s) scaled by κV_c; the
    /// independent check on the analytic Γ₁.
    pub fn gamma1_by_differentiation(&self) -> Vec<f64> {
        let p = &self.params;
        let f: Vec<f64> =
            self.ns.iter().zip(&self.gs).map(|(n, g)| n * g * taxis_derivatives(*g, p.beta).0).collect();
        matvec(self.grid.d1(), &f).into_iter().map(|v| p.kappa * p.vc * v).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::new(&["z", "omega_bar", "ns", "Gs", "Ts", "gamma1", "gamma2", "gamma3"]);
        for i in 0..self.len() {
            csv.numeric_row(&[
                self.z[i],
                self.omega_bar[i],
                self.ns[i],
                self.gs[i],
                self.ts[i],
                self.gamma.gamma1[i],
                self.gamma.gamma2[i],
                self.gamma.gamma3[i],
            ]);
        }
        csv.finish()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
