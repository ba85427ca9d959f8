use std::f64::consts::PI;
use std::sync::Arc;

use photoconv::basic_state::solve_basic_state;
use photoconv::model::ModelParams;
use photoconv::neutral::{classify_bifurcation, Bifurcation, NeutralSolver};
use photoconv::patterns::{oscillation_snapshots, time_series};
use photoconv::stability::StabilitySolver;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn decoupled_spectrum_is_analytic(k in 0.3f64..5.0, le in 0.5f64..3.0) {
        let p = ModelParams { vc: 0.0, le, n: 40, ..ModelParams::default() };
        let solver = StabilitySolver::new(&p).unwrap();
        let vals = solver.spectrum(k, 0.0).unwrap();
        let has = |target: f64| vals.iter().any(|g| g.im.abs() < 1e-8 && rel(g.re, target) < 1e-6);
        for j in 1..=3 {
            let jj = (j as f64 * PI).powi(2);
            prop_assert!(has(-le * (k * k + jj)), "Dirichlet j = {}", j);
            prop_assert!(has(-(k * k + jj)), "Neumann j = {}", j);
        }
    }
}

#[test]
fn classical_rigid_rigid_onset() {
    // without swimming the layer reduces to rigid-rigid thermal convection
    let p = ModelParams { vc: 0.0, ra_t: 1707.762, ..ModelParams::default() };
    let solver = StabilitySolver::new(&p).unwrap();
    let g = solver.growth_rate(3.1163, 0.0).unwrap();
    assert!(g.re.abs() < 1e-4, "{g}");
    let below = StabilitySolver::new(&ModelParams { ra_t: 1650.0, ..p }).unwrap();
    assert!(below.growth_rate(3.1163, 0.0).unwrap().re < 0.0);
}

#[test]
fn spectra_are_closed_under_conjugation() {
    let p = ModelParams { kappa: 1.0, ra_t: 500.0, ..ModelParams::default() }.with_critical_intensity(0.53).unwrap();
    let solver = StabilitySolver::new(&p).unwrap();
    let vals = solver.spectrum(2.6, 440.0).unwrap();
    for g in &vals {
        let tol = 1e-8 * g.norm().max(1.0);
        assert!(vals.iter().any(|h| (h.conj() - g).norm() < tol), "{g} has no partner");
    }
}

#[test]
fn cheap_state_reuse_matches_fresh_solver() {
    let p = ModelParams { ra_t: 1000.0, ..ModelParams::default() };
    let state = Arc::new(solve_basic_state(&p).unwrap());
    let a = StabilitySolver::from_state(state, &p).unwrap().growth_rate(2.5, 200.0).unwrap();
    let b = StabilitySolver::new(&p).unwrap().growth_rate(2.5, 200.0).unwrap();
    assert!((a - b).norm() < 1e-12);
}

#[test]
fn hopf_mode_travels_at_uniform_speed() {
    let p = ModelParams { kappa: 1.0, ra_t: 1000.0, ..ModelParams::default() }.with_critical_intensity(0.53).unwrap();
    let solver = StabilitySolver::new(&p).unwrap();
    let neutral = NeutralSolver::new(&solver);
    let k = 2.68;
    let point = neutral.confirm(&neutral.neutral_rayleigh(k, (0.0, 2000.0)).unwrap()).unwrap();
    let Bifurcation::Hopf { period } = classify_bifurcation(&point) else {
        panic!("expected an oscillatory onset, got {point:?}");
    };
    let gamma = solver.growth_rate(k, point.ra_b).unwrap();
    assert!(gamma.re.abs() < 1e-6 * point.ra_b.max(1.0));
    let mode = solver.eigenmode(k, point.ra_b, gamma).unwrap();
    assert!(mode.residual < 1e-8, "residual {}", mode.residual);
    assert!(mode.boundary_residual(solver.state()) < 1e-8);

    let nx = 121;
    let snaps = oscillation_snapshots(&mode, 4, nx, 33).unwrap();
    let mid = 16;
    let shifts: Vec<usize> = snaps
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0].w1[mid][..nx - 1], &w[1].w1[mid][..nx - 1]);
            (0..nx - 1)
                .max_by(|&s, &t| corr(a, b, s).total_cmp(&corr(a, b, t)))
                .unwrap()
        })
        .collect();
    assert!(shifts[0] != 0);
    for s in &shifts {
        assert!((*s as f64 - shifts[0] as f64).abs() <= 0.05 * shifts[0] as f64 + 1.0, "{shifts:?}");
    }

    let series = time_series(&mode, (0.3, 0.5), period, 400).unwrap();
    let (first, last) = (series.w1[0], *series.w1.last().unwrap());
    assert!((first - last).abs() < 1e-8);
    assert!((series.dw1_dt[0] - series.dw1_dt[400]).abs() < 1e-8 * series.dw1_dt[0].abs().max(1.0));
}

// circular cross-correlation of b against a shifted by s columns
fn corr(a: &[f64], b: &[f64], s: usize) -> f64 {
    let n = a.len();
    (0..n).map(|i| a[i] * b[(i + s) % n]).sum()
}
