use photoconv::model::ModelParams;
use photoconv::neutral::{root_strategies, KWindow, NeutralSolver};
use photoconv::stability::StabilitySolver;

fn family(kappa: f64, gc: f64, ra_t: f64) -> StabilitySolver {
    let p = ModelParams { kappa, ra_t, ..ModelParams::default() }.with_critical_intensity(gc).unwrap();
    StabilitySolver::new(&p).unwrap()
}

#[test]
fn reported_points_are_neutral() {
    let solver = family(0.5, 0.66, 500.0);
    let neutral = NeutralSolver::new(&solver);
    for k in [1.5, 3.4, 6.0] {
        let p = neutral.neutral_rayleigh(k, (0.0, 2000.0)).unwrap();
        let g = solver.growth_rate(k, p.ra_b).unwrap();
        assert!(g.re.abs() < 1e-6 * p.ra_b.abs().max(1.0), "k = {k}: {g}");
        let above = solver.growth_rate(k, p.ra_b * 1.02).unwrap().re;
        let below = solver.growth_rate(k, p.ra_b * 0.98).unwrap().re;
        assert!(above > 0.0 && below < 0.0);
    }
}

#[test]
fn root_strategies_agree() {
    let solver = family(0.5, 0.8, 1000.0);
    let reg = root_strategies();
    let brent = NeutralSolver::new(&solver).with_roots(reg.get("brent").unwrap());
    let bisect = NeutralSolver::new(&solver).with_roots(reg.get("bisection").unwrap());
    let a = brent.neutral_rayleigh(2.7, (0.0, 2000.0)).unwrap();
    let b = bisect.neutral_rayleigh(2.7, (0.0, 2000.0)).unwrap();
    assert!((a.ra_b - b.ra_b).abs() < 1e-6 * a.ra_b);
}

#[test]
fn warm_start_finds_the_same_root() {
    let solver = family(1.0, 0.5, 0.0);
    let neutral = NeutralSolver::new(&solver);
    let cold = neutral.neutral_rayleigh(3.5, (0.0, 2000.0)).unwrap();
    let warm = neutral.neutral_rayleigh_near(3.5, cold.ra_b * 1.03).unwrap();
    assert!((cold.ra_b - warm.ra_b).abs() < 1e-6 * cold.ra_b);
}

#[test]
fn critical_point_is_the_curve_minimum() {
    let solver = family(0.5, 0.66, 1000.0);
    let neutral = NeutralSolver::new(&solver);
    let window = KWindow { k_min: 2.0, k_max: 5.0, samples: 10 };
    let crit = neutral.find_critical(&window).unwrap();
    assert!(!crit.infinite_wavelength && !crit.oscillatory);
    for dk in [-0.05, 0.05] {
        let p = neutral.neutral_rayleigh_near(crit.kc + dk, crit.rab_c).unwrap();
        assert!(p.ra_b >= crit.rab_c - 1e-6 * crit.rab_c, "{} < {}", p.ra_b, crit.rab_c);
    }
    assert!((crit.lambda_c * crit.kc - 2.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn heating_lowers_the_threshold() {
    let k = 3.3;
    let mut last = f64::INFINITY;
    for ra_t in [-1000.0, 0.0, 1000.0] {
        let solver = family(0.5, 0.66, ra_t);
        let r = NeutralSolver::new(&solver).neutral_rayleigh(k, (0.0, 2000.0)).unwrap().ra_b;
        assert!(r < last, "RaT = {ra_t}: {r} !< {last}");
        last = r;
    }
}
