//! Neutral curves in the (k, Ra_b) plane and the critical onset point.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_full, CsvBuilder};
use crate::model::ModelParams;
use crate::registry::{Named, Registry};
use crate::roots::{brent, golden_section};
use crate::stability::StabilitySolver;

/// |Im γ| above which a neutral mode counts as oscillatory.
pub const OSCILLATION_THRESHOLD: f64 = 1e-6;
/// Wavenumbers below this at the lower window edge are reported as infinite wavelength.
pub const INFINITE_WAVELENGTH_K: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Stationary,
    Oscillatory,
}

impl Branch {
    pub fn from_frequency(im: f64) -> Branch {
        if im.abs() > OSCILLATION_THRESHOLD {
            Branch::Oscillatory
        } else {
            Branch::Stationary
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Stationary => "stationary",
            Branch::Oscillatory => "oscillatory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralPoint {
    pub k: f64,
    #[serde(rename = "Rab")]
    pub ra_b: f64,
    /// Non-negative member of the conjugate pair.
    pub im_gamma: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bifurcation {
    Stationary,
    Hopf { period: f64 },
}

pub fn classify_bifurcation(point: &NeutralPoint) -> Bifurcation {
    if point.im_gamma.abs() > OSCILLATION_THRESHOLD {
        Bifurcation::Hopf { period: 2.0 * PI / point.im_gamma.abs() }
    } else {
        Bifurcation::Stationary
    }
}

/// Bracketed scalar root finding used on Re γ_max(Ra_b).
pub trait RootStrategy: Named + Send + Sync {
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        f: &mut dyn FnMut(f64) -> Result<f64>,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        rtol: f64,
    ) -> Result<f64>;
}

/// Registry of root strategies; `brent` is the default.
pub fn root_strategies() -> Registry<dyn RootStrategy> {
    let mut reg: Registry<dyn RootStrategy> = Registry::new("root finder", "brent");
    reg.register(Arc::new(Brent));
    reg.register(Arc::new(Bisection));
    reg
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Brent;

impl Named for Brent {
    fn name(&self) -> &'static str {
        "brent"
    }
}

impl RootStrategy for Brent {
    fn solve(
        &self,
        f: &mut dyn FnMut(f64) -> Result<f64>,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        rtol: f64,
    ) -> Result<f64> {
        brent(f, lo, hi, f_lo, f_hi, rtol, rtol, 100)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Bisection;

impl Named for Bisection {
    fn name(&self) -> &'static str {
        "bisection"
    }
}

impl RootStrategy for Bisection {
    fn solve(
        &self,
        f: &mut dyn FnMut(f64) -> Result<f64>,
        mut lo: f64,
        mut hi: f64,
        mut f_lo: f64,
        _f_hi: f64,
        rtol: f64,
    ) -> Result<f64> {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo).abs() <= rtol * mid.abs().max(1.0) {
                return Ok(mid);
            }
            let fm = f(mid)?;
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm.signum() == f_lo.signum() {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Wavenumber window for curve tracing and the critical search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KWindow {
    pub k_min: f64,
    pub k_max: f64,
    pub samples: usize,
}

impl Default for KWindow {
    fn default() -> Self {
        KWindow { k_min: 0.01, k_max: 10.0, samples: 60 }
    }
}

impl KWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0 && self.k_max > self.k_min && self.k_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wavenumber window must satisfy 0 < k_min < k_max, got ({}, {})",
                self.k_min, self.k_max
            )));
        }
        if self.samples < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 k samples, got {}", self.samples)));
        }
        Ok(())
    }

    /// Logarithmically spaced sample wavenumbers, endpoints included.
    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.k_min.ln(), self.k_max.ln());
        let m = self.samples - 1;
        (0..self.samples).map(|i| if i == m { self.k_max } else { (a + (b - a) * i as f64 / m as f64).exp() }).collect()
    }
}

/// Tolerances and bracketing policy for the neutral search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralSettings {
    pub bracket: (f64, f64),
    pub max_doublings: usize,
    /// Relative tolerance on the neutral Ra_b.
    pub rab_rtol: f64,
    /// Relative tolerance on k for the golden-section refinement.
    pub k_rtol: f64,
    /// Points in the cold-start scan of the bracket.
    pub scan_points: usize,
    /// Grid refinement factor around branch switches.
    pub branch_refinement: usize,
}

impl Default for NeutralSettings {
    fn default() -> Self {
        NeutralSettings {
            bracket: (0.0, 2000.0),
            max_doublings: 10,
            rab_rtol: 1e-8,
            k_rtol: 1e-5,
            scan_points: 9,
            branch_refinement: 4,
        }
    }
}

/// Neutral-curve search bound to one stability solver.
pub struct NeutralSolver<'a> {
    pub stability: &'a StabilitySolver,
    pub settings: NeutralSettings,
    pub roots: Arc<dyn RootStrategy>,
}

impl<'a> NeutralSolver<'a> {
    pub fn new(stability: &'a StabilitySolver) -> Self {
        NeutralSolver { stability, settings: NeutralSettings::default(), roots: Arc::new(Brent) }
    }

    pub fn with_settings(mut self, settings: NeutralSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_roots(mut self, roots: Arc<dyn RootStrategy>) -> Self {
        self.roots = roots;
        self
    }

    fn re_growth(&self, k: f64, ra_b: f64) -> Result<f64> {
        Ok(self.stability.growth_rate_unchecked(k, ra_b)?.re)
    }

    /// Neutral Ra_b at `k`, starting from `bracket`. The bracket is scanned for
    /// the lowest sign change and expanded when it holds none.
    pub fn neutral_rayleigh(&self, k: f64, bracket: (f64, f64)) -> Result<NeutralPoint> {
        let (lo, hi, f_lo, f_hi) = self.bracket_root(k, bracket, true)?;
        self.finish_root(k, lo, hi, f_lo, f_hi)
    }

    /// Same as [`neutral_rayleigh`](Self::neutral_rayleigh) but starts from a
    /// nearby root with secant steps, falling back to the bracketed search.
    pub fn neutral_rayleigh_near(&self, k: f64, guess: f64) -> Result<NeutralPoint> {
        if let Some(root) = self.secant(k, guess)? {
            return self.point_at(k, root);
        }
        let half = 0.05 * guess.abs().max(20.0);
        match self.bracket_root(k, (guess - half, guess + half), false) {
            Ok((lo, hi, f_lo, f_hi)) => self.finish_root(k, lo, hi, f_lo, f_hi),
            Err(Error::BracketExpansion { .. }) => self.neutral_rayleigh(k, self.settings.bracket),
            Err(e) => Err(e),
        }
    }

    // Open secant iteration; `None` when it stalls or wanders away from the guess.
    fn secant(&self, k: f64, guess: f64) -> Result<Option<f64>> {
        let scale = guess.abs().max(10.0);
        let (mut x0, mut x1) = (guess, guess + 1e-3 * scale);
        let (mut f0, mut f1) = (self.re_growth(k, x0)?, self.re_growth(k, x1)?);
        for _ in 0..12 {
            if f1 == f0 {
                return Ok(None);
            }
            let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
            if !x2.is_finite() || (x2 - guess).abs() > 0.5 * scale {
                return Ok(None);
            }
            if (x2 - x1).abs() <= self.settings.rab_rtol * x2.abs().max(1.0) {
                return Ok(Some(x2));
            }
            (x0, f0) = (x1, f1);
            x1 = x2;
            f1 = self.re_growth(k, x1)?;
        }
        Ok(None)
    }

    fn finish_root(&self, k: f64, lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<NeutralPoint> {
        let mut f = |r: f64| self.re_growth(k, r);
        let root = self.roots.solve(&mut f, lo, hi, f_lo, f_hi, self.settings.rab_rtol)?;
        self.point_at(k, root)
    }

    fn point_at(&self, k: f64, root: f64) -> Result<NeutralPoint> {
        let im = self.stability.growth_rate_unchecked(k, root)?.im.abs();
        Ok(NeutralPoint { k, ra_b: root, im_gamma: im, branch: Branch::from_frequency(im) })
    }

    /// Recomputes the leading eigenvalue at `point` with the cross-resolution
    /// check and returns the point with the confirmed frequency.
    pub fn confirm(&self, point: &NeutralPoint) -> Result<NeutralPoint> {
        let gamma = self.stability.growth_rate(point.k, point.ra_b)?;
        let tol = 1e-6 * point.ra_b.abs().max(1.0);
        if gamma.re.abs() > tol {
            return Err(Error::Eigensolver(format!(
                "leading mode at k = {}, Rab = {} failed the cross-resolution check (Re gamma = {:e})",
                point.k, point.ra_b, gamma.re
            )));
        }
        let im = gamma.im.abs();
        Ok(NeutralPoint { im_gamma: im, branch: Branch::from_frequency(im), ..*point })
    }

    fn bracket_root(&self, k: f64, bracket: (f64, f64), scan: bool) -> Result<(f64, f64, f64, f64)> {
        let (mut lo, mut hi) = bracket;
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!("empty Rab bracket ({lo}, {hi})")));
        }
        let mut f_lo = self.re_growth(k, lo)?;
        // unstable already at the lower end: move it down
        let mut width = hi - lo;
        let mut steps = 0;
        while f_lo > 0.0 {
            if steps == self.settings.max_doublings {
                return Err(Error::BracketExpansion { k, doublings: steps, lo, hi });
            }
            hi = lo;
            lo -= width;
            width *= 2.0;
            f_lo = self.re_growth(k, lo)?;
            steps += 1;
        }
        let mut f_hi = self.re_growth(k, hi)?;
        if f_hi > 0.0 && scan {
            return self.scan_lowest(k, lo, hi, f_lo, f_hi);
        }
        let mut steps = 0;
        while f_hi <= 0.0 {
            if steps == self.settings.max_doublings {
                return Err(Error::BracketExpansion { k, doublings: steps, lo, hi });
            }
            lo = hi;
            f_lo = f_hi;
            hi += width;
            width *= 2.0;
            f_hi = self.re_growth(k, hi)?;
            steps += 1;
        }
        Ok((lo, hi, f_lo, f_hi))
    }

    // Samples the bracket to find the smallest crossing.
    fn scan_lowest(&self, k: f64, lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<(f64, f64, f64, f64)> {
        let m = self.settings.scan_points.max(2);
        let mut xs = vec![lo];
        let mut fs = vec![f_lo];
        for i in 1..m {
            let x = lo + (hi - lo) * i as f64 / m as f64;
            xs.push(x);
            fs.push(self.re_growth(k, x)?);
        }
        xs.push(hi);
        fs.push(f_hi);
        let crossings: Vec<usize> = (0..xs.len() - 1).filter(|&i| (fs[i] <= 0.0) != (fs[i + 1] <= 0.0)).collect();
        if crossings.len() > 1 {
            log::warn!("growth rate is not monotone in Rab at k = {k}: {} sign changes in [{lo}, {hi}]", crossings.len());
        }
        let i = crossings[0];
        Ok((xs[i], xs[i + 1], fs[i], fs[i + 1]))
    }

    /// One neutral point per log-spaced sample, with extra samples around branch switches.
    pub fn trace(&self, window: &KWindow) -> Result<Vec<CurveSample>> {
        window.validate()?;
        let grid = window.grid();
        let mut out: Vec<CurveSample> = Vec::with_capacity(grid.len());
        let mut guess: Option<f64> = None;
        for (i, &k) in grid.iter().enumerate() {
            let sample = self.sample(k, &mut guess);
            if i > 0 {
                let switched = matches!(
                    (out.last().and_then(|s| s.point.as_ref()), sample.point.as_ref()),
                    (Some(a), Some(b)) if a.branch != b.branch
                );
                if switched && self.settings.branch_refinement > 1 {
                    let prev = out.last().map(|s| s.k).unwrap_or(k);
                    let mut inner_guess = out.last().and_then(|s| s.point.map(|p| p.ra_b));
                    let r = self.settings.branch_refinement;
                    for j in 1..r {
                        let kk = (prev.ln() + (k.ln() - prev.ln()) * j as f64 / r as f64).exp();
                        out.push(self.sample(kk, &mut inner_guess));
                    }
                    guess = sample.point.map(|p| p.ra_b);
                }
            }
            out.push(sample);
        }
        Ok(out)
    }

    fn sample(&self, k: f64, guess: &mut Option<f64>) -> CurveSample {
        let result = match *guess {
            Some(g) => self.neutral_rayleigh_near(k, g),
            None => self.neutral_rayleigh(k, self.settings.bracket),
        };
        match result {
            Ok(p) => {
                *guess = Some(p.ra_b);
                CurveSample { k, point: Some(p), error: None }
            }
            Err(e) => {
                log::debug!("no neutral point at k = {k}: {e}");
                *guess = None;
                CurveSample { k, point: None, error: Some(e.to_string()) }
            }
        }
    }

    /// Lowest point of the neutral curve over `window`.
    pub fn find_critical(&self, window: &KWindow) -> Result<CriticalResult> {
        let started = Instant::now();
        let curve = self.trace(window)?;
        self.critical_from_curve(window, &curve, started)
    }

    /// Refines the minimum of an already traced curve.
    pub fn critical_from_curve(&self, window: &KWindow, curve: &[CurveSample], started: Instant) -> Result<CriticalResult> {
        let points: Vec<(usize, NeutralPoint)> =
            curve.iter().enumerate().filter_map(|(i, s)| s.point.map(|p| (i, p))).collect();
        let (imin, pmin) = points
            .iter()
            .copied()
            .min_by(|a, b| a.1.ra_b.total_cmp(&b.1.ra_b))
            .ok_or(Error::NoNeutralPoint)?;
        let last = curve.len() - 1;
        if imin == last {
            return Err(Error::WindowTooNarrow { k_max: window.k_max });
        }
        let mut result = if imin == 0 && pmin.k < INFINITE_WAVELENGTH_K {
            CriticalResult::from_point(&self.confirm(&pmin)?, true, self.stability.params())
        } else {
            let lo = if imin == 0 { curve[0].k } else { curve[imin - 1].k };
            let hi = curve[imin + 1].k;
            let mut guess = Some(pmin.ra_b);
            let mut best = pmin;
            let mut objective = |k: f64| -> Result<f64> {
                let p = match guess {
                    Some(g) => self.neutral_rayleigh_near(k, g)?,
                    None => self.neutral_rayleigh(k, self.settings.bracket)?,
                };
                guess = Some(p.ra_b);
                if p.ra_b < best.ra_b {
                    best = p;
                }
                Ok(p.ra_b)
            };
            golden_section(&mut objective, lo, hi, self.settings.k_rtol, 200)?;
            CriticalResult::from_point(&self.confirm(&best)?, false, self.stability.params())
        };
        result.solver = SolverMetadata {
            n: self.stability.params().n,
            rab_rtol: self.settings.rab_rtol,
            k_rtol: self.settings.k_rtol,
            k_window: *window,
            eigen_backend: self.stability.backend_name().to_string(),
            root_finder: self.roots.name().to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        Ok(result)
    }
}

/// One entry of a traced neutral curve; failures are kept inline.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub k: f64,
    pub point: Option<NeutralPoint>,
    pub error: Option<String>,
}

pub fn curve_csv(curve: &[CurveSample]) -> String {
    let mut csv = CsvBuilder::new(&["k", "lambda", "Rab", "im_gamma", "branch"]);
    for s in curve {
        let lambda = fmt_full(2.0 * PI / s.k);
        match &s.point {
            Some(p) => csv.row(&[
                fmt_full(s.k),
                lambda,
                fmt_full(p.ra_b),
                fmt_full(p.im_gamma),
                p.branch.as_str().to_string(),
            ]),
            None => csv.row(&[fmt_full(s.k), lambda, fmt_full(f64::NAN), fmt_full(f64::NAN), "error".to_string()]),
        }
    }
    csv.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SolverMetadata {
    #[serde(rename = "N")]
    pub n: usize,
    pub rab_rtol: f64,
    pub k_rtol: f64,
    pub k_window: KWindow,
    pub eigen_backend: String,
    pub root_finder: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalResult {
    /// Zero for the infinite-wavelength sentinel.
    pub kc: f64,
    /// `null` in JSON when infinite.
    #[serde(with = "infinite_as_null")]
    pub lambda_c: f64,
    #[serde(rename = "Rab_c")]
    pub rab_c: f64,
    /// Neutral Ra_b before clamping at zero.
    #[serde(rename = "Rab_neutral")]
    pub rab_neutral: f64,
    /// Wavenumber at which the neutral value was evaluated.
    pub k_eval: f64,
    pub im_gamma: f64,
    pub oscillatory: bool,
    pub period: Option<f64>,
    pub infinite_wavelength: bool,
    pub params: ModelParams,
    pub solver: SolverMetadata,
}

impl CriticalResult {
    fn from_point(p: &NeutralPoint, infinite: bool, params: &ModelParams) -> CriticalResult {
        if p.ra_b < 0.0 {
            log::info!("neutral Rab {} is negative; onset is reported at Rab_c = 0", p.ra_b);
        }
        let oscillatory = p.branch == Branch::Oscillatory;
        CriticalResult {
            kc: if infinite { 0.0 } else { p.k },
            lambda_c: if infinite { f64::INFINITY } else { 2.0 * PI / p.k },
            rab_c: p.ra_b.max(0.0),
            rab_neutral: p.ra_b,
            k_eval: p.k,
            im_gamma: p.im_gamma,
            oscillatory,
            period: oscillatory.then(|| 2.0 * PI / p.im_gamma),
            infinite_wavelength: infinite,
            params: *params,
            solver: SolverMetadata::default(),
        }
    }

    pub fn neutral_point(&self) -> NeutralPoint {
        NeutralPoint { k: self.k_eval, ra_b: self.rab_neutral, im_gamma: self.im_gamma, branch: Branch::from_frequency(self.im_gamma) }
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Neutral Ra_b at `k` with the default strategies.
pub fn neutral_rayleigh(stability: &StabilitySolver, k: f64, bracket: (f64, f64)) -> Result<NeutralPoint> {
    NeutralSolver::new(stability).neutral_rayleigh(k, bracket)
}

pub fn trace_neutral_curve(stability: &StabilitySolver, window: &KWindow) -> Result<Vec<CurveSample>> {
    NeutralSolver::new(stability).trace(window)
}

pub fn find_critical(stability: &StabilitySolver, window: &KWindow) -> Result<CriticalResult> {
    NeutralSolver::new(stability).find_critical(window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let p = NeutralPoint { k: 1.0, ra_b: 1.0, im_gamma: 0.0, branch: Branch::Stationary };
        assert_eq!(classify_bifurcation(&p), Bifurcation::Stationary);
        let q = NeutralPoint { im_gamma: 7.14, branch: Branch::Oscillatory, ..p };
        match classify_bifurcation(&q) {
            Bifurcation::Hopf { period } => assert!((period - 0.88).abs() < 0.01),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn window_grid_is_logarithmic() {
        let w = KWindow { k_min: 0.01, k_max: 10.0, samples: 4 };
        let g = w.grid();
        assert_eq!(g.len(), 4);
        assert!((g[1] - 0.1).abs() < 1e-12 && (g[2] - 1.0).abs() < 1e-12 && g[3] == 10.0);
        assert!(KWindow { k_min: 2.0, k_max: 1.0, samples: 4 }.validate().is_err());
        assert!(KWindow { samples: 1, ..w }.validate().is_err());
    }

    #[test]
    fn root_strategies_agree() {
        for name in ["brent", "bisection"] {
            let s = root_strategies().get(name).unwrap();
            let mut f = |x: f64| -> Result<f64> { Ok(x * x - 2.0) };
            let r = s.solve(&mut f, 0.0, 2.0, -2.0, 2.0, 1e-12).unwrap();
            assert!((r - 2f64.sqrt()).abs() < 1e-10, "{name}");
        }
    }

    #[test]
    fn curve_csv_marks_failures() {
        let c = vec![
            CurveSample {
                k: 1.0,
                point: Some(NeutralPoint { k: 1.0, ra_b: 2.0, im_gamma: 0.0, branch: Branch::Stationary }),
                error: None,
            },
            CurveSample { k: 2.0, point: None, error: Some("x".into()) },
        ];
        let csv = curve_csv(&c);
        assert!(csv.starts_with("k,lambda,Rab,im_gamma,branch\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with("stationary"));
        assert!(csv.lines().nth(2).unwrap().ends_with("nan,nan,error"));
    }

    #[test]
    fn critical_json_uses_null_for_infinite_wavelength() {
        let p = NeutralPoint { k: 0.01, ra_b: 374.0, im_gamma: 0.0, branch: Branch::Stationary };
        let r = CriticalResult::from_point(&p, true, &ModelParams::default());
        let js = serde_json::to_string(&r).unwrap();
        assert!(js.contains("\"lambda_c\":null"));
        let back: CriticalResult = serde_json::from_str(&js).unwrap();
        assert!(back.lambda_c.is_infinite());
    }
}
