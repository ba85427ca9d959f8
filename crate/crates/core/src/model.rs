//! Phototaxis response, the β ↔ G_c calibration and the validated parameter record.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::bisect_secant;

/// Steepness range over which the taxis curve keeps G_c inside [0.3, G_t].
pub const BETA_RANGE: (f64, f64) = (-1.1, 1.1);
/// Smallest critical intensity that `beta_for_critical_intensity` accepts.
pub const MIN_CRITICAL_INTENSITY: f64 = 0.3;

/// Ξ(G) = G·exp(β(G − 1)).
pub fn xi(g: f64, beta: f64) -> f64 {
    g * (beta * (g - 1.0)).exp()
}

fn sine_mix(x: f64) -> f64 {
    0.8 * (1.5 * PI * x).sin() - 0.1 * (0.5 * PI * x).sin()
}

/// Mean swimming direction M(G).
pub fn taxis(g: f64, beta: f64) -> f64 {
    sine_mix(xi(g, beta))
}

/// Analytic (dM/dG, d²M/dG²).
pub fn taxis_derivatives(g: f64, beta: f64) -> (f64, f64) {
    let e = (beta * (g - 1.0)).exp();
    let x = g * e;
    let dx = e * (1.0 + beta * g);
    let d2x = e * beta * (2.0 + beta * g);
    let (a, b) = (1.5 * PI, 0.5 * PI);
    let ds = 0.8 * a * (a * x).cos() - 0.1 * b * (b * x).cos();
    let d2s = -0.8 * a * a * (a * x).sin() + 0.1 * b * b * (b * x).sin();
    (ds * dx, d2s * dx * dx + ds * d2x)
}

/// Smallest positive nontrivial zero x* of 0.8 sin(3πx/2) − 0.1 sin(πx/2).
///
/// Every critical intensity satisfies Ξ(G_c) = x*.
pub fn taxis_zero() -> f64 {
    static ROOT: OnceLock<f64> = OnceLock::new();
    *ROOT.get_or_init(|| bisect_secant(sine_mix, 0.5, 0.7, 1e-15).expect("sine mix changes sign on (0.5, 0.7)"))
}

/// Critical intensity G_c for a steepness β: the root of M nearest below G_t.
///
/// Returns G_t when the root lies above the source intensity (cells then
/// gather at the top of the layer).
pub fn critical_intensity(beta: f64, gt: f64) -> Result<f64> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
    }
    if !(gt > 0.0 && gt <= 1.0) {
        return Err(Error::InvalidParameter(format!("Gt must lie in (0, 1], got {gt}")));
    }
    let f = |g: f64| taxis(g, beta);
    if f(gt) >= 0.0 {
        return Ok(gt);
    }
    // walk down from Gt to the first sign change, then refine inside it
    let steps = 400;
    let h = gt / steps as f64;
    let mut hi = gt;
    for i in 1..steps {
        let lo = gt - i as f64 * h;
        if f(lo) > 0.0 {
            return bisect_secant(f, lo, hi, 1e-12).ok_or(Error::NoRootInRange { beta, gt });
        }
        hi = lo;
    }
    Err(Error::NoRootInRange { beta, gt })
}

/// Inverse of [`critical_intensity`]: β with Ξ(G_c; β) = x*.
pub fn beta_for_critical_intensity(gc: f64, gt: f64) -> Result<f64> {
    if !(gc >= MIN_CRITICAL_INTENSITY && gc <= gt && gc < 1.0) {
        return Err(Error::OutOfRange { gc, lo: MIN_CRITICAL_INTENSITY, hi: gt.min(1.0) });
    }
    Ok((taxis_zero() / gc).ln() / (gc - 1.0))
}

/// Non-dimensional control parameters plus the collocation resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Schmidt number.
    #[serde(rename = "Sc")]
    pub sc: f64,
    /// Lewis number.
    #[serde(rename = "Le")]
    pub le: f64,
    /// Scaled swimming speed.
    #[serde(rename = "Vc")]
    pub vc: f64,
    /// Extinction coefficient.
    pub kappa: f64,
    /// Source intensity at the top of the layer.
    #[serde(rename = "Gt")]
    pub gt: f64,
    /// Taxis steepness.
    pub beta: f64,
    /// Thermal Rayleigh number; positive means heated from below.
    #[serde(rename = "RaT")]
    pub ra_t: f64,
    /// Bioconvective Rayleigh number.
    #[serde(rename = "Rab")]
    pub ra_b: f64,
    /// Collocation point count.
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        let gt = 0.8;
        ModelParams {
            sc: 20.0,
            le: 1.0,
            vc: 10.0,
            kappa: 0.5,
            gt,
            beta: beta_for_critical_intensity(gt, gt).expect("Gt is a valid critical intensity"),
            ra_t: 0.0,
            ra_b: 0.0,
            n: 64,
        }
    }
}

impl ModelParams {
    /// Sets β from a critical intensity.
    pub fn with_critical_intensity(mut self, gc: f64) -> Result<Self> {
        self.beta = beta_for_critical_intensity(gc, self.gt)?;
        Ok(self)
    }

    pub fn critical_intensity(&self) -> Result<f64> {
        critical_intensity(self.beta, self.gt)
    }

    pub fn with_resolution(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// Checks every hard invariant; β outside the calibrated range only warns.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.sc > 0.0) {
            return bad("Sc must be positive, got Sc", self.sc);
        }
        if !(self.le > 0.0) {
            return bad("Le must be positive, got Le", self.le);
        }
        if !(self.kappa > 0.0) {
            return bad("kappa must be positive, got kappa", self.kappa);
        }
        if !(self.vc >= 0.0) || !self.vc.is_finite() {
            return bad("Vc must be non-negative, got Vc", self.vc);
        }
        if !(self.gt > 0.0 && self.gt <= 1.0) {
            return bad("Gt must lie in (0, 1], got Gt", self.gt);
        }
        if !self.beta.is_finite() {
            return bad("beta must be finite, got beta", self.beta);
        }
        if !self.ra_t.is_finite() {
            return bad("RaT must be finite, got RaT", self.ra_t);
        }
        if !(self.ra_b >= 0.0) || !self.ra_b.is_finite() {
            return bad("Rab must be non-negative, got Rab", self.ra_b);
        }
        if self.n < 16 {
            return Err(Error::InvalidParameter(format!("resolution N must be at least 16, got {}", self.n)));
        }
        if self.beta < BETA_RANGE.0 || self.beta > BETA_RANGE.1 {
            log::warn!(
                "beta = {} lies outside the calibrated range [{}, {}]",
                self.beta,
                BETA_RANGE.0,
                BETA_RANGE.1
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Plain bisection, independent of the library's root finder.
    fn bisection_oracle(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let fa0 = f(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m).signum() == fa0.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(0.8, 0.0), 0.8);
        assert_eq!(xi(1.0, 0.37), 1.0);
        assert!((xi(0.8, 1.0) - 0.654_984_6).abs() < 1e-6);
    }

    #[test]
    fn taxis_at_full_intensity() {
        for beta in [-1.1, 0.0, 0.4, 1.1] {
            assert!((taxis(1.0, beta) + 0.9).abs() < 1e-15);
        }
    }

    #[test]
    fn taxis_zero_matches_bisection() {
        let oracle = bisection_oracle(sine_mix, 0.5, 0.7);
        assert!((taxis_zero() - oracle).abs() < 1e-13);
        assert!((taxis_zero() - 0.6441).abs() < 1e-3);
    }

    #[test]
    fn derivatives_vanish_at_unit_intensity_without_steepness() {
        let (d1, _) = taxis_derivatives(1.0, 0.0);
        assert!(d1.abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (g, beta) = (0.5, 0.5);
        let h = 1e-5;
        let fd1 = (taxis(g + h, beta) - taxis(g - h, beta)) / (2.0 * h);
        let (d1, d2) = taxis_derivatives(g, beta);
        assert!(((d1 - fd1) / d1).abs() < 1e-6);
        let h2 = 1e-4;
        let fd2 = (taxis(g + h2, beta) - 2.0 * taxis(g, beta) + taxis(g - h2, beta)) / (h2 * h2);
        assert!(((d2 - fd2) / d2).abs() < 1e-4);
    }

    #[test]
    fn critical_intensity_without_steepness_is_taxis_zero() {
        let gc = critical_intensity(0.0, 0.8).unwrap();
        assert!((gc - taxis_zero()).abs() < 1e-10);
        assert!(taxis(gc, 0.0).abs() < 1e-10);
    }

    #[test]
    fn steepest_positive_beta_puts_gc_at_source() {
        let beta = beta_for_critical_intensity(0.8, 0.8).unwrap();
        // 0.8 exp(-0.2 beta) = x*
        let closed = -(taxis_zero() / 0.8).ln() / 0.2;
        assert!((beta - closed).abs() < 1e-12);
        assert!((beta - 1.085).abs() < 5e-3);
        assert!((critical_intensity(beta, 0.8).unwrap() - 0.8).abs() < 1e-8);
    }

    #[test]
    fn beta_zero_for_gc_at_taxis_zero() {
        let b = beta_for_critical_intensity(taxis_zero(), 0.8).unwrap();
        assert!(b.abs() < 1e-12);
    }

    #[test]
    fn table_rows_round_trip() {
        for gc in [0.5, 0.53, 0.63, 0.66] {
            let b = beta_for_critical_intensity(gc, 0.8).unwrap();
            assert!((critical_intensity(b, 0.8).unwrap() - gc).abs() < 1e-8, "gc = {gc}");
        }
    }

    #[test]
    fn gc_stays_in_window_over_beta_range() {
        // the exact taxis zero puts the beta = -1.1 end slightly below 0.3
        for i in 0..=44 {
            let beta = -1.1 + 0.05 * i as f64;
            let gc = critical_intensity(beta, 0.8).unwrap();
            assert!((0.297..=0.8).contains(&gc), "beta {beta} -> gc {gc}");
        }
        assert!(critical_intensity(-1.05, 0.8).unwrap() >= 0.3);
    }

    #[test]
    fn out_of_window_gc_rejected() {
        assert!(matches!(beta_for_critical_intensity(0.2, 0.8), Err(Error::OutOfRange { .. })));
        assert!(matches!(beta_for_critical_intensity(0.85, 0.8), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn invalid_params_rejected() {
        let p = ModelParams { n: 8, ..ModelParams::default() };
        assert!(p.validate().is_err());
        let p = ModelParams { gt: 1.5, ..ModelParams::default() };
        assert!(p.validate().is_err());
        assert!(ModelParams::default().validate().is_ok());
    }
}
