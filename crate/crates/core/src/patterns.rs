//! Physical-space perturbation fields rebuilt from an eigenmode.
//!
//! Fields are 2D roll slices, f(x, z, t) = Re[F(z) exp(i(ω t + k x))] with
//! ω = Im γ; the real part of γ is dropped so sequences do not drift.

use std::f64::consts::PI;

use faer::c64;

use crate::error::{Error, Result};
use crate::io::{fmt_full, CsvBuilder};
use crate::neutral::OSCILLATION_THRESHOLD;
use crate::spectral::lagrange_row;
use crate::stability::EigenMode;

/// Amplitude used when exporting total temperature T_s + ε T₁.
pub const TOTAL_TEMPERATURE_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub phase_index: usize,
    /// One wavelength, both ends included.
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Indexed `[iz][ix]`.
    pub w1: Vec<Vec<f64>>,
    pub n1: Vec<Vec<f64>>,
    pub t1: Vec<Vec<f64>>,
}

impl FieldSnapshot {
    /// T_s + ε T₁ with the conduction profile T_s = 1 − z.
    pub fn total_temperature(&self, eps: f64) -> Vec<Vec<f64>> {
        self.t1
            .iter()
            .zip(&self.z)
            .map(|(row, z)| row.iter().map(|v| 1.0 - z + eps * v).collect())
            .collect()
    }

    /// Long-format rows `t,x,z,w1,n1,T1`, plus `T_total` when requested.
    pub fn write_csv(&self, csv: &mut CsvBuilder, with_total: bool) {
        let total = with_total.then(|| self.total_temperature(TOTAL_TEMPERATURE_EPS));
        for (iz, &z) in self.z.iter().enumerate() {
            for (ix, &x) in self.x.iter().enumerate() {
                let mut row = vec![self.t, x, z, self.w1[iz][ix], self.n1[iz][ix], self.t1[iz][ix]];
                if let Some(tt) = &total {
                    row.push(tt[iz][ix]);
                }
                csv.numeric_row(&row);
            }
        }
    }
}

pub fn field_header(with_total: bool) -> Vec<&'static str> {
    let mut h = vec!["t", "x", "z", "w1", "n1", "T1"];
    if with_total {
        h.push("T_total");
    }
    h
}

/// Concatenated CSV for a sequence of snapshots.
pub fn fields_csv(snapshots: &[FieldSnapshot], with_total: bool) -> String {
    let mut csv = CsvBuilder::new(&field_header(with_total));
    for s in snapshots {
        s.write_csv(&mut csv, with_total);
    }
    csv.finish()
}

// Complex amplitudes interpolated onto a uniform z grid.
struct Profiles {
    z: Vec<f64>,
    w: Vec<c64>,
    theta: Vec<c64>,
    t: Vec<c64>,
}

fn resample(mode: &EigenMode, nz: usize) -> Profiles {
    let z: Vec<f64> = (0..nz).map(|i| i as f64 / (nz - 1) as f64).collect();
    let eval = |row: &[f64], v: &[c64]| row.iter().zip(v).fold(c64::new(0.0, 0.0), |acc, (l, f)| acc + f * *l);
    let mut w = Vec::with_capacity(nz);
    let mut theta = Vec::with_capacity(nz);
    let mut t = Vec::with_capacity(nz);
    for &zz in &z {
        let row = lagrange_row(&mode.z, zz);
        w.push(eval(&row, &mode.w));
        theta.push(eval(&row, &mode.theta));
        t.push(eval(&row, &mode.t));
    }
    Profiles { z, w, theta, t }
}

fn render(p: &Profiles, k: f64, omega: f64, t: f64, phase_index: usize, nx: usize) -> FieldSnapshot {
    let wavelength = 2.0 * PI / k;
    let x: Vec<f64> = (0..nx).map(|i| wavelength * i as f64 / (nx - 1) as f64).collect();
    let phases: Vec<c64> = x.iter().map(|&xx| c64::cis(omega * t + k * xx)).collect();
    // the last column is the first one shifted by exactly one wavelength
    let field = |amp: &[c64]| -> Vec<Vec<f64>> {
        amp.iter()
            .map(|a| {
                let mut row: Vec<f64> = phases.iter().map(|e| (a * e).re).collect();
                row[nx - 1] = row[0];
                row
            })
            .collect()
    };
    FieldSnapshot { t, phase_index, x, z: p.z.clone(), w1: field(&p.w), n1: field(&p.theta), t1: field(&p.t) }
}

fn check_grid(nx: usize, nz: usize) -> Result<()> {
    if nx < 8 || nz < 8 {
        return Err(Error::InvalidParameter(format!("field grid must be at least 8 x 8, got {nx} x {nz}")));
    }
    Ok(())
}

/// Fields of `mode` at time `t` on an `nx × nz` grid.
pub fn mode_to_fields(mode: &EigenMode, t: f64, nx: usize, nz: usize) -> Result<FieldSnapshot> {
    check_grid(nx, nz)?;
    Ok(render(&resample(mode, nz), mode.k, mode.gamma.im, t, 0, nx))
}

/// Oscillation period 2π/|Im γ|, or a stationary-mode error.
pub fn period(mode: &EigenMode) -> Result<f64> {
    let im = mode.gamma.im;
    if im.abs() <= OSCILLATION_THRESHOLD {
        return Err(Error::StationaryMode { im });
    }
    Ok(2.0 * PI / im.abs())
}

/// `n_snapshots` equally spaced snapshots over one period.
pub fn oscillation_snapshots(mode: &EigenMode, n_snapshots: usize, nx: usize, nz: usize) -> Result<Vec<FieldSnapshot>> {
    let p = period(mode)?;
    if n_snapshots < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 snapshots, got {n_snapshots}")));
    }
    check_grid(nx, nz)?;
    let profiles = resample(mode, nz);
    Ok((0..n_snapshots)
        .map(|j| render(&profiles, mode.k, mode.gamma.im, p * j as f64 / n_snapshots as f64, j, nx))
        .collect())
}

/// w₁ sampled at a probe point together with dw₁/dt.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub w1: Vec<f64>,
    pub dw1_dt: Vec<f64>,
}

impl TimeSeries {
    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::new(&["t", "w1", "dw1_dt"]);
        for i in 0..self.t.len() {
            csv.row(&[fmt_full(self.t[i]), fmt_full(self.w1[i]), fmt_full(self.dw1_dt[i])]);
        }
        csv.finish()
    }
}

/// Samples `n_steps + 1` equally spaced times on `[0, t_max]`.
pub fn time_series(mode: &EigenMode, probe: (f64, f64), t_max: f64, n_steps: usize) -> Result<TimeSeries> {
    let (x, z) = probe;
    if !(0.0..=1.0).contains(&z) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("probe ({x}, {z}) lies outside the layer")));
    }
    if n_steps == 0 || !(t_max > 0.0) {
        return Err(Error::InvalidParameter("time series needs t_max > 0 and at least one step".into()));
    }
    let row = lagrange_row(&mode.z, z);
    let amp = row.iter().zip(&mode.w).fold(c64::new(0.0, 0.0), |acc, (l, f)| acc + f * *l);
    let omega = mode.gamma.im;
    let mut out = TimeSeries { t: Vec::new(), w1: Vec::new(), dw1_dt: Vec::new() };
    for i in 0..=n_steps {
        let t = t_max * i as f64 / n_steps as f64;
        let v = amp * c64::cis(omega * t + mode.k * x);
        out.t.push(t);
        out.w1.push(v.re);
        out.dw1_dt.push((v * c64::new(0.0, omega)).re);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    // W = sin²(πz)-like profile sampled on Lobatto nodes; no solver needed.
    fn synthetic(gamma: c64) -> EigenMode {
        let n = 24;
        let z: Vec<f64> = (0..n).map(|j| 0.5 * (1.0 - (PI * j as f64 / (n - 1) as f64).cos())).collect();
        let prof = |f: &dyn Fn(f64) -> c64| z.iter().map(|&zz| f(zz)).collect::<Vec<c64>>();
        EigenMode {
            gamma,
            k: 2.3,
            w: prof(&|zz| c64::new((PI * zz).sin().powi(2), 0.3 * (PI * zz).sin().powi(2) * zz)),
            phi: prof(&|zz| c64::new(zz - 1.0, 0.0)),
            theta: prof(&|zz| c64::new(zz.cos(), 0.2 * zz)),
            t: prof(&|zz| c64::new((PI * zz).sin(), -0.1 * (PI * zz).sin())),
            residual: 0.0,
            z,
        }
    }

    #[test]
    fn rigid_walls_and_periodicity() {
        let f = mode_to_fields(&synthetic(c64::new(0.0, 7.0)), 0.3, 33, 17).unwrap();
        for ix in 0..33 {
            assert!(f.w1[0][ix].abs() < 1e-12 && f.w1[16][ix].abs() < 1e-12);
        }
        for iz in 0..17 {
            assert_eq!(f.w1[iz][0], f.w1[iz][32]);
            let mean: f64 = f.w1[iz][..32].iter().sum::<f64>() / 32.0;
            assert!(mean.abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_fields_do_not_depend_on_time() {
        let m = synthetic(c64::new(-0.2, 0.0));
        let a = mode_to_fields(&m, 0.0, 16, 16).unwrap();
        let b = mode_to_fields(&m, 5.0, 16, 16).unwrap();
        assert_eq!(a.w1, b.w1);
        assert!(matches!(oscillation_snapshots(&m, 4, 16, 16), Err(Error::StationaryMode { .. })));
    }

    #[test]
    fn full_period_returns_to_start() {
        let m = synthetic(c64::new(1e-7, 7.14));
        let p = period(&m).unwrap();
        let a = mode_to_fields(&m, 0.0, 16, 16).unwrap();
        let b = mode_to_fields(&m, p, 16, 16).unwrap();
        for (ra, rb) in a.w1.iter().zip(&b.w1) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quarter_period_snapshots() {
        let m = synthetic(c64::new(0.0, 7.14));
        let p = period(&m).unwrap();
        let s = oscillation_snapshots(&m, 4, 16, 16).unwrap();
        for (j, snap) in s.iter().enumerate() {
            assert!((snap.t - p * j as f64 / 4.0).abs() < 1e-15);
            assert_eq!(snap.phase_index, j);
        }
    }

    #[test]
    fn linear_in_amplitude() {
        let m = synthetic(c64::new(0.0, 3.0));
        let c = 2.5;
        let a = mode_to_fields(&m, 0.1, 12, 12).unwrap();
        let b = mode_to_fields(&m.scaled(c64::new(c, 0.0)), 0.1, 12, 12).unwrap();
        for (ra, rb) in a.n1.iter().zip(&b.n1) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((c * x - y).abs() <= 1e-13 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn conjugate_mode_is_mirror_image() {
        let m = synthetic(c64::new(0.0, 7.0));
        let nx = 41;
        let a = mode_to_fields(&m, 0.2, nx, 12).unwrap();
        let b = mode_to_fields(&m.conjugate(), 0.2, nx, 12).unwrap();
        for iz in 0..12 {
            for ix in 0..nx {
                assert!((a.w1[iz][ix] - b.w1[iz][nx - 1 - ix]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phase_portrait_closes() {
        let m = synthetic(c64::new(0.0, 7.14));
        let p = period(&m).unwrap();
        let s = time_series(&m, (0.4, 0.5), p, 200).unwrap();
        assert!((s.w1[0] - s.w1[200]).abs() < 1e-8);
        assert!((s.dw1_dt[0] - s.dw1_dt[200]).abs() < 1e-8);
        let stationary = time_series(&synthetic(c64::new(0.0, 0.0)), (0.4, 0.5), 1.0, 10).unwrap();
        assert!(stationary.w1.iter().all(|v| (v - stationary.w1[0]).abs() < 1e-15));
    }

    #[test]
    fn csv_has_optional_total_temperature() {
        let s = mode_to_fields(&synthetic(c64::new(0.0, 0.0)), 0.0, 8, 8).unwrap();
        let plain = fields_csv(&[s.clone()], false);
        assert!(plain.starts_with("t,x,z,w1,n1,T1\n"));
        assert_eq!(plain.lines().count(), 65);
        let total = fields_csv(&[s], true);
        assert!(total.starts_with("t,x,z,w1,n1,T1,T_total\n"));
    }

    #[test]
    fn small_grid_rejected() {
        assert!(mode_to_fields(&synthetic(c64::new(0.0, 0.0)), 0.0, 4, 16).is_err());
    }
}
