//! Chebyshev–Gauss–Lobatto collocation on the unit layer `0 ≤ z ≤ 1`.
//!
//! Nodes are stored in ascending order, so index 0 is the bottom wall and
//! index `N - 1` the top wall.

use std::f64::consts::PI;

use faer::Mat;

#[derive(Debug, Clone)]
pub struct ChebGrid {
    z: Vec<f64>,
    d1: Mat<f64>,
    d2: Mat<f64>,
    integ: Mat<f64>,
    weights: Vec<f64>,
}

impl ChebGrid {
    pub fn new(n_points: usize) -> Self {
        assert!(n_points >= 3, "need at least three collocation points");
        let z = nodes(n_points);
        let d1 = diff_matrix(n_points);
        let d2 = &d1 * &d1;
        let integ = integration_matrix(n_points);
        let weights = (0..n_points).map(|j| -integ[(0, j)]).collect();
        ChebGrid { z, d1, d2, integ, weights }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    /// First-derivative matrix d/dz.
    pub fn d1(&self) -> &Mat<f64> {
        &self.d1
    }

    /// Second-derivative matrix d²/dz².
    pub fn d2(&self) -> &Mat<f64> {
        &self.d2
    }

    /// Cumulative integral from the top wall: `(S f)(z_i) = ∫_1^{z_i} f dz`.
    ///
    /// Exact for the polynomial interpolant of `f`.
    pub fn integration(&self) -> &Mat<f64> {
        &self.integ
    }

    /// Clenshaw–Curtis quadrature weights for `∫_0^1 f dz`.
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        matvec(&self.d1, f)
    }

    pub fn integral(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Cumulative integral `∫_1^z f` at every node.
    pub fn cumulative_from_top(&self, f: &[f64]) -> Vec<f64> {
        matvec(&self.integ, f)
    }

    /// Barycentric evaluation of the interpolant of `f` at an arbitrary `z`.
    pub fn interpolate(&self, f: &[f64], z: f64) -> f64 {
        lagrange_row(&self.z, z).iter().zip(f).map(|(l, v)| l * v).sum()
    }
}

/// Values of the Lagrange cardinal functions of the Lobatto nodes at `z`,
/// so that `f(z) = Σ_j row[j] f_j` for the interpolant.
pub fn lagrange_row(nodes: &[f64], z: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut row = vec![0.0; n];
    if let Some(j) = nodes.iter().position(|&x| x == z) {
        row[j] = 1.0;
        return row;
    }
    let mut den = 0.0;
    for j in 0..n {
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n - 1 {
            w *= 0.5;
        }
        row[j] = w / (z - nodes[j]);
        den += row[j];
    }
    row.iter_mut().for_each(|r| *r /= den);
    row
}

pub(crate) fn matvec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

fn nodes(n_points: usize) -> Vec<f64> {
    let n = (n_points - 1) as f64;
    (0..n_points).map(|j| 0.5 * (1.0 - (PI * j as f64 / n).cos())).collect()
}

/// d/dz on the ascending nodes, built on x = 2z − 1.
fn diff_matrix(n_points: usize) -> Mat<f64> {
    let n = n_points - 1;
    let x: Vec<f64> = (0..n_points).map(|j| -(PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| -> f64 {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n { 2.0 * s } else { s }
    };
    let mut d = Mat::<f64>::zeros(n_points, n_points);
    for i in 0..n_points {
        let mut row_sum = 0.0;
        for j in 0..n_points {
            if i != j {
                let v = c(i) / c(j) / (x[i] - x[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        // negative-sum trick keeps the matrix exact on constants
        d[(i, i)] = -row_sum;
    }
    for i in 0..n_points {
        for j in 0..n_points {
            d[(i, j)] *= 2.0;
        }
    }
    d
}

/// Values → Chebyshev coefficients → antiderivative → values, anchored at z = 1.
fn integration_matrix(n_points: usize) -> Mat<f64> {
    let n = n_points - 1;
    let nf = n as f64;
    // ascending node x_j = cos(π − jπ/n), so T_m(x_j) = (−1)^m cos(mjπ/n)
    let t = |m: usize, j: usize| -> f64 {
        let s = if m % 2 == 0 { 1.0 } else { -1.0 };
        s * (PI * ((m * j) % (2 * n)) as f64 / nf).cos()
    };
    let cbar = |k: usize| if k == 0 || k == n { 2.0 } else { 1.0 };
    // coefficient map: a_m = 2/(n c_m) Σ_j f_j T_m(x_j) / c_j
    let mut to_coef = Mat::<f64>::zeros(n + 1, n_points);
    for m in 0..=n {
        for j in 0..n_points {
            to_coef[(m, j)] = 2.0 / (nf * cbar(m)) * t(m, j) / cbar(j);
        }
    }
    // antiderivative coefficients b (length n + 2)
    let mut anti = Mat::<f64>::zeros(n + 2, n + 1);
    for m in 0..=n {
        match m {
            0 => anti[(1, 0)] += 1.0,
            1 => anti[(2, 1)] += 0.25,
            _ => {
                anti[(m + 1, m)] += 1.0 / (2.0 * (m as f64 + 1.0));
                anti[(m - 1, m)] -= 1.0 / (2.0 * (m as f64 - 1.0));
            }
        }
    }
    let b = &anti * &to_coef;
    // T_m at every node, degree n + 1 included; T_m(1) = 1
    let mut s = Mat::<f64>::zeros(n_points, n_points);
    for i in 0..n_points {
        let theta = PI - PI * i as f64 / nf;
        for j in 0..n_points {
            let mut acc = 0.0;
            for m in 0..n + 2 {
                acc += b[(m, j)] * ((m as f64 * theta).cos() - 1.0);
            }
            // dz = dx / 2
            s[(i, j)] = 0.5 * acc;
        }
    }
    s
}
