use std::sync::Arc;

use faer::Mat;

use crate::basic_state::BasicState;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// The discretised pencil `A y = γ B y` at one wavenumber.
///
/// Unknowns are stacked as `[W, Θ, T]`, each on the `N` collocation nodes,
/// with the integrated concentration Φ = ∫_1^z Θ carried implicitly through
/// the spectral integration matrix. Every row has been scaled so that its
/// largest `A` entry is one; row scaling leaves the eigenproblem unchanged.
#[derive(Debug, Clone)]
pub struct StabilityOperators {
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    pub k: f64,
    pub ra_b: f64,
    /// Rows that carry boundary conditions; identically zero in `B`.
    pub bc_rows: Vec<usize>,
    pub state: Arc<BasicState>,
    pub params: ModelParams,
}

impl StabilityOperators {
    /// Number of collocation nodes per unknown.
    pub fn nodes(&self) -> usize {
        self.a.nrows() / 3
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}

/// Builds the pencil for wavenumber `k` at `params.ra_b`.
pub fn assemble_operators(state: &Arc<BasicState>, params: &ModelParams, k: f64) -> Result<StabilityOperators> {
    assemble_with_rayleigh(state, params, k, params.ra_b)
}

/// Builds the pencil for wavenumber `k` and an explicit bioconvective Rayleigh number.
pub fn assemble_with_rayleigh(
    state: &Arc<BasicState>,
    params: &ModelParams,
    k: f64,
    ra_b: f64,
) -> Result<StabilityOperators> {
    let n = params.n;
    if state.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: state.len() });
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {k}")));
    }
    let grid = &state.grid;
    let d1 = grid.d1();
    let d2 = grid.d2();
    let d4 = d2 * d2;
    let s = grid.integration();
    let g = &state.gamma;
    let k2 = k * k;
    let (sc, le, ra_t) = (params.sc, params.le, params.ra_t);

    let size = 3 * n;
    let mut a = Mat::<f64>::zeros(size, size);
    let mut b = Mat::<f64>::zeros(size, size);
    let (w0, th0, t0) = (0, n, 2 * n);

    for i in 0..n {
        // momentum: (γ/Sc)(D² − k²)W = (D² − k²)²W + Ra_b k² Θ − Ra_T Le k² T
        for j in 0..n {
            a[(w0 + i, w0 + j)] = d4[(i, j)] - 2.0 * k2 * d2[(i, j)];
            b[(w0 + i, w0 + j)] = d2[(i, j)] / sc;
        }
        a[(w0 + i, w0 + i)] += k2 * k2;
        b[(w0 + i, w0 + i)] -= k2 / sc;
        a[(w0 + i, th0 + i)] = ra_b * k2;
        a[(w0 + i, t0 + i)] = -ra_t * le * k2;

        // cells: γΘ = D²Θ − Γ₃DΘ − (k² + Γ₂)Θ − Γ₁Φ − (Dn_s)W
        for j in 0..n {
            a[(th0 + i, th0 + j)] = d2[(i, j)] - g.gamma3[i] * d1[(i, j)] - g.gamma1[i] * s[(i, j)];
        }
        a[(th0 + i, th0 + i)] -= k2 + g.gamma2[i];
        a[(th0 + i, w0 + i)] = -state.dns[i];
        b[(th0 + i, th0 + i)] = 1.0;

        // heat: γT = Le(D² − k²)T − (DT_s)W with DT_s = −1
        for j in 0..n {
            a[(t0 + i, t0 + j)] = le * d2[(i, j)];
        }
        a[(t0 + i, t0 + i)] -= le * k2;
        a[(t0 + i, w0 + i)] = 1.0;
        b[(t0 + i, t0 + i)] = 1.0;
    }

    let last = n - 1;
    let bc_rows = vec![w0, w0 + 1, w0 + last - 1, w0 + last, th0, th0 + last, t0, t0 + last];
    for &r in &bc_rows {
        for j in 0..size {
            a[(r, j)] = 0.0;
            b[(r, j)] = 0.0;
        }
    }
    // rigid walls: W = DW = 0
    a[(w0, w0)] = 1.0;
    a[(w0 + last, w0 + last)] = 1.0;
    for j in 0..n {
        a[(w0 + 1, w0 + j)] = d1[(0, j)];
        a[(w0 + last - 1, w0 + j)] = d1[(last, j)];
    }
    // zero cell flux: Γ₂Φ + 2Γ₃Θ − 2DΘ = 0
    for (row, node) in [(th0, 0), (th0 + last, last)] {
        for j in 0..n {
            a[(row, th0 + j)] = g.gamma2[node] * s[(node, j)] - 2.0 * d1[(node, j)];
        }
        a[(row, th0 + node)] += 2.0 * g.gamma3[node];
    }
    // fixed wall temperatures
    a[(t0, t0)] = 1.0;
    a[(t0 + last, t0 + last)] = 1.0;

    for r in 0..size {
        let scale = (0..size).fold(0.0f64, |m, j| m.max(a[(r, j)].abs()));
        if scale > 0.0 {
            let inv = 1.0 / scale;
            for j in 0..size {
                a[(r, j)] *= inv;
                b[(r, j)] *= inv;
            }
        }
    }

    Ok(StabilityOperators { a, b, k, ra_b, bc_rows, state: Arc::clone(state), params: *params })
}
