//! Interchangeable eigenvalue backends for the stability pencil.

use std::sync::Arc;

use faer::c64;
use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::{evd, gevd};
use faer::prelude::*;
use faer::{Mat, Par};

use super::operators::StabilityOperators;
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

/// Computes the finite eigenvalues of `A y = γ B y`.
///
/// Implementations may return eigenvalues in any order. Infinite eigenvalues
/// from the boundary rows come back either dropped or as huge finite values,
/// which the magnitude cap of the spurious-mode filter removes.
pub trait EigenBackend: Named + Send + Sync {
    fn eigenvalues(&self, ops: &StabilityOperators) -> Result<Vec<c64>>;
}

/// Registry of eigen backends; `reduced` is the default.
pub fn backends() -> Registry<dyn EigenBackend> {
    let mut reg: Registry<dyn EigenBackend> = Registry::new("eigen backend", "reduced");
    reg.register(Arc::new(Qz));
    reg.register(Arc::new(Reduced));
    reg
}

/// Full generalized Schur (QZ) factorisation of the square pencil.
#[derive(Debug, Clone, Copy, Default)]
pub struct Qz;

impl Named for Qz {
    fn name(&self) -> &'static str {
        "qz"
    }
}

impl EigenBackend for Qz {
    fn eigenvalues(&self, ops: &StabilityOperators) -> Result<Vec<c64>> {
        let n = ops.order();
        let mut a = ops.a.clone();
        let mut b = ops.b.clone();
        // faer 0.24 only fills every eigenvalue of a larger pencil when
        // eigenvectors are requested as well
        let mut vr = Mat::<f64>::zeros(n, n);
        let mut re = Diag::<f64>::zeros(n);
        let mut im = Diag::<f64>::zeros(n);
        let mut beta = Diag::<f64>::zeros(n);
        let par = Par::Seq;
        let mut mem = MemBuffer::new(gevd::gevd_scratch::<f64>(
            n,
            evd::ComputeEigenvectors::No,
            evd::ComputeEigenvectors::Yes,
            par,
            Default::default(),
        ));
        gevd::gevd_real(
            a.as_mut(),
            b.as_mut(),
            re.as_mut(),
            im.as_mut(),
            beta.as_mut(),
            None,
            Some(vr.as_mut()),
            par,
            MemStack::new(&mut mem),
            Default::default(),
        )
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let re = re.column_vector();
        let im = im.column_vector();
        let beta = beta.column_vector();
        Ok((0..n)
            .filter(|&i| beta[i] != 0.0)
            .map(|i| c64::new(re[i] / beta[i], im[i] / beta[i]))
            .filter(|g| g.re.is_finite() && g.im.is_finite())
            .collect())
    }
}

/// Eliminates the boundary unknowns and solves the standard eigenproblem
/// of the reduced (invertible) pencil.
#[derive(Debug, Clone, Copy, Default)]
pub struct Reduced;

impl Named for Reduced {
    fn name(&self) -> &'static str {
        "reduced"
    }
}

impl EigenBackend for Reduced {
    fn eigenvalues(&self, ops: &StabilityOperators) -> Result<Vec<c64>> {
        let (a_r, b_r, _) = reduce(ops)?;
        let m = b_r.partial_piv_lu().solve(&a_r);
        let vals = m.eigenvalues().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        Ok(vals.into_iter().filter(|g| g.re.is_finite() && g.im.is_finite()).collect())
    }
}

/// Returns `(A_r, B_r, E)` where the boundary unknowns satisfy `y_c = E y_f`.
///
/// The eliminated unknowns share their indices with `bc_rows`.
pub(crate) fn reduce(ops: &StabilityOperators) -> Result<(Mat<f64>, Mat<f64>, Mat<f64>)> {
    let n = ops.order();
    let bc = &ops.bc_rows;
    let free: Vec<usize> = (0..n).filter(|i| !bc.contains(i)).collect();
    let nb = bc.len();
    let nf = free.len();
    let a_cc = Mat::<f64>::from_fn(nb, nb, |i, j| ops.a[(bc[i], bc[j])]);
    let a_cf = Mat::<f64>::from_fn(nb, nf, |i, j| ops.a[(bc[i], free[j])]);
    let e = -a_cc.full_piv_lu().solve(&a_cf);
    if !(0..nb).all(|i| (0..nf).all(|j| e[(i, j)].is_finite())) {
        return Err(Error::Eigensolver("singular boundary block".into()));
    }
    let pick = |m: &Mat<f64>, cols: &[usize]| Mat::<f64>::from_fn(nf, cols.len(), |i, j| m[(free[i], cols[j])]);
    let a_r = pick(&ops.a, &free) + pick(&ops.a, bc) * &e;
    let b_r = pick(&ops.b, &free) + pick(&ops.b, bc) * &e;
    Ok((a_r, b_r, e))
}
