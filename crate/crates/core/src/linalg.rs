//! Dense kernels used by the solver: singular value thresholding, nuclear norm
//! and symmetric positive-definite solves.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{LdlError, Result};

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITERS: usize = 10_000;
/// Smallest admissible squared Cholesky pivot relative to the largest one.
const PIVOT_RATIO: f64 = 1e-14;

/// Proximal operator of `tau * ||.||_*`: soft-thresholds the singular values of
/// `a` by `tau` and keeps the singular vectors.
pub fn svt(a: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if tau.is_nan() || tau < 0.0 {
        return Err(LdlError::InvalidArgument(format!(
            "threshold must be nonnegative, got {tau}"
        )));
    }
    if tau == 0.0 {
        return Ok(a.clone());
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(a.clone());
    }
    let svd = a
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITERS)
        .ok_or(LdlError::SvdFailure)?;
    let u = svd.u.ok_or(LdlError::SvdFailure)?;
    let v_t = svd.v_t.ok_or(LdlError::SvdFailure)?;
    let mut scaled = v_t;
    for (i, s) in svd.singular_values.iter().enumerate() {
        let shrunk = (s - tau).max(0.0);
        scaled.row_mut(i).scale_mut(shrunk);
    }
    Ok(u * scaled)
}

pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = a
        .clone()
        .try_svd(false, false, SVD_EPS, SVD_MAX_ITERS)
        .ok_or(LdlError::SvdFailure)?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn nuclear_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// Cholesky factor of a symmetric positive-definite matrix, rejecting
/// numerically singular systems.
pub(crate) fn spd_factor(a: DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(a).ok_or(LdlError::SingularSystem(what))?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if max.is_nan() || max <= 0.0 || min <= PIVOT_RATIO * max {
        return Err(LdlError::SingularSystem(what));
    }
    Ok(chol)
}

/// Solves `x * a = b` for `x` with `a` symmetric positive definite.
pub(crate) fn solve_right_spd(
    a: DMatrix<f64>,
    b: &DMatrix<f64>,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let chol = spd_factor(a, what)?;
    Ok(chol.solve(&b.transpose()).transpose())
}

/// Solves `a * x = b` for `x` with `a` symmetric positive definite.
pub(crate) fn solve_left_spd(
    a: DMatrix<f64>,
    b: &DMatrix<f64>,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let chol = spd_factor(a, what)?;
    Ok(chol.solve(b))
}
