//! Small dense Hermitian helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest condition number accepted by the Hermitian solvers.
pub const MAX_CONDITION: f64 = 1e12;

/// `(m + m^H) / 2`; used to scrub round-off asymmetry.
pub fn hermitian_part<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::from_re(0.5);
    (m + m.adjoint()) * half
}

/// Spectral condition number of a Hermitian matrix, `inf` if it is not positive definite.
pub fn condition_number<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    let eig = hermitian_part(m).symmetric_eigenvalues();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in eig.iter() {
        let e = T::real_to_f64(*e);
        lo = lo.min(e);
        hi = hi.max(e);
    }
    if !(lo > 0.0) || !hi.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn checked_cholesky<T: Scalar>(m: &DMatrix<T>, context: &str) -> Result<nalgebra::Cholesky<T, nalgebra::Dyn>> {
    let condition = condition_number(m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            context: context.to_string(),
            condition,
        });
    }
    hermitian_part(m).cholesky().ok_or_else(|| Error::IllConditioned {
        context: context.to_string(),
        condition,
    })
}

/// Solves `m x = b` for Hermitian positive definite `m` by Cholesky.
pub fn solve_hermitian<T: Scalar>(m: &DMatrix<T>, b: &DVector<T>, context: &str) -> Result<DVector<T>> {
    if m.nrows() != b.len() {
        return Err(Error::arg(format!(
            "{context}: dimension mismatch ({}x{} vs {})",
            m.nrows(),
            m.ncols(),
            b.len()
        )));
    }
    Ok(checked_cholesky(m, context)?.solve(b))
}

pub fn invert_hermitian<T: Scalar>(m: &DMatrix<T>, context: &str) -> Result<DMatrix<T>> {
    let inv = checked_cholesky(m, context)?.inverse();
    Ok(hermitian_part(&inv))
}

/// `w^H sigma^{-1} w`, evaluated as `||L^{-1} w||^2` with `sigma = L L^H`.
pub fn whitened_norm2<T: Scalar>(sigma: &DMatrix<T>, w: &DVector<T>, context: &str) -> Result<f64> {
    if sigma.nrows() != w.len() {
        return Err(Error::arg(format!("{context}: dimension mismatch")));
    }
    let sym = hermitian_part(sigma);
    let chol = sym.cholesky().ok_or_else(|| Error::IllConditioned {
        context: context.to_string(),
        condition: condition_number(sigma),
    })?;
    let z = chol
        .l()
        .solve_lower_triangular(w)
        .ok_or_else(|| Error::Numerical(format!("{context}: triangular solve failed")))?;
    Ok(z.iter().map(|v| v.abs2_f64()).sum())
}

/// Lower-right `k x k` block.
pub fn lower_right<T: Scalar>(m: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let n = m.nrows();
    m.view((n - k, n - k), (k, k)).into_owned()
}

/// Inverse of the Schur complement `m_yy - m_yx m_xx^{-1} m_xy` of the upper-left block,
/// which equals the lower-right block of `m^{-1}`.
pub fn schur_lower_right_inverse<T: Scalar>(m: &DMatrix<T>, k: usize, context: &str) -> Result<DMatrix<T>> {
    let n = m.nrows();
    let p = n - k;
    let m_xx = m.view((0, 0), (p, p)).into_owned();
    let m_xy = m.view((0, p), (p, k)).into_owned();
    let m_yx = m.view((p, 0), (k, p)).into_owned();
    let m_yy = m.view((p, p), (k, k)).into_owned();
    let chol = checked_cholesky(&m_xx, context)?;
    let schur = m_yy - m_yx * chol.solve(&m_xy);
    invert_hermitian(&schur, context)
}
