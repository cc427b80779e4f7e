//! Block (fixed-N) causality test.
//!
//! `x[n]` is regressed on `z[n] = [x[n-1..n-K]; y[n-1..n-K]]` over the first
//! `N` samples. The cross half `w_y` of the least-squares weights is whitened
//! with the error-shaping matrix `Sigma` and scaled so that, with no causal
//! influence, the statistic is chi-squared with `Field::dof(K)` degrees of
//! freedom.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, invert_hermitian, lower_right, schur_lower_right_inverse, solve_hermitian, whitened_norm2};
use crate::model::SecondOrderStats;
use crate::scalar::{Field, Scalar};

/// Regression design over `N - K` rows.
///
/// Row `i` holds `z^H` for target index `n = K + i`, so `A^H A = sum z z^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T: Scalar> {
    pub order: usize,
    pub a: DMatrix<T>,
    pub targets: DVector<T>,
}

impl<T: Scalar> DataMatrix<T> {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Columns belonging to the `x` past only.
    pub fn own_past(&self) -> DMatrix<T> {
        self.a.columns(0, self.order).into_owned()
    }
}

/// Builds the design from the first `n` samples of `x` and `y`.
pub fn assemble<T: Scalar>(x: &[T], y: &[T], order: usize, n: usize) -> Result<DataMatrix<T>> {
    if order == 0 {
        return Err(Error::arg("order must be positive"));
    }
    if n <= order {
        return Err(Error::arg(format!("window N ({n}) must exceed the order ({order})")));
    }
    if x.len() < n || y.len() < n {
        return Err(Error::arg(format!(
            "need {n} samples of each series, have x={} y={}",
            x.len(),
            y.len()
        )));
    }
    if x[..n].iter().chain(&y[..n]).any(|v| !v.is_finite_value()) {
        return Err(Error::NonFinite("sample".into()));
    }
    let rows = n - order;
    let mut a = DMatrix::<T>::zeros(rows, 2 * order);
    let mut targets = DVector::<T>::zeros(rows);
    for i in 0..rows {
        let t = order + i;
        for j in 0..order {
            a[(i, j)] = x[t - 1 - j].conjugate();
            a[(i, order + j)] = y[t - 1 - j].conjugate();
        }
        targets[i] = x[t];
    }
    Ok(DataMatrix { order, a, targets })
}

/// `Phi = A^H A / (N - K)` and `psi = A^H conj(x) / (N - K)`.
pub fn normal_equations<T: Scalar>(dm: &DataMatrix<T>) -> (DMatrix<T>, DVector<T>) {
    let scale = T::from_re(1.0 / dm.rows().max(1) as f64);
    let phi = linalg::hermitian_part(&(dm.a.ad_mul(&dm.a) * scale));
    let psi = dm.a.ad_mul(&dm.targets.map(|t| t.conjugate())) * scale;
    (phi, psi)
}

/// Least-squares weights from the normal equations.
///
/// Fails with [`Error::IllConditioned`] when the regressors do not excite all
/// `2K` directions (condition number above [`linalg::MAX_CONDITION`]).
pub fn ls_weights<T: Scalar>(phi: &DMatrix<T>, psi: &DVector<T>) -> Result<DVector<T>> {
    solve_hermitian(phi, psi, "sample normal equations")
}

fn residual_sum<T: Scalar>(a: &DMatrix<T>, targets: &DVector<T>, w: &DVector<T>) -> f64 {
    let fitted = a * w;
    targets
        .iter()
        .zip(fitted.iter())
        .map(|(t, f)| (t.conjugate() - *f).abs2_f64())
        .sum()
}

/// Residual power with denominator `(N - K) - 2K`.
pub fn residual_variance<T: Scalar>(dm: &DataMatrix<T>, w_hat: &DVector<T>) -> Result<f64> {
    let params = 2 * dm.order;
    if dm.rows() <= params {
        return Err(Error::arg(format!(
            "{} regression rows leave no residual degrees of freedom for {params} weights",
            dm.rows()
        )));
    }
    Ok(residual_sum(&dm.a, &dm.targets, w_hat) / (dm.rows() - params) as f64)
}

/// True `Sigma` and prediction error variance, for validation runs.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSigma<T: Scalar> {
    pub sigma: DMatrix<T>,
    pub sigma2_phi: f64,
}

impl<T: Scalar> From<&SecondOrderStats<T>> for OracleSigma<T> {
    fn from(stats: &SecondOrderStats<T>) -> Self {
        Self {
            sigma: stats.sigma.clone(),
            sigma2_phi: stats.sigma2_phi(),
        }
    }
}

/// Where the statistic takes `Sigma` and `sigma2_phi` from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SigmaSource<T: Scalar> {
    /// Lower-right block of `Phi^{-1}` and the residual variance of the fit.
    #[default]
    Plugin,
    Oracle(OracleSigma<T>),
}

/// Everything estimated from one window of `N` samples.
#[derive(Debug, Clone)]
pub struct BlockEstimate<T: Scalar> {
    pub order: usize,
    pub n_samples: usize,
    pub phi: DMatrix<T>,
    pub psi: DVector<T>,
    pub w_hat: DVector<T>,
    pub sigma_hat: DMatrix<T>,
    pub sigma2_phi_hat: f64,
}

impl<T: Scalar> BlockEstimate<T> {
    pub fn from_samples(x: &[T], y: &[T], order: usize, n: usize) -> Result<Self> {
        let dm = assemble(x, y, order, n)?;
        Self::from_design(&dm, n)
    }

    pub fn from_design(dm: &DataMatrix<T>, n: usize) -> Result<Self> {
        let (phi, psi) = normal_equations(dm);
        let w_hat = ls_weights(&phi, &psi)?;
        let sigma2_phi_hat = residual_variance(dm, &w_hat)?;
        let phi_inv = invert_hermitian(&phi, "sample covariance")?;
        let sigma_hat = linalg::hermitian_part(&lower_right(&phi_inv, dm.order));
        Ok(Self {
            order: dm.order,
            n_samples: n,
            phi,
            psi,
            w_hat,
            sigma_hat,
            sigma2_phi_hat,
        })
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn dof(&self) -> usize {
        T::FIELD.dof(self.order)
    }

    pub fn w_x(&self) -> DVector<T> {
        self.w_hat.rows(0, self.order).into_owned()
    }

    pub fn w_y(&self) -> DVector<T> {
        self.w_hat.rows(self.order, self.order).into_owned()
    }

    /// Plug-in `Sigma` through the Schur complement of `Phi_xx`; equal to `sigma_hat`.
    pub fn sigma_hat_schur(&self) -> Result<DMatrix<T>> {
        schur_lower_right_inverse(&self.phi, self.order, "sample covariance")
    }

    pub fn test_statistic(&self, source: &SigmaSource<T>) -> Result<f64> {
        test_statistic(self, source)
    }
}

/// `scale * (N - K) / sigma2_phi * w_y^H Sigma^{-1} w_y`.
pub fn test_statistic<T: Scalar>(est: &BlockEstimate<T>, source: &SigmaSource<T>) -> Result<f64> {
    let (sigma, sigma2_phi) = match source {
        SigmaSource::Plugin => (&est.sigma_hat, est.sigma2_phi_hat),
        SigmaSource::Oracle(o) => {
            if o.sigma.nrows() != est.order {
                return Err(Error::arg(format!(
                    "oracle Sigma is {}x{}, estimate has order {}",
                    o.sigma.nrows(),
                    o.sigma.ncols(),
                    est.order
                )));
            }
            (&o.sigma, o.sigma2_phi)
        }
    };
    whitened_statistic(sigma, sigma2_phi, &est.w_y(), (est.n_samples - est.order) as f64)
}

/// Shared by the block and sequential detectors.
pub(crate) fn whitened_statistic<T: Scalar>(
    sigma: &DMatrix<T>,
    sigma2_phi: f64,
    w_y: &DVector<T>,
    effective_rows: f64,
) -> Result<f64> {
    if w_y.iter().all(|w| w.abs2_f64() == 0.0) {
        return Ok(0.0);
    }
    if !(sigma2_phi > 0.0) {
        // exact fit: any nonzero cross weight is infinitely significant
        return Ok(f64::INFINITY);
    }
    let q = whitened_norm2(sigma, w_y, "Sigma")?;
    Ok(T::FIELD.chi2_scale() * effective_rows / sigma2_phi * q)
}

/// Granger causality index `ln(sigma2_reduced / sigma2_full)` from residual powers
/// of the own-past and full regressions over the same rows.
pub fn gci<T: Scalar>(x: &[T], y: &[T], order: usize, n: usize) -> Result<f64> {
    let dm = assemble(x, y, order, n)?;
    let (phi, psi) = normal_equations(&dm);
    let w_full = ls_weights(&phi, &psi)?;
    let k = order;
    let phi_xx = phi.view((0, 0), (k, k)).into_owned();
    let psi_x = psi.rows(0, k).into_owned();
    let w_red = solve_hermitian(&phi_xx, &psi_x, "reduced normal equations")?;
    let full = residual_sum(&dm.a, &dm.targets, &w_full);
    let reduced = residual_sum(&dm.own_past(), &dm.targets, &w_red);
    if !(full > 0.0) {
        return Err(Error::Numerical(
            "full regression fits exactly; index is unbounded".into(),
        ));
    }
    Ok((reduced / full).ln())
}
