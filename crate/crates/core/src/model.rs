//! Ground-truth bivariate VAR-K process with unidirectional coupling `v -> u`,
//! and its exact second-order statistics.
//!
//! The clean processes follow
//!
//! ```text
//! u[n] = sum_k conj(a_uu[k]) u[n-k] + sum_k conj(a_uv[k]) v[n-k] + eta_u[n]
//! v[n] = sum_k conj(a_vv[k]) v[n-k]                               + eta_v[n]
//! ```
//!
//! and are observed as `x = u + nu_x`, `y = v + nu_y`. The detector regresses
//! `x[n]` on the stacked past `z[n] = [x[n-1..n-K]; y[n-1..n-K]]`; all
//! correlation conventions below use `r_ab[tau] = E[a[n] conj(b[n - tau])]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, invert_hermitian, lower_right, solve_hermitian};
use crate::scalar::{Field, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct VarModel<T: Scalar> {
    order: usize,
    a_uu: Vec<T>,
    a_uv: Vec<T>,
    a_vv: Vec<T>,
    sigma2_eta_u: f64,
    sigma2_eta_v: f64,
}

impl<T: Scalar> VarModel<T> {
    /// Validates lengths, variances, and stability of both univariate recursions.
    pub fn new(a_uu: Vec<T>, a_uv: Vec<T>, a_vv: Vec<T>, sigma2_eta_u: f64, sigma2_eta_v: f64) -> Result<Self> {
        let order = a_uu.len();
        if order == 0 {
            return Err(Error::arg("model order must be positive"));
        }
        if a_uv.len() != order || a_vv.len() != order {
            return Err(Error::arg(format!(
                "coefficient lengths differ: a_uu={}, a_uv={}, a_vv={}",
                order,
                a_uv.len(),
                a_vv.len()
            )));
        }
        if a_uu.iter().chain(&a_uv).chain(&a_vv).any(|a| !a.is_finite_value()) {
            return Err(Error::NonFinite("model coefficient".into()));
        }
        for (name, s) in [("sigma2_eta_u", sigma2_eta_u), ("sigma2_eta_v", sigma2_eta_v)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::arg(format!("{name} must be finite and > 0, got {s}")));
            }
        }
        if !is_stable(&a_uu) {
            return Err(Error::UnstableModel(
                "a_uu recursion has a root on or outside the unit circle".into(),
            ));
        }
        if !is_stable(&a_vv) {
            return Err(Error::UnstableModel(
                "a_vv recursion has a root on or outside the unit circle".into(),
            ));
        }
        Ok(Self {
            order,
            a_uu,
            a_uv,
            a_vv,
            sigma2_eta_u,
            sigma2_eta_v,
        })
    }

    /// First-order model `u[n] = a v[n-1] + eta_u[n]`, `v[n] = eta_v[n]`, unit innovations.
    pub fn toy(a: f64) -> Self {
        Self::new(vec![T::zero()], vec![T::from_re(a)], vec![T::zero()], 1.0, 1.0)
            .expect("first-order toy model is always stable")
    }

    /// Same model with the cross coefficients zeroed: the null hypothesis counterpart.
    pub fn without_coupling(&self) -> Self {
        Self {
            a_uv: vec![T::zero(); self.order],
            ..self.clone()
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn a_uu(&self) -> &[T] {
        &self.a_uu
    }

    pub fn a_uv(&self) -> &[T] {
        &self.a_uv
    }

    pub fn a_vv(&self) -> &[T] {
        &self.a_vv
    }

    pub fn sigma2_eta_u(&self) -> f64 {
        self.sigma2_eta_u
    }

    pub fn sigma2_eta_v(&self) -> f64 {
        self.sigma2_eta_v
    }

    pub fn is_coupled(&self) -> bool {
        self.a_uv.iter().any(|a| a.abs2_f64() > 0.0)
    }

    /// State-space transition over `s[n] = [u[n..n-K+1]; v[n..n-K+1]]`.
    pub(crate) fn transition(&self) -> DMatrix<T> {
        let k = self.order;
        let mut f = DMatrix::<T>::zeros(2 * k, 2 * k);
        for j in 0..k {
            f[(0, j)] = self.a_uu[j].conjugate();
            f[(0, k + j)] = self.a_uv[j].conjugate();
            f[(k, k + j)] = self.a_vv[j].conjugate();
        }
        for i in 1..k {
            f[(i, i - 1)] = T::one();
            f[(k + i, k + i - 1)] = T::one();
        }
        f
    }

    /// Stationary covariance of the clean state vector, from the discrete Lyapunov equation
    /// `P = F P F^H + Q`, solved as one linear system in `vec(P)`.
    pub(crate) fn state_covariance(&self) -> Result<DMatrix<T>> {
        let k = self.order;
        let n = 2 * k;
        let f = self.transition();
        let mut q = DMatrix::<T>::zeros(n, n);
        q[(0, 0)] = T::from_re(self.sigma2_eta_u);
        q[(k, k)] = T::from_re(self.sigma2_eta_v);
        let kron = f.map(|v| v.conjugate()).kronecker(&f);
        let system = DMatrix::<T>::identity(n * n, n * n) - kron;
        let rhs = DVector::from_column_slice(q.as_slice());
        let sol = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("stationary covariance system is singular".into()))?;
        let p = DMatrix::from_column_slice(n, n, sol.as_slice());
        if p.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::Numerical("stationary covariance is not finite".into()));
        }
        Ok(linalg::hermitian_part(&p))
    }

    /// Stationary variances `(r_uu[0], r_vv[0])` of the clean processes.
    pub fn stationary_variances(&self) -> Result<(f64, f64)> {
        let p = self.state_covariance()?;
        Ok((p[(0, 0)].re_f64(), p[(self.order, self.order)].re_f64()))
    }
}

/// Stability of `w[n] = sum_k conj(a[k]) w[n-k] + e[n]`, via the step-down (Schur-Cohn) recursion:
/// every reflection coefficient must lie strictly inside the unit disc.
pub fn is_stable<T: Scalar>(a: &[T]) -> bool {
    // characteristic polynomial 1 + sum_k c[k] z^{-k} with c[k] = -conj(a[k])
    let mut c: Vec<(f64, f64)> = a.iter().map(|v| (-v.re_f64(), v.im_f64())).collect();
    while let Some(&(kr, ki)) = c.last() {
        let m = c.len();
        let mag2 = kr * kr + ki * ki;
        if !(mag2 < 1.0) {
            return false;
        }
        let denom = 1.0 - mag2;
        let prev: Vec<(f64, f64)> = (0..m - 1)
            .map(|i| {
                let (cr, ci) = c[i];
                // k * conj(c[m - 2 - i])
                let (dr, di) = c[m - 2 - i];
                let pr = kr * dr + ki * di;
                let pi = ki * dr - kr * di;
                ((cr - pr) / denom, (ci - pi) / denom)
            })
            .collect();
        c = prev;
    }
    true
}

/// Additive white measurement noise variances for the two observed series.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub sigma2_nu_x: f64,
    pub sigma2_nu_y: f64,
}

impl NoiseConfig {
    pub fn new(sigma2_nu_x: f64, sigma2_nu_y: f64) -> Result<Self> {
        for (name, s) in [("sigma2_nu_x", sigma2_nu_x), ("sigma2_nu_y", sigma2_nu_y)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::arg(format!("{name} must be finite and >= 0, got {s}")));
            }
        }
        Ok(Self {
            sigma2_nu_x,
            sigma2_nu_y,
        })
    }

    pub fn noiseless() -> Self {
        Self::default()
    }

    /// Noise variances giving the requested per-series SNR against the model's stationary variances.
    pub fn from_snr_db<T: Scalar>(model: &VarModel<T>, snr_x_db: f64, snr_y_db: f64) -> Result<Self> {
        let (var_u, var_v) = model.stationary_variances()?;
        Self::new(
            noise_variance_for_snr(var_u, snr_x_db)?,
            noise_variance_for_snr(var_v, snr_y_db)?,
        )
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma2_nu_x == 0.0 && self.sigma2_nu_y == 0.0
    }
}

/// `signal_variance * 10^(-snr_db / 10)`; `+inf` dB means no noise.
pub fn noise_variance_for_snr(signal_variance: f64, snr_db: f64) -> Result<f64> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::arg(format!("SNR must be a number or +inf, got {snr_db}")));
    }
    if !(signal_variance >= 0.0 && signal_variance.is_finite()) {
        return Err(Error::arg(format!(
            "signal variance must be finite and >= 0, got {signal_variance}"
        )));
    }
    Ok(signal_variance * 10f64.powf(-snr_db / 10.0))
}

/// Exact correlation sequences of the clean processes for lags `0..=lag_max`,
/// together with the measurement noise that enters at lag zero.
#[derive(Debug, Clone)]
pub struct Correlations<T: Scalar> {
    order: usize,
    lag_max: usize,
    pub r_uu: Vec<T>,
    pub r_uv: Vec<T>,
    pub r_vu: Vec<T>,
    pub r_vv: Vec<T>,
    pub noise: NoiseConfig,
}

impl<T: Scalar> Correlations<T> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lag_max(&self) -> usize {
        self.lag_max
    }

    fn check(&self, lag: isize) -> usize {
        let m = lag.unsigned_abs();
        assert!(m <= self.lag_max, "lag {lag} outside +-{}", self.lag_max);
        m
    }

    /// `r_uu[lag]` for any signed lag, via conjugate symmetry.
    pub fn uu(&self, lag: isize) -> T {
        let m = self.check(lag);
        if lag >= 0 {
            self.r_uu[m]
        } else {
            self.r_uu[m].conjugate()
        }
    }

    pub fn vv(&self, lag: isize) -> T {
        let m = self.check(lag);
        if lag >= 0 {
            self.r_vv[m]
        } else {
            self.r_vv[m].conjugate()
        }
    }

    /// `r_uv[lag]`; negative lags come from `r_uv[-m] = conj(r_vu[m])`.
    pub fn uv(&self, lag: isize) -> T {
        let m = self.check(lag);
        if lag >= 0 {
            self.r_uv[m]
        } else {
            self.r_vu[m].conjugate()
        }
    }

    pub fn vu(&self, lag: isize) -> T {
        self.uv(-lag).conjugate()
    }

    /// Noise-inclusive autocorrelation of the observed `x`.
    pub fn xx(&self, lag: isize) -> T {
        let r = self.uu(lag);
        if lag == 0 {
            r + T::from_re(self.noise.sigma2_nu_x)
        } else {
            r
        }
    }

    pub fn yy(&self, lag: isize) -> T {
        let r = self.vv(lag);
        if lag == 0 {
            r + T::from_re(self.noise.sigma2_nu_y)
        } else {
            r
        }
    }

    /// Measurement noise is independent of everything, so cross terms are unaffected.
    pub fn xy(&self, lag: isize) -> T {
        self.uv(lag)
    }

    /// `E[z z^H]` for the regressor `z = [x_K[n-1]; y_K[n-1]]`, blocks `[R_xx R_xy; R_yx R_yy]`.
    pub fn joint_covariance(&self) -> DMatrix<T> {
        let k = self.order;
        let mut r = DMatrix::<T>::zeros(2 * k, 2 * k);
        for i in 0..k {
            for j in 0..k {
                let lag = j as isize - i as isize;
                r[(i, j)] = self.xx(lag);
                r[(i, k + j)] = self.xy(lag);
                r[(k + i, j)] = self.xy(-lag).conjugate();
                r[(k + i, k + j)] = self.yy(lag);
            }
        }
        r
    }

    /// `E[z[n] conj(x[n])]`, the right-hand side of the MMSE normal equations.
    pub fn cross_vector(&self) -> DVector<T> {
        let k = self.order;
        let mut p = DVector::<T>::zeros(2 * k);
        for i in 0..k {
            let lag = (i + 1) as isize;
            p[i] = self.xx(lag).conjugate();
            p[k + i] = self.xy(lag).conjugate();
        }
        p
    }
}

/// Solves for the stationary second-order statistics of `model`, then extends them
/// to `lag_max` with the model's correlation recursions.
pub fn theoretical_correlations<T: Scalar>(
    model: &VarModel<T>,
    noise: &NoiseConfig,
    lag_max: usize,
) -> Result<Correlations<T>> {
    let k = model.order();
    if lag_max < k {
        return Err(Error::arg(format!("lag_max ({lag_max}) must be >= order ({k})")));
    }
    let p = model.state_covariance()?;
    let len = lag_max + 1;
    let mut r_uu = vec![T::zero(); len];
    let mut r_uv = vec![T::zero(); len];
    let mut r_vu = vec![T::zero(); len];
    let mut r_vv = vec![T::zero(); len];
    // P[i][j] = E[s_i conj(s_j)]: u-block rows give r_uu[j - i], etc.
    for tau in 0..k {
        r_uu[tau] = p[(0, tau)];
        r_vv[tau] = p[(k, k + tau)];
        r_uv[tau] = p[(0, k + tau)];
        r_vu[tau] = p[(k, tau)];
    }
    r_uu[0] = T::from_re(r_uu[0].re_f64());
    r_vv[0] = T::from_re(r_vv[0].re_f64());

    let at = |seq: &[T], lag: isize| -> T {
        if lag >= 0 {
            seq[lag as usize]
        } else {
            seq[lag.unsigned_abs()].conjugate()
        }
    };
    for tau in k..len {
        let mut uu = T::zero();
        let mut uv = T::zero();
        let mut vu = T::zero();
        let mut vv = T::zero();
        for j in 0..k {
            let lag = tau as isize - (j as isize + 1);
            let auu = model.a_uu[j].conjugate();
            let auv = model.a_uv[j].conjugate();
            let avv = model.a_vv[j].conjugate();
            // r_vu at negative lag is conj(r_uv) at the positive lag
            let r_vu_lag = if lag >= 0 {
                r_vu[lag as usize]
            } else {
                r_uv[lag.unsigned_abs()].conjugate()
            };
            let r_uv_lag = if lag >= 0 {
                r_uv[lag as usize]
            } else {
                r_vu[lag.unsigned_abs()].conjugate()
            };
            uu += auu * at(&r_uu, lag) + auv * r_vu_lag;
            uv += auu * r_uv_lag + auv * at(&r_vv, lag);
            vu += avv * r_vu_lag;
            vv += avv * at(&r_vv, lag);
        }
        r_uu[tau] = uu;
        r_uv[tau] = uv;
        r_vu[tau] = vu;
        r_vv[tau] = vv;
    }
    Ok(Correlations {
        order: k,
        lag_max,
        r_uu,
        r_uv,
        r_vu,
        r_vv,
        noise: *noise,
    })
}

/// MMSE regression of `x[n]` on `z[n]`.
#[derive(Debug, Clone)]
pub struct MmseWeights<T: Scalar> {
    pub w_x: DVector<T>,
    pub w_y: DVector<T>,
    pub sigma2_phi: f64,
}

fn weights_from_correlations<T: Scalar>(corr: &Correlations<T>) -> Result<(DMatrix<T>, MmseWeights<T>)> {
    let k = corr.order();
    let r_full = corr.joint_covariance();
    let p = corr.cross_vector();
    let w = solve_hermitian(&r_full, &p, "MMSE normal equations")?;
    let sigma2_phi = corr.xx(0).re_f64() - p.dotc(&w).re_f64();
    let weights = MmseWeights {
        w_x: w.rows(0, k).into_owned(),
        w_y: w.rows(k, k).into_owned(),
        sigma2_phi,
    };
    Ok((r_full, weights))
}

/// MMSE weights `[w_x; w_y] = R_full^{-1} p` and the resulting prediction error variance.
pub fn mmse_weights<T: Scalar>(model: &VarModel<T>, noise: &NoiseConfig) -> Result<MmseWeights<T>> {
    let corr = theoretical_correlations(model, noise, model.order())?;
    Ok(weights_from_correlations(&corr)?.1)
}

/// Lower-right `K x K` block of `R_full^{-1}`: the shape of the LS error covariance of `w_y`.
pub fn error_covariance<T: Scalar>(corr: &Correlations<T>) -> Result<DMatrix<T>> {
    let inv = invert_hermitian(&corr.joint_covariance(), "joint regressor covariance")?;
    Ok(linalg::hermitian_part(&lower_right(&inv, corr.order())))
}

/// Prediction error variance of `x[n]` from its own past only.
pub fn reduced_prediction_variance<T: Scalar>(corr: &Correlations<T>) -> Result<f64> {
    let k = corr.order();
    let r_full = corr.joint_covariance();
    let p = corr.cross_vector();
    let r_xx = r_full.view((0, 0), (k, k)).into_owned();
    let p_x = p.rows(0, k).into_owned();
    let w = solve_hermitian(&r_xx, &p_x, "reduced normal equations")?;
    Ok(corr.xx(0).re_f64() - p_x.dotc(&w).re_f64())
}

/// Everything the detectors need from the true statistics of a (model, noise) pair.
#[derive(Debug, Clone)]
pub struct SecondOrderStats<T: Scalar> {
    pub correlations: Correlations<T>,
    pub r_full: DMatrix<T>,
    pub weights: MmseWeights<T>,
    pub sigma: DMatrix<T>,
}

impl<T: Scalar> SecondOrderStats<T> {
    pub fn new(model: &VarModel<T>, noise: &NoiseConfig) -> Result<Self> {
        let correlations = theoretical_correlations(model, noise, model.order())?;
        let (r_full, weights) = weights_from_correlations(&correlations)?;
        let sigma = error_covariance(&correlations)?;
        Ok(Self {
            correlations,
            r_full,
            weights,
            sigma,
        })
    }

    pub fn order(&self) -> usize {
        self.correlations.order()
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn w_x(&self) -> &DVector<T> {
        &self.weights.w_x
    }

    pub fn w_y(&self) -> &DVector<T> {
        &self.weights.w_y
    }

    pub fn sigma2_phi(&self) -> f64 {
        self.weights.sigma2_phi
    }

    /// Per-sample growth rate `w_y^H Sigma^{-1} w_y / sigma2_phi` of the noncentrality.
    pub fn noncentrality_rate(&self) -> Result<f64> {
        let q = linalg::whitened_norm2(&self.sigma, &self.weights.w_y, "Sigma")?;
        Ok(q / self.sigma2_phi())
    }

    /// Difference between the computed prediction error variance and `sigma2_eta_v + sigma2_nu_y`.
    ///
    /// The latter closed form is only valid for special models; this is a diagnostic, never used.
    pub fn closed_form_sigma2_phi_gap(&self, model: &VarModel<T>) -> f64 {
        self.sigma2_phi() - (model.sigma2_eta_v() + self.correlations.noise.sigma2_nu_y)
    }
}

/// `kappa = (N - K) / sigma2_phi * w_y^H Sigma^{-1} w_y`.
///
/// This is the noncentrality in units of the complex-variance convention; the
/// noncentrality of the field-scaled statistic is `Field::chi2_scale() * kappa`.
pub fn noncentrality<T: Scalar>(stats: &SecondOrderStats<T>, n_samples: usize) -> Result<f64> {
    let k = stats.order();
    if n_samples <= k {
        return Err(Error::arg(format!("N ({n_samples}) must exceed the order ({k})")));
    }
    Ok((n_samples - k) as f64 * stats.noncentrality_rate()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// Substitutes the sequences back into the three model recursions.
    fn recursion_residual<T: Scalar>(model: &VarModel<T>, c: &Correlations<T>) -> f64 {
        let k = model.order() as isize;
        let mut worst: f64 = 0.0;
        for tau in 0..=(c.lag_max() as isize) {
            if tau - k < -(c.lag_max() as isize) {
                continue;
            }
            let mut uu = if tau == 0 {
                T::from_re(model.sigma2_eta_u())
            } else {
                T::zero()
            };
            let mut uv = T::zero();
            let mut vv = if tau == 0 {
                T::from_re(model.sigma2_eta_v())
            } else {
                T::zero()
            };
            for j in 0..model.order() {
                let lag = tau - 1 - j as isize;
                uu += model.a_uu()[j].conjugate() * c.uu(lag) + model.a_uv()[j].conjugate() * c.vu(lag);
                uv += model.a_uu()[j].conjugate() * c.uv(lag) + model.a_uv()[j].conjugate() * c.vv(lag);
                vv += model.a_vv()[j].conjugate() * c.vv(lag);
            }
            worst = worst
                .max((uu - c.uu(tau)).abs2_f64().sqrt())
                .max((uv - c.uv(tau)).abs2_f64().sqrt())
                .max((vv - c.vv(tau)).abs2_f64().sqrt());
        }
        worst
    }

    fn order3_complex() -> VarModel<Complex64> {
        VarModel::new(
            vec![
                Complex64::new(0.3, 0.1),
                Complex64::new(-0.2, 0.05),
                Complex64::new(0.1, 0.0),
            ],
            vec![
                Complex64::new(0.4, -0.2),
                Complex64::new(0.0, 0.3),
                Complex64::new(-0.15, 0.0),
            ],
            vec![
                Complex64::new(0.5, 0.2),
                Complex64::new(-0.3, 0.0),
                Complex64::new(0.1, -0.1),
            ],
            1.3,
            0.7,
        )
        .unwrap()
    }

    #[test]
    fn toy_model_correlations() {
        let m = VarModel::<f64>::toy(0.25);
        let c = theoretical_correlations(&m, &NoiseConfig::noiseless(), 4).unwrap();
        assert!((c.r_vv[0] - 1.0).abs() < 1e-12);
        assert!((c.r_uu[0] - 1.0625).abs() < 1e-12);
        assert!((c.r_uv[1] - 0.25).abs() < 1e-12);
        for tau in 1..=4 {
            assert!(c.r_vv[tau].abs() < 1e-12);
        }
        assert!(c.r_uv[0].abs() < 1e-12);
        assert!(c.r_uv[2].abs() < 1e-12);
    }

    #[test]
    fn uncoupled_model_has_no_cross_correlation() {
        let m = VarModel::<f64>::new(vec![0.6, -0.2], vec![0.0, 0.0], vec![0.4, 0.3], 1.0, 2.0).unwrap();
        let c = theoretical_correlations(&m, &NoiseConfig::noiseless(), 10).unwrap();
        assert!(c.r_uv.iter().chain(&c.r_vu).all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn recursions_hold_for_higher_orders() {
        let real = VarModel::<f64>::new(vec![0.5, -0.3], vec![0.4, 0.2], vec![0.7, -0.2], 1.0, 0.5).unwrap();
        let c = theoretical_correlations(&real, &NoiseConfig::noiseless(), 12).unwrap();
        assert!(recursion_residual(&real, &c) < 1e-10);

        let cplx = order3_complex();
        let c = theoretical_correlations(&cplx, &NoiseConfig::noiseless(), 12).unwrap();
        assert!(recursion_residual(&cplx, &c) < 1e-10);
        assert!(c.r_uu[0].im.abs() < 1e-14 && c.r_uu[0].re > 0.0);
    }

    #[test]
    fn noiseless_weights_recover_generative_coefficients() {
        let cplx = order3_complex();
        let w = mmse_weights(&cplx, &NoiseConfig::noiseless()).unwrap();
        for j in 0..3 {
            assert!((w.w_x[j] - cplx.a_uu()[j]).norm() < 1e-10);
            assert!((w.w_y[j] - cplx.a_uv()[j]).norm() < 1e-10);
        }
        assert!((w.sigma2_phi - 1.3).abs() < 1e-10);
    }

    #[test]
    fn toy_weights_and_sigma() {
        let m = VarModel::<f64>::toy(0.25);
        let s = SecondOrderStats::new(&m, &NoiseConfig::noiseless()).unwrap();
        assert!(s.w_x()[0].abs() < 1e-12);
        assert!((s.w_y()[0] - 0.25).abs() < 1e-12);
        assert!((s.sigma2_phi() - 1.0).abs() < 1e-12);
        assert!((s.sigma[(0, 0)] - 1.0).abs() < 1e-12);

        let noisy = SecondOrderStats::new(&m, &NoiseConfig::new(0.0, 1.0).unwrap()).unwrap();
        assert!((noisy.w_y()[0] - 0.125).abs() < 1e-12);
        assert!((noisy.sigma[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sigma_is_block_inverse_when_cross_block_vanishes() {
        let m = VarModel::<f64>::new(vec![0.5, 0.1], vec![0.0, 0.0], vec![0.3, 0.2], 1.0, 1.5).unwrap();
        let c = theoretical_correlations(&m, &NoiseConfig::new(0.2, 0.3).unwrap(), 2).unwrap();
        let sigma = error_covariance(&c).unwrap();
        let r = c.joint_covariance();
        let r_yy_inv = r.view((2, 2), (2, 2)).into_owned().try_inverse().unwrap();
        assert!((sigma - r_yy_inv).amax() < 1e-12);
    }

    #[test]
    fn toy_noncentrality() {
        let m = VarModel::<f64>::toy(0.25);
        let s = SecondOrderStats::new(&m, &NoiseConfig::noiseless()).unwrap();
        assert!((noncentrality(&s, 101).unwrap() - 6.25).abs() < 1e-10);
        assert!(noncentrality(&s, 1).is_err());
        let k1 = noncentrality(&s, 51).unwrap();
        let k2 = noncentrality(&s, 101).unwrap();
        assert!((k2 - 2.0 * k1).abs() < 1e-10);

        let null = SecondOrderStats::new(&m.without_coupling(), &NoiseConfig::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(noncentrality(&null, 500).unwrap(), 0.0);
    }

    #[test]
    fn stability_detection() {
        assert!(is_stable(&[0.5f64]));
        assert!(!is_stable(&[1.0f64]));
        assert!(!is_stable(&[-1.2f64]));
        assert!(is_stable(&[1.5f64, -0.9]));
        assert!(!is_stable(&[0.5f64, 0.6]));
        assert!(is_stable(&[Complex64::new(0.6, 0.6)]));
        assert!(!is_stable(&[Complex64::new(0.8, 0.7)]));
        assert!(matches!(
            VarModel::<f64>::new(vec![1.1], vec![0.0], vec![0.0], 1.0, 1.0),
            Err(Error::UnstableModel(_))
        ));
        assert!(VarModel::<f64>::new(vec![0.0], vec![0.0], vec![0.0], 0.0, 1.0).is_err());
        assert!(VarModel::<f64>::new(vec![0.0, 0.1], vec![0.0], vec![0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn snr_noise_variance() {
        assert_eq!(noise_variance_for_snr(2.0, 0.0).unwrap(), 2.0);
        assert!((noise_variance_for_snr(2.0, 20.0).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(noise_variance_for_snr(2.0, f64::INFINITY).unwrap(), 0.0);
        assert!(noise_variance_for_snr(2.0, f64::NAN).is_err());
        let toy = VarModel::<f64>::toy(0.25);
        let n = NoiseConfig::from_snr_db(&toy, 0.0, 0.0).unwrap();
        assert!((n.sigma2_nu_x - 1.0625).abs() < 1e-12);
        assert!((n.sigma2_nu_y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_reduces_cross_weight_monotonically() {
        let m = VarModel::<f64>::toy(0.25);
        for &nx in &[0.0, 0.5, 2.0] {
            let mut last = f64::INFINITY;
            for i in 0..12 {
                let ny = 0.25 * i as f64;
                let w = mmse_weights(&m, &NoiseConfig::new(nx, ny).unwrap()).unwrap();
                let norm = w.w_y.norm();
                assert!(norm < last, "nx={nx} ny={ny}");
                last = norm;
            }
        }
    }

    #[test]
    fn sigma_is_positive_definite() {
        let s = SecondOrderStats::new(&order3_complex(), &NoiseConfig::new(0.1, 0.4).unwrap()).unwrap();
        let eig = s.sigma.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > 0.0));
        assert!((&s.sigma - s.sigma.adjoint()).camax() < 1e-12);
    }
}
