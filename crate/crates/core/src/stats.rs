//! Marcum Q-function, chi-squared tails, threshold calibration, and predicted
//! detection probability.
//!
//! Two independent routes evaluate the same tail probability:
//! [`marcum_q`] mixes finite Poisson sums (integer order only), while
//! [`noncentral_chi2_sf`] mixes regularized incomplete gamma functions and
//! handles any positive number of degrees of freedom. For `dof = 2K` they
//! satisfy `P(chi2_{2K}(a^2) > b^2) = Q_K(a, b)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::scalar::Field;

/// Truncation target for the Poisson mixtures.
const SERIES_TAIL: f64 = 1e-16;

/// Iterates the Poisson(`mean`) probabilities in log space starting from `k = 0`,
/// calling `term(k, p_k)` until the remaining mass is provably below [`SERIES_TAIL`].
fn poisson_mixture(mean: f64, mut term: impl FnMut(usize, f64)) {
    if mean == 0.0 {
        term(0, 1.0);
        return;
    }
    let ln_mean = mean.ln();
    let cap = (mean + 40.0 * mean.sqrt() + 200.0) as usize;
    let mut ln_p = -mean;
    for k in 0..=cap {
        if k > 0 {
            ln_p += ln_mean - (k as f64).ln();
        }
        let p = ln_p.exp();
        term(k, p);
        let ratio = mean / (k + 1) as f64;
        if ratio < 1.0 && p * ratio / (1.0 - ratio) < SERIES_TAIL {
            break;
        }
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("{name} = {v}")));
    }
    if v < 0.0 {
        return Err(Error::arg(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

/// Generalized Marcum Q-function of positive integer order.
///
/// Evaluated as `sum_k Pois(k; a^2/2) P(Pois(b^2/2) < order + k)`, where the
/// inner Poisson CDF is accumulated term by term as `k` grows.
pub fn marcum_q(order: usize, a: f64, b: f64) -> Result<f64> {
    if order == 0 {
        return Err(Error::arg("Marcum Q order must be positive"));
    }
    check_nonneg("a", a)?;
    check_nonneg("b", b)?;
    if b == 0.0 {
        return Ok(1.0);
    }
    let x = 0.5 * b * b;
    let ln_x = x.ln();
    // cdf = P(Pois(x) <= n - 1), advanced one term at a time
    let mut n = 0usize;
    let mut ln_t = -x;
    let mut cdf = 0.0;
    let mut advance_to = |target: usize, cdf: &mut f64| {
        while n < target {
            if n > 0 {
                ln_t += ln_x - (n as f64).ln();
            }
            *cdf += ln_t.exp();
            n += 1;
        }
    };
    let mut q = 0.0;
    poisson_mixture(0.5 * a * a, |k, p| {
        advance_to(order + k, &mut cdf);
        q += p * cdf.min(1.0);
    });
    Ok(q.clamp(0.0, 1.0))
}

/// Central chi-squared survival function.
pub fn chi2_sf(dof: usize, t: f64) -> Result<f64> {
    noncentral_chi2_sf(dof, 0.0, t)
}

/// Survival function of the noncentral chi-squared law `chi2_dof(kappa)` at `t`.
pub fn noncentral_chi2_sf(dof: usize, kappa: f64, t: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::arg("degrees of freedom must be positive"));
    }
    check_nonneg("kappa", kappa)?;
    if t.is_nan() {
        return Err(Error::NonFinite("t = NaN".into()));
    }
    if t <= 0.0 {
        return Ok(1.0);
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    let half_t = 0.5 * t;
    let mut sf = 0.0;
    poisson_mixture(0.5 * kappa, |j, p| {
        sf += p * gamma_ur(0.5 * dof as f64 + j as f64, half_t);
    });
    Ok(sf.clamp(0.0, 1.0))
}

/// Tail probability of a statistic with `dof` degrees of freedom and noncentrality `kappa`.
/// Even `dof` goes through the Marcum Q-function of order `dof / 2`.
pub fn tail_probability(dof: usize, kappa: f64, lambda: f64) -> Result<f64> {
    check_nonneg("lambda", lambda)?;
    if dof.is_multiple_of(2) && dof > 0 {
        marcum_q(dof / 2, kappa.max(0.0).sqrt(), lambda.sqrt())
    } else {
        noncentral_chi2_sf(dof, kappa, lambda)
    }
}

/// Smallest `lambda` whose central tail probability is at most `alpha`.
pub fn chi2_upper_quantile(dof: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::arg(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if dof == 0 {
        return Err(Error::arg("degrees of freedom must be positive"));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let sf = |l: f64| tail_probability(dof, 0.0, l);
    let mut lo = 0.0;
    let mut hi = dof as f64 + 10.0;
    while sf(hi)? > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let q = sf(mid)?;
        if (q - alpha).abs() < 1e-13 {
            return Ok(mid);
        }
        if q > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(hi)
}

/// Detection threshold for false-alarm rate `alpha` at model order `order`.
pub fn threshold_for_pfa(order: usize, alpha: f64, field: Field) -> Result<f64> {
    if order == 0 {
        return Err(Error::arg("order must be positive"));
    }
    chi2_upper_quantile(field.dof(order), alpha)
}

/// `Q_K(sqrt(kappa), sqrt(lambda))`: detection probability of the complex-field test of order `order`.
pub fn predicted_pd(order: usize, kappa: f64, lambda: f64) -> Result<f64> {
    check_nonneg("kappa", kappa)?;
    check_nonneg("lambda", lambda)?;
    marcum_q(order, kappa.sqrt(), lambda.sqrt())
}

/// Operating point of the block test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionPerformance {
    pub lambda: f64,
    pub p_fa: f64,
    pub p_d: f64,
    pub order: usize,
    pub field: Field,
    /// Noncentrality of the field-scaled statistic.
    pub kappa: f64,
}

impl DetectionPerformance {
    pub fn evaluate(order: usize, field: Field, kappa: f64, lambda: f64) -> Result<Self> {
        let dof = field.dof(order);
        Ok(Self {
            lambda,
            p_fa: tail_probability(dof, 0.0, lambda)?,
            p_d: tail_probability(dof, kappa, lambda)?,
            order,
            field,
            kappa,
        })
    }
}
