use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockdetect::{BlockEstimate, OracleSigma, SigmaSource};
use crate::error::{Error, Result};
use crate::model::{noncentrality, NoiseConfig, SecondOrderStats, VarModel};
use crate::scalar::{Field, Scalar};
use crate::seqdetect::SigmaMode;
use crate::simulate::{corrupt, default_burn_in, derive_seed, generate};
use crate::stats::{chi2_upper_quantile, tail_probability};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub lambda: f64,
    pub p_fa_empirical: f64,
    pub p_d_empirical: f64,
    pub p_fa_theory: f64,
    pub p_d_theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocMeta {
    pub n_samples: usize,
    pub order: usize,
    pub field: Field,
    pub snr_db: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub sigma_mode: SigmaMode,
    /// Noncentrality of the field-scaled statistic under the alternative.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub meta: RocMeta,
    /// Ordered by decreasing threshold.
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    pub fn empirical_auc(&self) -> f64 {
        trapezoid_auc(self.points.iter().map(|p| (p.p_fa_empirical, p.p_d_empirical)))
    }

    pub fn theory_auc(&self) -> f64 {
        trapezoid_auc(self.points.iter().map(|p| (p.p_fa_theory, p.p_d_theory)))
    }
}

/// Area under the polyline through the points plus the `(0,0)` and `(1,1)` corners.
pub fn trapezoid_auc(points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}

/// Thresholds at the central chi-squared upper quantiles for the given false-alarm levels,
/// plus `lambda = 0`.
pub fn threshold_grid(dof: usize, alphas: &[f64]) -> Result<Vec<f64>> {
    let mut grid = vec![0.0];
    for &a in alphas {
        grid.push(chi2_upper_quantile(dof, a)?);
    }
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    Ok(grid)
}

/// Default false-alarm levels for ROC sweeps.
pub fn default_pfa_levels() -> Vec<f64> {
    let mut v = vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05];
    v.extend((2..20).map(|i| i as f64 * 0.05));
    v.extend([0.98, 0.99]);
    v
}

/// Fraction of `values` strictly above each threshold.
pub(crate) fn exceedance(values: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len().max(1) as f64;
    grid.iter()
        .map(|&l| {
            let at_or_below = sorted.partition_point(|&v| v <= l);
            (sorted.len() - at_or_below) as f64 / n
        })
        .collect()
}

fn trial_statistic<T: Scalar>(
    model: &VarModel<T>,
    noise: &NoiseConfig,
    source: &SigmaSource<T>,
    n: usize,
    signal_seed: u64,
    noise_seed: u64,
) -> Result<f64> {
    let clean = generate(model, n, signal_seed, default_burn_in(model.order()))?;
    let obs = corrupt(&clean, noise, noise_seed)?;
    BlockEstimate::from_samples(&obs.x, &obs.y, model.order(), n)?.test_statistic(source)
}

/// Test statistics of `trials` independent realizations of `model` observed
/// through `noise`. Trial `i` draws its signal from `derive_seed(seed, stream, i)`
/// and its noise from `derive_seed(seed, stream + 1, i)`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_statistics<T: Scalar>(
    model: &VarModel<T>,
    noise: &NoiseConfig,
    source: &SigmaSource<T>,
    n: usize,
    trials: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            trial_statistic(
                model,
                noise,
                source,
                n,
                derive_seed(seed, stream, i),
                derive_seed(seed, stream + 1, i),
            )
        })
        .collect()
}

/// Monte Carlo ROC of the block test.
///
/// Each trial simulates the given model (alternative) and the same model with the
/// cross coefficients zeroed (null), both observed at `snr_db` on each series with
/// the noise variances of the alternative. Trials run in parallel with per-trial
/// seeds, so the curve depends only on `seed`.
pub fn run_roc<T: Scalar>(
    model: &VarModel<T>,
    snr_db: f64,
    n: usize,
    trials: usize,
    seed: u64,
    threshold_grid: &[f64],
    sigma_mode: SigmaMode,
) -> Result<RocCurve> {
    if trials == 0 {
        return Err(Error::arg("trials must be >= 1"));
    }
    if threshold_grid.is_empty() {
        return Err(Error::arg("threshold grid is empty"));
    }
    if threshold_grid.iter().any(|l| l.is_nan() || *l < 0.0) {
        return Err(Error::arg("thresholds must be >= 0"));
    }
    let k = model.order();
    let noise = NoiseConfig::from_snr_db(model, snr_db, snr_db)?;
    let null_model = model.without_coupling();
    let alt_stats = SecondOrderStats::new(model, &noise)?;
    let null_stats = SecondOrderStats::new(&null_model, &noise)?;
    let (alt_source, null_source) = match sigma_mode {
        SigmaMode::Plugin => (SigmaSource::Plugin, SigmaSource::Plugin),
        SigmaMode::Oracle => (
            SigmaSource::Oracle(OracleSigma::from(&alt_stats)),
            SigmaSource::Oracle(OracleSigma::from(&null_stats)),
        ),
    };
    let kappa = T::FIELD.chi2_scale() * noncentrality(&alt_stats, n)?;
    let dof = T::FIELD.dof(k);

    let alt = monte_carlo_statistics(model, &noise, &alt_source, n, trials, seed, 0)?;
    let null = monte_carlo_statistics(&null_model, &noise, &null_source, n, trials, seed, 2)?;

    let mut grid = threshold_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let pd = exceedance(&alt, &grid);
    let pfa = exceedance(&null, &grid);
    let points = grid
        .iter()
        .zip(pd.iter().zip(&pfa))
        .map(|(&lambda, (&p_d, &p_fa))| {
            Ok(RocPoint {
                lambda,
                p_fa_empirical: p_fa,
                p_d_empirical: p_d,
                p_fa_theory: tail_probability(dof, 0.0, lambda)?,
                p_d_theory: tail_probability(dof, kappa, lambda)?,
            })
        })
        .collect::<Result<_>>()?;

    Ok(RocCurve {
        meta: RocMeta {
            n_samples: n,
            order: k,
            field: T::FIELD,
            snr_db,
            trials,
            master_seed: seed,
            sigma_mode,
            kappa,
        },
        points,
    })
}
