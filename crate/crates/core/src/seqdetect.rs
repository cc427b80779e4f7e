//! Sequential causality detector.
//!
//! Each incoming pair `(x[n], y[n])` updates the least-squares weights by
//! recursive least squares with forgetting factor `mu`, after which the
//! whitened cross-weight statistic `T[n]` is compared with a lower threshold
//! `lambda0` (declare non-causal) and an upper threshold `lambda1` (declare
//! causal). In between, the detector waits for the next sample. A run still
//! undecided at `n_max` is resolved by the block rule at false-alarm level
//! `alpha`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::blockdetect::{whitened_statistic, OracleSigma};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, invert_hermitian, lower_right};
use crate::scalar::{Field, Scalar};
use crate::stats::{chi2_upper_quantile, threshold_for_pfa};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMode {
    #[default]
    Plugin,
    Oracle,
}

impl FromStr for SigmaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plugin" | "plug-in" => Ok(SigmaMode::Plugin),
            "oracle" => Ok(SigmaMode::Oracle),
            other => Err(Error::arg(format!(
                "unknown sigma mode `{other}` (expected plugin|oracle)"
            ))),
        }
    }
}

impl fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SigmaMode::Plugin => "plugin",
            SigmaMode::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqConfig {
    pub order: usize,
    /// Forgetting factor in `(0, 1]`.
    pub mu: f64,
    /// Initial inverse covariance is `I / delta`.
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_max: usize,
    pub sigma_mode: SigmaMode,
}

impl SeqConfig {
    /// Shipped defaults: `mu = 1`, `delta = 1e-6`, `alpha = 0.1`, `beta = 0.05`,
    /// `n_max = 20 K / alpha`, plug-in `Sigma`.
    pub fn new(order: usize) -> Self {
        let alpha = 0.1;
        Self {
            order,
            mu: 1.0,
            delta: 1e-6,
            alpha,
            beta: 0.05,
            n_max: (20.0 * order as f64 / alpha).ceil() as usize,
            sigma_mode: SigmaMode::Plugin,
        }
    }

    /// First sample index at which a terminal verdict is allowed.
    pub fn n_min(&self) -> usize {
        4 * self.order
    }

    pub fn validate(&self, field: Field) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Config("order must be positive".into()));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::Config(format!("mu must lie in (0, 1], got {}", self.mu)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be finite and > 0, got {}",
                self.delta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if self.n_max < self.n_min() {
            return Err(Error::Config(format!(
                "n_max ({}) is below the warm-up length {}",
                self.n_max,
                self.n_min()
            )));
        }
        let (l0, l1) = schedule(self, field)?;
        if !(l0 < l1) {
            return Err(Error::Config(format!(
                "threshold schedule needs lambda0 < lambda1, got {l0} >= {l1} (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Constant chi-squared quantile thresholds: `lambda1` at `1 - alpha`, `lambda0` at `beta`.
fn schedule(config: &SeqConfig, field: Field) -> Result<(f64, f64)> {
    let dof = field.dof(config.order);
    let lambda1 = chi2_upper_quantile(dof, config.alpha)?;
    let lambda0 = chi2_upper_quantile(dof, 1.0 - config.beta)?;
    Ok((lambda0, lambda1))
}

/// `(lambda0[n], lambda1[n])` for `n >= n_min`.
pub fn thresholds(n: usize, config: &SeqConfig, field: Field) -> Result<(f64, f64)> {
    if n < config.n_min() {
        return Err(Error::arg(format!(
            "n = {n} is inside the warm-up (n_min = {})",
            config.n_min()
        )));
    }
    config.validate(field)?;
    schedule(config, field)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Causal,
    Noncausal,
    Continue,
}

impl Verdict {
    pub fn is_terminal(self) -> bool {
        self != Verdict::Continue
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Causal => "causal",
            Verdict::Noncausal => "noncausal",
            Verdict::Continue => "continue",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    /// Sample index of the decision (the current index while continuing).
    pub n: usize,
    pub statistic: f64,
}

/// RLS state plus the decision logic. One instance per stream.
#[derive(Debug, Clone)]
pub struct SeqDetector<T: Scalar> {
    config: SeqConfig,
    oracle: Option<OracleSigma<T>>,
    lambda0: f64,
    lambda1: f64,
    block_threshold: f64,
    n: usize,
    updates: usize,
    hist_x: VecDeque<T>,
    hist_y: VecDeque<T>,
    w_hat: DVector<T>,
    p: DMatrix<T>,
    phi: DMatrix<T>,
    psi: DVector<T>,
    residual_energy: f64,
    anchored: bool,
    statistic: f64,
    decided: Option<Decision>,
}

impl<T: Scalar> SeqDetector<T> {
    /// Plug-in detector. Oracle mode needs [`SeqDetector::with_oracle`].
    pub fn new(config: SeqConfig) -> Result<Self> {
        if config.sigma_mode == SigmaMode::Oracle {
            return Err(Error::Config("oracle sigma mode requires true statistics".into()));
        }
        Self::build(config, None)
    }

    pub fn with_oracle(config: SeqConfig, oracle: OracleSigma<T>) -> Result<Self> {
        if oracle.sigma.nrows() != config.order || oracle.sigma.ncols() != config.order {
            return Err(Error::Config(format!(
                "oracle Sigma is {}x{}, detector order is {}",
                oracle.sigma.nrows(),
                oracle.sigma.ncols(),
                config.order
            )));
        }
        if !(oracle.sigma2_phi > 0.0) {
            return Err(Error::Config("oracle prediction error variance must be > 0".into()));
        }
        Self::build(
            SeqConfig {
                sigma_mode: SigmaMode::Oracle,
                ..config
            },
            Some(oracle),
        )
    }

    fn build(config: SeqConfig, oracle: Option<OracleSigma<T>>) -> Result<Self> {
        config.validate(T::FIELD)?;
        let (lambda0, lambda1) = schedule(&config, T::FIELD)?;
        let block_threshold = threshold_for_pfa(config.order, config.alpha, T::FIELD)?;
        let dim = 2 * config.order;
        Ok(Self {
            lambda0,
            lambda1,
            block_threshold,
            n: 0,
            updates: 0,
            hist_x: VecDeque::with_capacity(config.order + 1),
            hist_y: VecDeque::with_capacity(config.order + 1),
            w_hat: DVector::zeros(dim),
            p: DMatrix::identity(dim, dim) * T::from_re(1.0 / config.delta),
            phi: DMatrix::identity(dim, dim) * T::from_re(config.delta),
            psi: DVector::zeros(dim),
            residual_energy: 0.0,
            anchored: false,
            statistic: 0.0,
            decided: None,
            oracle,
            config,
        })
    }

    pub fn config(&self) -> &SeqConfig {
        &self.config
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.lambda0, self.lambda1)
    }

    pub fn samples_seen(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &DVector<T> {
        &self.w_hat
    }

    /// Current `Phi^{-1}[n]`.
    pub fn inverse_covariance(&self) -> &DMatrix<T> {
        &self.p
    }

    /// Exponentially weighted `sum z z^H`, including the `delta I` initialization.
    pub fn covariance(&self) -> &DMatrix<T> {
        &self.phi
    }

    pub fn cross_correlation(&self) -> &DVector<T> {
        &self.psi
    }

    pub fn statistic(&self) -> f64 {
        self.statistic
    }

    pub fn decision(&self) -> Option<Decision> {
        self.decided
    }

    /// `(1 - mu^m) / (1 - mu)` over the `m = n - K` regression updates so far.
    pub fn effective_rows(&self) -> f64 {
        let m = self.updates as f64;
        if self.config.mu == 1.0 {
            m
        } else {
            (1.0 - self.config.mu.powf(m)) / (1.0 - self.config.mu)
        }
    }

    /// Running residual power, corrected for the `2K` fitted weights.
    pub fn residual_variance(&self) -> Option<f64> {
        let dof = self.effective_rows() - (2 * self.config.order) as f64;
        (dof > 0.0).then(|| self.residual_energy / dof)
    }

    fn regressor(&self) -> DVector<T> {
        let k = self.config.order;
        DVector::from_iterator(2 * k, self.hist_x.iter().chain(self.hist_y.iter()).copied())
    }

    fn rls_update(&mut self, x_n: T) -> Result<()> {
        let mu = self.config.mu;
        let mu_t = T::from_re(mu);
        let z = self.regressor();
        let prior_error = x_n - self.w_hat.dotc(&z);
        let pz = &self.p * &z;
        let denom = mu + z.dotc(&pz).re_f64();
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::State(format!(
                "RLS gain denominator {denom} at n = {} (inverse covariance lost definiteness)",
                self.n
            )));
        }
        let gain = &pz / T::from_re(denom);
        let p_next = (&self.p - &gain * pz.adjoint()) / mu_t;
        self.p = hermitian_part(&p_next);
        self.w_hat += &gain * prior_error.conjugate();
        self.phi = &self.phi * mu_t + &z * z.adjoint();
        self.psi = &self.psi * mu_t + &z * x_n.conjugate();
        // a-posteriori error is prior_error * mu / denom
        self.residual_energy = mu * self.residual_energy + prior_error.abs2_f64() * mu / denom;
        self.updates += 1;
        Ok(())
    }

    /// Replaces the propagated `P` and `w` by a direct solve of the tracked
    /// normal equations. Starting from `P = I/delta` with small `delta` leaves
    /// rounding of order `eps/delta` in `P`; resetting it once after warm-up
    /// removes that while keeping the recursion exact in exact arithmetic.
    /// Left for a later sample if the tracked `Phi` is still too ill-conditioned.
    fn anchor(&mut self) {
        if let Ok(p) = invert_hermitian(&self.phi, "RLS re-anchoring") {
            self.w_hat = &p * &self.psi;
            self.p = p;
            self.anchored = true;
        }
    }

    fn current_statistic(&self) -> Result<f64> {
        let k = self.config.order;
        let rows = self.effective_rows();
        let w_y = self.w_hat.rows(k, k).into_owned();
        match &self.oracle {
            Some(o) if rows > 0.0 => whitened_statistic(&o.sigma, o.sigma2_phi, &w_y, rows),
            Some(_) => Ok(0.0),
            None => match self.residual_variance() {
                Some(s2) => {
                    let sigma_hat = lower_right(&self.p, k) * T::from_re(rows);
                    whitened_statistic(&sigma_hat, s2, &w_y, rows)
                }
                None => Ok(0.0),
            },
        }
    }

    /// Advances the recursion by one sample pair and returns the new statistic
    /// without evaluating the stopping rule.
    pub fn update(&mut self, x_n: T, y_n: T) -> Result<f64> {
        if !x_n.is_finite_value() || !y_n.is_finite_value() {
            return Err(Error::NonFinite(format!("sample {} is not finite", self.n + 1)));
        }
        let k = self.config.order;
        if self.hist_x.len() == k {
            self.rls_update(x_n)?;
        }
        self.hist_x.push_front(x_n);
        self.hist_y.push_front(y_n);
        self.hist_x.truncate(k);
        self.hist_y.truncate(k);
        self.n += 1;
        if !self.anchored && self.n >= self.config.n_min() {
            self.anchor();
        }
        self.statistic = self.current_statistic()?;
        Ok(self.statistic)
    }

    /// Consumes one sample pair. After a terminal verdict the state is frozen
    /// and the stored decision is returned unchanged.
    pub fn step(&mut self, x_n: T, y_n: T) -> Result<(f64, Decision)> {
        if let Some(d) = self.decided {
            return Ok((d.statistic, d));
        }
        let t = self.update(x_n, y_n)?;
        let verdict = if self.n < self.config.n_min() {
            Verdict::Continue
        } else if t > self.lambda1 {
            Verdict::Causal
        } else if t < self.lambda0 {
            Verdict::Noncausal
        } else if self.n >= self.config.n_max {
            if t > self.block_threshold {
                Verdict::Causal
            } else {
                Verdict::Noncausal
            }
        } else {
            Verdict::Continue
        };
        let decision = Decision {
            verdict,
            n: self.n,
            statistic: t,
        };
        if verdict.is_terminal() {
            self.decided = Some(decision);
        }
        Ok((t, decision))
    }

    /// Feeds samples until a terminal verdict or the input runs out.
    pub fn run(&mut self, x: &[T], y: &[T]) -> Result<Decision> {
        let mut last = Decision {
            verdict: Verdict::Continue,
            n: self.n,
            statistic: self.statistic,
        };
        for (&a, &b) in x.iter().zip(y) {
            last = self.step(a, b)?.1;
            if last.verdict.is_terminal() {
                break;
            }
        }
        Ok(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockdetect::{BlockEstimate, SigmaSource};
    use crate::model::{NoiseConfig, SecondOrderStats, VarModel};
    use crate::simulate::generate;
    use num_complex::Complex64;

    const LN10: f64 = std::f64::consts::LN_10;

    #[test]
    fn fresh_detectors_are_identical_and_silent() {
        let cfg = SeqConfig::new(2);
        let a = SeqDetector::<f64>::new(cfg.clone()).unwrap();
        let b = SeqDetector::<f64>::new(cfg).unwrap();
        assert_eq!(a.statistic(), 0.0);
        assert_eq!(a.weights(), b.weights());
        assert_eq!(a.inverse_covariance(), b.inverse_covariance());
        assert!(a.weights().iter().all(|&w| w == 0.0));
        assert_eq!(a.inverse_covariance()[(0, 0)], 1e6);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = SeqConfig::new(1);
        for bad in [
            SeqConfig {
                delta: 0.0,
                ..base.clone()
            },
            SeqConfig {
                mu: 0.0,
                ..base.clone()
            },
            SeqConfig {
                mu: 1.1,
                ..base.clone()
            },
            SeqConfig {
                alpha: 0.0,
                ..base.clone()
            },
            SeqConfig {
                order: 0,
                ..base.clone()
            },
            SeqConfig {
                n_max: 2,
                ..base.clone()
            },
            // lambda0 at the 0.95 quantile exceeds lambda1 at the 0.9 quantile
            SeqConfig {
                alpha: 0.1,
                beta: 0.95,
                ..base.clone()
            },
        ] {
            assert!(SeqDetector::<f64>::new(bad).is_err());
        }
        let oracle_cfg = SeqConfig {
            sigma_mode: SigmaMode::Oracle,
            ..base
        };
        assert!(SeqDetector::<f64>::new(oracle_cfg).is_err());
    }

    #[test]
    fn schedule_values() {
        let cfg = SeqConfig::new(1);
        let (l0, l1) = thresholds(4, &cfg, Field::Complex).unwrap();
        assert!((l1 - 2.0 * LN10).abs() < 1e-9);
        // lower quantile of an exponential with mean 2: -2 ln(1 - beta)
        assert!((l0 + 2.0 * (0.95f64).ln()).abs() < 1e-9);
        assert!(thresholds(3, &cfg, Field::Complex).is_err());
        let no_lower = SeqConfig { beta: 0.0, ..cfg };
        assert_eq!(thresholds(10, &no_lower, Field::Real).unwrap().0, 0.0);
    }

    #[test]
    fn never_declares_noncausal_without_lower_threshold() {
        let cfg = SeqConfig {
            beta: 0.0,
            n_max: 400,
            ..SeqConfig::new(1)
        };
        let m = VarModel::<f64>::toy(0.0);
        for seed in 0..20 {
            let p = generate(&m, 400, seed, 100).unwrap();
            let mut det = SeqDetector::new(cfg.clone()).unwrap();
            for (i, (&a, &b)) in p.x.iter().zip(&p.y).enumerate() {
                let (_, d) = det.step(a, b).unwrap();
                if d.verdict == Verdict::Noncausal {
                    assert_eq!(i + 1, 400, "noncausal before n_max");
                }
            }
        }
    }

    #[test]
    fn verdict_freezes_after_decision() {
        let m = VarModel::<f64>::toy(0.9);
        let p = generate(&m, 2000, 5, 100).unwrap();
        let mut det = SeqDetector::new(SeqConfig::new(1)).unwrap();
        let d = det.run(&p.x, &p.y).unwrap();
        assert!(d.verdict.is_terminal());
        let w = det.weights().clone();
        for i in 0..50 {
            let (t, again) = det.step(p.x[i], p.y[i]).unwrap();
            assert_eq!(again, d);
            assert_eq!(t, d.statistic);
        }
        assert_eq!(det.weights(), &w);
    }

    #[test]
    fn warm_up_forces_continue() {
        let m = VarModel::<f64>::toy(5.0);
        let p = generate(&m, 50, 1, 10).unwrap();
        let mut det = SeqDetector::new(SeqConfig::new(3)).unwrap();
        for i in 0..11 {
            let (_, d) = det.step(p.x[i], p.y[i]).unwrap();
            assert_eq!(d.verdict, Verdict::Continue);
        }
    }

    #[test]
    fn non_finite_sample_is_an_error() {
        let mut det = SeqDetector::<f64>::new(SeqConfig::new(1)).unwrap();
        assert!(matches!(det.step(f64::NAN, 0.0), Err(Error::NonFinite(_))));
        assert!(det.step(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn continue_between_thresholds() {
        let cfg = SeqConfig {
            beta: 0.0,
            n_max: 10_000,
            ..SeqConfig::new(1)
        };
        let m = VarModel::<f64>::toy(0.0);
        let p = generate(&m, 3000, 77, 100).unwrap();
        let mut det = SeqDetector::new(cfg).unwrap();
        let (l0, l1) = det.thresholds();
        for (&a, &b) in p.x.iter().zip(&p.y) {
            let (t, d) = det.step(a, b).unwrap();
            if det.samples_seen() >= 4 && t > l0 && t < l1 {
                assert_eq!(d.verdict, Verdict::Continue);
            }
            if d.verdict.is_terminal() {
                break;
            }
        }
    }

    #[test]
    fn unit_forgetting_matches_block_fit() {
        let m = VarModel::<Complex64>::new(
            vec![Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.0)],
            vec![Complex64::new(0.3, -0.2), Complex64::new(0.1, 0.1)],
            vec![Complex64::new(0.5, 0.2), Complex64::new(0.1, 0.0)],
            1.0,
            1.0,
        )
        .unwrap();
        let n = 300;
        let p = generate(&m, n, 9, 200).unwrap();
        let cfg = SeqConfig {
            delta: 1e-10,
            n_max: 100_000,
            beta: 0.0,
            alpha: 1e-12,
            ..SeqConfig::new(2)
        };
        let mut det = SeqDetector::new(cfg).unwrap();
        for i in 0..n {
            det.update(p.x[i], p.y[i]).unwrap();
        }
        let block = BlockEstimate::from_samples(&p.x, &p.y, 2, n).unwrap();
        assert!((det.weights() - &block.w_hat).camax() < 1e-6);
        let s2 = det.residual_variance().unwrap();
        assert!((s2 - block.sigma2_phi_hat).abs() < 1e-6 * block.sigma2_phi_hat);
        let t_block = block.test_statistic(&SigmaSource::Plugin).unwrap();
        assert!((det.statistic() - t_block).abs() < 1e-5 * t_block.max(1.0));
    }

    #[test]
    fn oracle_mode_uses_true_statistics() {
        let m = VarModel::<f64>::toy(0.25);
        let noise = NoiseConfig::new(1.0, 1.0).unwrap();
        let stats = SecondOrderStats::new(&m, &noise).unwrap();
        let cfg = SeqConfig {
            n_max: 1_000_000,
            beta: 0.0,
            alpha: 1e-9,
            ..SeqConfig::new(1)
        };
        let mut det = SeqDetector::with_oracle(cfg, (&stats).into()).unwrap();
        let p = generate(&m, 500, 3, 100).unwrap();
        for i in 0..500 {
            det.update(p.x[i], p.y[i]).unwrap();
        }
        let block = BlockEstimate::from_samples(&p.x, &p.y, 1, 500).unwrap();
        let t_block = block.test_statistic(&SigmaSource::Oracle((&stats).into())).unwrap();
        assert!((det.statistic() - t_block).abs() < 1e-6 * t_block.max(1.0));
    }

    #[test]
    fn forgetting_shrinks_effective_window() {
        let cfg = SeqConfig {
            mu: 0.99,
            ..SeqConfig::new(1)
        };
        let mut det = SeqDetector::<f64>::new(cfg).unwrap();
        let m = VarModel::<f64>::toy(0.3);
        let p = generate(&m, 2000, 1, 100).unwrap();
        for i in 0..2000 {
            det.step(p.x[i], p.y[i]).unwrap();
            if det.decision().is_some() {
                break;
            }
        }
        let rows = det.effective_rows();
        assert!(rows <= 100.0 + 1e-9 && rows > 0.0);
    }
}
