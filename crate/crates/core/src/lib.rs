//! Granger causality detection between two noisy time series.
//!
//! The block test regresses `x[n]` on the past `K` samples of both `x` and `y`
//! and whitens the estimated cross weights into a statistic that is
//! chi-squared under the no-causality hypothesis. The sequential test tracks
//! the same statistic sample by sample with recursive least squares and stops
//! as soon as it leaves a pair of thresholds.
//!
//! Everything numerical is generic over [`Scalar`], which covers real and
//! circularly-symmetric complex data at either precision. The aliases below
//! fix the common `f64` / `Complex64` instantiations.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockdetect;
pub mod config;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod seqdetect;
pub mod simulate;
pub mod stats;

pub use num_complex::Complex64;

pub use crate::blockdetect::{BlockEstimate, DataMatrix, OracleSigma, SigmaSource};
pub use crate::error::{Error, Result};
pub use crate::model::{Correlations, MmseWeights, NoiseConfig, SecondOrderStats, VarModel};
pub use crate::scalar::{Field, Scalar};
pub use crate::seqdetect::{Decision, SeqConfig, SeqDetector, SigmaMode, Verdict};
pub use crate::simulate::SamplePath;

pub type RealVarModel = VarModel<f64>;
pub type ComplexVarModel = VarModel<Complex64>;
pub type RealStats = SecondOrderStats<f64>;
pub type ComplexStats = SecondOrderStats<Complex64>;
pub type RealBlockEstimate = BlockEstimate<f64>;
pub type ComplexBlockEstimate = BlockEstimate<Complex64>;
pub type RealSeqDetector = SeqDetector<f64>;
pub type ComplexSeqDetector = SeqDetector<Complex64>;
pub type RealSamplePath = SamplePath<f64>;
pub type ComplexSamplePath = SamplePath<Complex64>;
