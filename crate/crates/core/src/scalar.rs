//! Scalar abstraction shared by every estimator in the crate.
//!
//! Detection runs over either real or circularly-symmetric complex samples.
//! [`Scalar`] extends nalgebra's `ComplexField` with the few extra pieces the
//! detectors need: a [`Field`] tag for chi-squared bookkeeping, lossless
//! conversion to and from `f64`, and Gaussian sampling with a given total
//! variance.

use std::fmt;
use std::str::FromStr;

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number field the samples live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Degrees of freedom of the whitened cross-weight statistic for a model of order `order`.
    pub fn dof(self, order: usize) -> usize {
        match self {
            Field::Real => order,
            Field::Complex => 2 * order,
        }
    }

    /// Factor that gives every whitened real dimension unit variance under the null.
    ///
    /// A circularly-symmetric complex variable with total variance one splits
    /// its variance evenly over two real dimensions, hence the factor two.
    pub fn chi2_scale(self) -> f64 {
        match self {
            Field::Real => 1.0,
            Field::Complex => 2.0,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Real => "real",
            Field::Complex => "complex",
        })
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(Error::arg(format!("unknown field `{other}` (expected real|complex)"))),
        }
    }
}

pub trait Scalar: ComplexField<RealField = Self::Real> + Copy {
    type Real: RealField + Copy;

    const FIELD: Field;

    /// Builds a value from real and imaginary parts; real scalars drop `im`.
    fn from_parts(re: f64, im: f64) -> Self;

    fn from_re(re: f64) -> Self {
        Self::from_parts(re, 0.0)
    }

    fn re_f64(self) -> f64;

    fn im_f64(self) -> f64;

    fn real_to_f64(r: Self::Real) -> f64;

    fn real_from_f64(x: f64) -> Self::Real;

    fn abs2_f64(self) -> f64 {
        Self::real_to_f64(self.modulus_squared())
    }

    fn is_finite_value(self) -> bool {
        self.re_f64().is_finite() && self.im_f64().is_finite()
    }

    /// Zero-mean Gaussian draw with total variance `variance`.
    ///
    /// Complex draws are circularly symmetric: `variance / 2` per real dimension.
    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Self;
}

macro_rules! impl_real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;

            const FIELD: Field = Field::Real;

            fn from_parts(re: f64, _im: f64) -> Self {
                re as $t
            }

            fn re_f64(self) -> f64 {
                self as f64
            }

            fn im_f64(self) -> f64 {
                0.0
            }

            fn real_to_f64(r: $t) -> f64 {
                r as f64
            }

            fn real_from_f64(x: f64) -> $t {
                x as $t
            }

            fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Self {
                let z: f64 = rng.sample(StandardNormal);
                (variance.sqrt() * z) as $t
            }
        }
    };
}

macro_rules! impl_complex_scalar {
    ($t:ty) => {
        impl Scalar for Complex<$t> {
            type Real = $t;

            const FIELD: Field = Field::Complex;

            fn from_parts(re: f64, im: f64) -> Self {
                Complex::new(re as $t, im as $t)
            }

            fn re_f64(self) -> f64 {
                self.re as f64
            }

            fn im_f64(self) -> f64 {
                self.im as f64
            }

            fn real_to_f64(r: $t) -> f64 {
                r as f64
            }

            fn real_from_f64(x: f64) -> $t {
                x as $t
            }

            fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Self {
                let s = (variance / 2.0).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new((s * re) as $t, (s * im) as $t)
            }
        }
    };
}

impl_real_scalar!(f32);
impl_real_scalar!(f64);
impl_complex_scalar!(f32);
impl_complex_scalar!(f64);
