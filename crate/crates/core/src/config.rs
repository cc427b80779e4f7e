//! Model specification files.
//!
//! ```toml
//! K = 1
//! field = "complex"          # or "real" (default)
//! a_uu = [0.0]
//! a_uv = [[0.25, 0.0]]       # complex coefficients as [re, im]; plain numbers also accepted
//! a_vv = [0.0]
//! sigma2_eta_u = 1.0
//! sigma2_eta_v = 1.0
//! snr_x_db = 0.0             # or sigma2_nu_x; omit both for no noise
//! snr_y_db = 0.0             # or sigma2_nu_y
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{noise_variance_for_snr, NoiseConfig, VarModel};
use crate::scalar::{Field, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Coefficient {
    fn parts(self) -> (f64, f64) {
        match self {
            Coefficient::Real(r) => (r, 0.0),
            Coefficient::Complex([re, im]) => (re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "K", alias = "order", default)]
    pub order: Option<usize>,
    #[serde(default = "default_field")]
    pub field: Field,
    pub a_uu: Vec<Coefficient>,
    pub a_uv: Vec<Coefficient>,
    pub a_vv: Vec<Coefficient>,
    pub sigma2_eta_u: f64,
    pub sigma2_eta_v: f64,
    #[serde(default)]
    pub snr_x_db: Option<f64>,
    #[serde(default)]
    pub sigma2_nu_x: Option<f64>,
    #[serde(default)]
    pub snr_y_db: Option<f64>,
    #[serde(default)]
    pub sigma2_nu_y: Option<f64>,
}

fn default_field() -> Field {
    Field::Real
}

impl ModelConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The toy first-order model with cross coefficient `a`.
    pub fn toy(a: f64, field: Field) -> Self {
        Self {
            order: Some(1),
            field,
            a_uu: vec![Coefficient::Real(0.0)],
            a_uv: vec![Coefficient::Real(a)],
            a_vv: vec![Coefficient::Real(0.0)],
            sigma2_eta_u: 1.0,
            sigma2_eta_v: 1.0,
            snr_x_db: None,
            sigma2_nu_x: None,
            snr_y_db: None,
            sigma2_nu_y: None,
        }
    }

    fn coefficients<T: Scalar>(&self, name: &str, c: &[Coefficient]) -> Result<Vec<T>> {
        c.iter()
            .map(|&c| {
                let (re, im) = c.parts();
                if im != 0.0 && T::FIELD == Field::Real {
                    Err(Error::Config(format!(
                        "{name}: complex coefficient in a real-field model"
                    )))
                } else {
                    Ok(T::from_parts(re, im))
                }
            })
            .collect()
    }

    /// Builds the model in the scalar type `T`, whose field must match `self.field`.
    pub fn model<T: Scalar>(&self) -> Result<VarModel<T>> {
        if T::FIELD != self.field {
            return Err(Error::Config(format!(
                "config declares field `{}` but `{}` was requested",
                self.field,
                T::FIELD
            )));
        }
        if let Some(k) = self.order {
            if k != self.a_uu.len() {
                return Err(Error::Config(format!(
                    "K = {k} but a_uu has {} entries",
                    self.a_uu.len()
                )));
            }
        }
        VarModel::new(
            self.coefficients("a_uu", &self.a_uu)?,
            self.coefficients("a_uv", &self.a_uv)?,
            self.coefficients("a_vv", &self.a_vv)?,
            self.sigma2_eta_u,
            self.sigma2_eta_v,
        )
    }

    pub fn noise<T: Scalar>(&self, model: &VarModel<T>) -> Result<NoiseConfig> {
        let pick = |snr: Option<f64>, var: Option<f64>, signal: f64, series: &str| -> Result<f64> {
            match (snr, var) {
                (Some(_), Some(_)) => Err(Error::Config(format!(
                    "give either snr_{series}_db or sigma2_nu_{series}, not both"
                ))),
                (Some(db), None) => noise_variance_for_snr(signal, db),
                (None, Some(v)) => Ok(v),
                (None, None) => Ok(0.0),
            }
        };
        let (var_u, var_v) = model.stationary_variances()?;
        NoiseConfig::new(
            pick(self.snr_x_db, self.sigma2_nu_x, var_u, "x")?,
            pick(self.snr_y_db, self.sigma2_nu_y, var_v, "y")?,
        )
    }
}
