use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    ContinuousModel, Family, GaussianLinear, GaussianW, GridModel, GridSpec, GridTable,
    UniformQuadratic, UniformShift,
};
use crate::error::{Error, Result};

/// Model description as read from JSON:
/// `{ "family": "<tag>", "params": {...}, "truncation": {...}, "grid": {...} }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridTable>,
    /// Declared conditional completeness; only tabulated models take it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete: Option<bool>,
    /// Evaluation region; the family default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_grid: Option<GridSpec>,
}

/// Effective truncation of unbounded `W` supports, in standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub sds: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { sds: 8.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadraticParams {
    #[serde(default = "one")]
    w_sd: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftParams {
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    w_shift: f64,
}

fn w_follows_x() -> GaussianW {
    GaussianW::new(0.0, 1.0, 1.0)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearParams {
    #[serde(default)]
    alpha: [f64; 4],
    #[serde(default = "one")]
    sigma: f64,
    #[serde(default = "w_follows_x")]
    w: GaussianW,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CiParams {
    #[serde(default)]
    alpha0: f64,
    #[serde(default)]
    alpha1: f64,
    #[serde(default = "one")]
    sigma: f64,
    #[serde(default = "w_follows_x")]
    w: GaussianW,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IndepParams {
    #[serde(default)]
    alpha: [f64; 4],
    #[serde(default = "one")]
    sigma: f64,
    #[serde(default)]
    w_mean: f64,
    #[serde(default = "one")]
    w_sd: f64,
}

impl ModelConfig {
    pub fn new(family: Family, params: Value) -> Self {
        ModelConfig {
            family,
            params,
            truncation: TruncationConfig::default(),
            grid: None,
            complete: None,
            eval_grid: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        let value = match &self.params {
            Value::Null => Value::Object(Default::default()),
            v => v.clone(),
        };
        serde_json::from_value(value)
            .map_err(|e| Error::InvalidModel(format!("{} params: {e}", self.family)))
    }

    pub fn build(&self) -> Result<Box<dyn ContinuousModel>> {
        let sds = self.truncation.sds;
        if self.family != Family::Grid {
            if self.grid.is_some() {
                return Err(Error::InvalidModel(format!(
                    "tabulated arrays given for family {}",
                    self.family
                )));
            }
            if self.complete.is_some() {
                return Err(Error::InvalidModel(format!(
                    "family {} declares its own completeness",
                    self.family
                )));
            }
        }
        Ok(match self.family {
            Family::UniformQuadratic => {
                let p: QuadraticParams = self.params()?;
                Box::new(UniformQuadratic::new(p.w_sd)?.with_truncation(sds)?)
            }
            Family::UniformShift => {
                let p: ShiftParams = self.params()?;
                Box::new(UniformShift::new(p.scale, p.w_shift)?.with_truncation(sds)?)
            }
            Family::LinearInteraction => {
                let p: LinearParams = self.params()?;
                Box::new(GaussianLinear::linear_interaction(p.alpha, p.sigma, p.w)?.with_truncation(sds)?)
            }
            Family::CiYw => {
                let p: CiParams = self.params()?;
                Box::new(GaussianLinear::ci_yw(p.alpha0, p.alpha1, p.sigma, p.w)?.with_truncation(sds)?)
            }
            Family::IndepXw => {
                let p: IndepParams = self.params()?;
                Box::new(
                    GaussianLinear::indep_xw(p.alpha, p.sigma, p.w_mean, p.w_sd)?
                        .with_truncation(sds)?,
                )
            }
            Family::Grid => {
                if !self.params.is_null() && self.params != Value::Object(Default::default()) {
                    return Err(Error::InvalidModel("grid family takes no params".into()));
                }
                let table = self
                    .grid
                    .clone()
                    .ok_or_else(|| Error::InvalidModel("grid family needs a \"grid\" table".into()))?;
                Box::new(GridModel::from_table(table)?.with_completeness(self.complete))
            }
        })
    }
}
