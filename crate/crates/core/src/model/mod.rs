//! Three-variable models: exact contingency tables and evaluable continuous
//! families, plus the marginal and posterior quantities derived from them.

mod config;
mod discrete;
mod families;
mod grid;
pub(crate) mod marginal;

pub use config::{ModelConfig, TruncationConfig};
pub use discrete::{
    build_discrete_joint, parse_count, DiscreteJoint, LevelOrder, LevelOrders, TableRow, WCondition,
};
pub use families::{GaussianLinear, GaussianW, UniformQuadratic, UniformShift};
pub use grid::{GridModel, GridTable};
pub use marginal::{
    marginal_cdf_y_given_x, marginal_pdf_y_given_x, posterior_w_density, w_expectation,
};

pub use crate::numerics::Interval;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dependence::Method;
use crate::error::{Error, Result};

/// Identifier of a built-in continuous family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `Y | x,w ~ U(0, 1/(x² + (w-x)²))`, `W | x ~ N(x, s²)`.
    UniformQuadratic,
    /// `Y | x,w ~ U(w-x, w+x)`, `W | x ~ N(0, x²)`, `x > 0`.
    UniformShift,
    /// `Y = α₀ + α₁x + α₂w + α₃xw + ε`, Gaussian `W | x`.
    LinearInteraction,
    /// Gaussian linear model with `Y ⊥ W | X`.
    CiYw,
    /// Gaussian linear model with `W ⊥ X`.
    IndepXw,
    /// Tabulated CDFs with piecewise-linear interpolation.
    Grid,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::UniformQuadratic,
        Family::UniformShift,
        Family::LinearInteraction,
        Family::CiYw,
        Family::IndepXw,
        Family::Grid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::UniformQuadratic => "uniform-quadratic",
            Family::UniformShift => "uniform-shift",
            Family::LinearInteraction => "linear-interaction",
            Family::CiYw => "ci-yw",
            Family::IndepXw => "indep-xw",
            Family::Grid => "grid",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// A continuous model for `(Y, X, W)` given through its conditionals
/// `F(y|x,w)`, `f(y|x,w)`, `F(w|x)` and `f(w|x)`.
///
/// Implementations are immutable and may be shared across threads. Optional
/// partial derivatives return `None` when the family has no closed form, in
/// which case callers fall back to finite differences.
pub trait ContinuousModel: Send + Sync + fmt::Debug {
    fn family(&self) -> Family;

    fn support_x(&self) -> Interval;
    fn support_y(&self, x: f64, w: f64) -> Interval;
    /// Effective (truncated) support of `W | x`.
    fn support_w(&self, x: f64) -> Interval;

    fn cdf_y(&self, y: f64, x: f64, w: f64) -> f64;
    fn pdf_y(&self, y: f64, x: f64, w: f64) -> f64;
    fn cdf_w(&self, w: f64, x: f64) -> f64;
    fn pdf_w(&self, w: f64, x: f64) -> f64;

    /// Points in `y` where `f(y|x,w)` jumps.
    fn y_breakpoints(&self, _x: f64, _w: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Points in `w` where `F(y|x,w)` or `f(y|x,w)` is not smooth.
    fn w_breakpoints(&self, _y: f64, _x: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Largest interval around `x` on which the conditionals are smooth in `x`.
    fn x_smooth_piece(&self, _x: f64) -> Interval {
        self.support_x()
    }

    fn cdf_y_dx(&self, _y: f64, _x: f64, _w: f64) -> Option<f64> {
        None
    }
    fn cdf_y_dw(&self, _y: f64, _x: f64, _w: f64) -> Option<f64> {
        None
    }
    fn pdf_y_dx(&self, _y: f64, _x: f64, _w: f64) -> Option<f64> {
        None
    }
    fn cdf_w_dx(&self, _w: f64, _x: f64) -> Option<f64> {
        None
    }
    fn pdf_w_dx(&self, _w: f64, _x: f64) -> Option<f64> {
        None
    }

    /// How the `Some(..)` partials above were obtained.
    fn partials_method(&self) -> Method {
        Method::Analytic
    }

    /// `F(y|x,w)` is clamped to `[0, 1]` on a `w`-dependent support, which
    /// limits the accuracy of density identities near the clamp.
    fn support_clamped(&self) -> bool {
        false
    }

    /// Declared conditional completeness of `{F(w|y,x)}`; `None` if unknown.
    fn conditionally_complete(&self) -> Option<bool> {
        None
    }

    /// Default evaluation region for automatic grids.
    fn default_region(&self) -> GridSpec;
}

/// Evenly spaced axis `lo..=hi` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl AxisSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        AxisSpec { lo, hi, n }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![0.5 * (self.lo + self.hi)],
            n => (0..n)
                .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub y: AxisSpec,
    pub x: AxisSpec,
    pub w: AxisSpec,
}

impl GridSpec {
    pub fn with_counts(mut self, ny: usize, nx: usize, nw: usize) -> Self {
        self.y.n = ny;
        self.x.n = nx;
        self.w.n = nw;
        self
    }
}

/// Evaluation points standing in for the "for all y, x, w" quantifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    pub ys: Vec<f64>,
    pub xs: Vec<f64>,
    pub ws: Vec<f64>,
}

impl EvalGrid {
    pub fn new(ys: Vec<f64>, xs: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("y", &ys), ("x", &xs), ("w", &ws)] {
            if axis.is_empty() {
                return Err(Error::InvalidGrid(format!("{name} axis is empty")));
            }
            if axis.iter().any(|t| !t.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} axis has non-finite points")));
            }
            if axis.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::InvalidGrid(format!(
                    "{name} axis is not strictly increasing"
                )));
            }
        }
        Ok(EvalGrid { ys, xs, ws })
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        EvalGrid::new(spec.y.points(), spec.x.points(), spec.w.points())
    }

    /// The model's default region at the standard 25 × 25 × 9 resolution.
    pub fn auto(model: &dyn ContinuousModel) -> Result<Self> {
        EvalGrid::from_spec(&model.default_region().with_counts(25, 25, 9))
    }

    /// Checks that every `x` lies in the model's `X` support.
    pub fn check_within(&self, model: &dyn ContinuousModel) -> Result<()> {
        let sx = model.support_x();
        match self.xs.iter().find(|&&x| !sx.contains(x)) {
            Some(x) => Err(Error::InvalidGrid(format!(
                "x = {x} outside the {} support {sx}",
                model.family()
            ))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.ys.len() * self.xs.len() * self.ws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
