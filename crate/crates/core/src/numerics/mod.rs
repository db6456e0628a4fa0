//! Numerical kernel shared by every continuous computation: central finite
//! differences, adaptive Gauss–Kronrod quadrature with declared breakpoints,
//! bracketed CDF inversion and the standard normal functions.

mod diff;
mod normal;
mod quad;
mod root;

pub use diff::{central_diff, Derivative, DiffSpec, Scheme};
pub use normal::{norm_cdf, norm_pdf};
pub use quad::{integrate, integrate_with_breakpoints, Integral, QuadratureSpec};
pub use root::invert_cdf;

use serde::{Deserialize, Serialize};

/// Closed interval `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is reversed");
        Interval { lo, hi }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        Interval { lo, hi: hi.max(lo) }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let end = |t: f64| {
            if t == 0.0 || !t.is_finite() || (1e-4..1e6).contains(&t.abs()) {
                format!("{t}")
            } else {
                format!("{t:e}")
            }
        };
        write!(f, "[{}, {}]", end(self.lo), end(self.hi))
    }
}

/// Numerical settings threaded through every continuous check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericConfig {
    pub quad: QuadratureSpec,
    /// Pointwise differentiation of closed-form conditionals.
    pub diff: DiffSpec,
    /// Differentiation of quadrature-valued marginals; the larger step keeps
    /// quadrature noise from dominating the difference quotient.
    pub marginal_diff: DiffSpec,
    /// Densities at or below this value make quantile coefficients undefined.
    pub density_floor: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            quad: QuadratureSpec::default(),
            diff: DiffSpec::default(),
            marginal_diff: DiffSpec {
                scheme: Scheme::Central4,
                h0: 1e-3,
                bounds: Interval::REAL_LINE,
            },
            density_floor: 1e-12,
        }
    }
}
