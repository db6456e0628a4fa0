use serde::{Deserialize, Serialize};

use super::{AxisSpec, ContinuousModel, Family, GridSpec, Interval};
use crate::error::{Error, Result};
use crate::numerics::{norm_cdf, norm_pdf};

const DEFAULT_SDS: f64 = 8.0;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be finite, got {v}")))
    }
}

fn positive_half_line() -> Interval {
    Interval::new(f64::MIN_POSITIVE, f64::INFINITY)
}

/// Family with `Y | x,w ~ U(0, 1/g)`, `g = x² + (w-x)²`, and `W | x ~ N(x, s²)`.
///
/// `F(y|x,w) = min(1, y·g)` for `y > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformQuadratic {
    w_sd: f64,
    sds: f64,
}

impl UniformQuadratic {
    pub fn new(w_sd: f64) -> Result<Self> {
        check_positive("w_sd", w_sd)?;
        Ok(UniformQuadratic { w_sd, sds: DEFAULT_SDS })
    }

    pub fn with_truncation(mut self, sds: f64) -> Result<Self> {
        check_positive("truncation sds", sds)?;
        self.sds = sds;
        Ok(self)
    }

    fn g(x: f64, w: f64) -> f64 {
        x * x + (w - x) * (w - x)
    }

    fn inside(y: f64, x: f64, w: f64) -> bool {
        y > 0.0 && y * Self::g(x, w) < 1.0
    }
}

impl Default for UniformQuadratic {
    fn default() -> Self {
        UniformQuadratic { w_sd: 1.0, sds: DEFAULT_SDS }
    }
}

impl ContinuousModel for UniformQuadratic {
    fn family(&self) -> Family {
        Family::UniformQuadratic
    }

    fn support_x(&self) -> Interval {
        positive_half_line()
    }

    fn support_y(&self, x: f64, w: f64) -> Interval {
        Interval::new(0.0, 1.0 / Self::g(x, w))
    }

    fn support_w(&self, x: f64) -> Interval {
        Interval::new(x - self.sds * self.w_sd, x + self.sds * self.w_sd)
    }

    fn cdf_y(&self, y: f64, x: f64, w: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            (y * Self::g(x, w)).min(1.0)
        }
    }

    fn pdf_y(&self, y: f64, x: f64, w: f64) -> f64 {
        if Self::inside(y, x, w) {
            Self::g(x, w)
        } else {
            0.0
        }
    }

    fn cdf_w(&self, w: f64, x: f64) -> f64 {
        norm_cdf((w - x) / self.w_sd)
    }

    fn pdf_w(&self, w: f64, x: f64) -> f64 {
        norm_pdf((w - x) / self.w_sd) / self.w_sd
    }

    fn y_breakpoints(&self, x: f64, w: f64) -> Vec<f64> {
        vec![0.0, 1.0 / Self::g(x, w)]
    }

    fn w_breakpoints(&self, y: f64, x: f64) -> Vec<f64> {
        if y <= 0.0 {
            return Vec::new();
        }
        let r2 = 1.0 / y - x * x;
        if r2 > 0.0 {
            let r = r2.sqrt();
            vec![x - r, x + r]
        } else {
            Vec::new()
        }
    }

    fn cdf_y_dx(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        Some(if Self::inside(y, x, w) { y * (4.0 * x - 2.0 * w) } else { 0.0 })
    }

    fn cdf_y_dw(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        Some(if Self::inside(y, x, w) { 2.0 * y * (w - x) } else { 0.0 })
    }

    fn pdf_y_dx(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        Some(if Self::inside(y, x, w) { 2.0 * x + 2.0 * (x - w) } else { 0.0 })
    }

    fn cdf_w_dx(&self, w: f64, x: f64) -> Option<f64> {
        Some(-norm_pdf((w - x) / self.w_sd) / self.w_sd)
    }

    fn pdf_w_dx(&self, w: f64, x: f64) -> Option<f64> {
        let u = (w - x) / self.w_sd;
        Some(u * norm_pdf(u) / (self.w_sd * self.w_sd))
    }

    fn support_clamped(&self) -> bool {
        true
    }

    fn default_region(&self) -> GridSpec {
        GridSpec {
            y: AxisSpec::new(0.01, 0.05, 25),
            x: AxisSpec::new(0.25, 1.0, 25),
            w: AxisSpec::new(-1.5, 2.5, 9),
        }
    }
}

/// Family with `Y | x,w ~ U(c(w-x), c(w+x))` and `W | x ~ N(μ, x²)`, `x > 0`.
///
/// With `c = 1, μ = 0` this is `F(y|x,w) = (y+x-w)/2x` and `F(w|x) = Φ(w/x)`.
/// `c` rescales `Y`; `μ` moves `W` off centre.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformShift {
    scale: f64,
    w_shift: f64,
    sds: f64,
}

impl UniformShift {
    pub fn new(scale: f64, w_shift: f64) -> Result<Self> {
        check_positive("scale", scale)?;
        check_finite("w_shift", w_shift)?;
        Ok(UniformShift {
            scale,
            w_shift,
            sds: DEFAULT_SDS,
        })
    }

    pub fn with_truncation(mut self, sds: f64) -> Result<Self> {
        check_positive("truncation sds", sds)?;
        self.sds = sds;
        Ok(self)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn inside(&self, y: f64, x: f64, w: f64) -> bool {
        let t = y / self.scale;
        w - x < t && t < w + x
    }
}

impl Default for UniformShift {
    fn default() -> Self {
        UniformShift {
            scale: 1.0,
            w_shift: 0.0,
            sds: DEFAULT_SDS,
        }
    }
}

impl ContinuousModel for UniformShift {
    fn family(&self) -> Family {
        Family::UniformShift
    }

    fn support_x(&self) -> Interval {
        positive_half_line()
    }

    fn support_y(&self, x: f64, w: f64) -> Interval {
        Interval::new(self.scale * (w - x), self.scale * (w + x))
    }

    fn support_w(&self, x: f64) -> Interval {
        Interval::new(self.w_shift - self.sds * x, self.w_shift + self.sds * x)
    }

    fn cdf_y(&self, y: f64, x: f64, w: f64) -> f64 {
        ((y / self.scale + x - w) / (2.0 * x)).clamp(0.0, 1.0)
    }

    fn pdf_y(&self, y: f64, x: f64, w: f64) -> f64 {
        if self.inside(y, x, w) {
            1.0 / (2.0 * x * self.scale)
        } else {
            0.0
        }
    }

    fn cdf_w(&self, w: f64, x: f64) -> f64 {
        norm_cdf((w - self.w_shift) / x)
    }

    fn pdf_w(&self, w: f64, x: f64) -> f64 {
        norm_pdf((w - self.w_shift) / x) / x
    }

    fn y_breakpoints(&self, x: f64, w: f64) -> Vec<f64> {
        vec![self.scale * (w - x), self.scale * (w + x)]
    }

    fn w_breakpoints(&self, y: f64, x: f64) -> Vec<f64> {
        let t = y / self.scale;
        vec![t - x, t + x]
    }

    fn cdf_y_dx(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        Some(if self.inside(y, x, w) {
            (w - y / self.scale) / (2.0 * x * x)
        } else {
            0.0
        })
    }

    fn cdf_y_dw(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        Some(if self.inside(y, x, w) { -1.0 / (2.0 * x) } else { 0.0 })
    }

    fn pdf_y_dx(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        Some(if self.inside(y, x, w) {
            -1.0 / (2.0 * x * x * self.scale)
        } else {
            0.0
        })
    }

    fn cdf_w_dx(&self, w: f64, x: f64) -> Option<f64> {
        let u = (w - self.w_shift) / x;
        Some(-u * norm_pdf(u) / x)
    }

    fn pdf_w_dx(&self, w: f64, x: f64) -> Option<f64> {
        let u = (w - self.w_shift) / x;
        Some((u * u - 1.0) * norm_pdf(u) / (x * x))
    }

    fn support_clamped(&self) -> bool {
        true
    }

    fn conditionally_complete(&self) -> Option<bool> {
        Some(false)
    }

    fn default_region(&self) -> GridSpec {
        let c = self.scale;
        GridSpec {
            y: AxisSpec::new(c * (self.w_shift - 0.9), c * (self.w_shift + 0.9), 25),
            x: AxisSpec::new(0.5, 2.0, 25),
            w: AxisSpec::new(self.w_shift - 1.5, self.w_shift + 1.5, 9),
        }
    }
}

/// Gaussian law `W | x ~ N(intercept + slope·x, sd²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianW {
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub slope: f64,
    #[serde(default = "one")]
    pub sd: f64,
}

fn one() -> f64 {
    1.0
}

impl GaussianW {
    pub fn new(intercept: f64, slope: f64, sd: f64) -> Self {
        GaussianW { intercept, slope, sd }
    }

    fn mean(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    fn validate(&self) -> Result<()> {
        check_finite("w.intercept", self.intercept)?;
        check_finite("w.slope", self.slope)?;
        check_positive("w.sd", self.sd)
    }
}

/// `Y = α₀ + α₁x + α₂w + α₃xw + σε` with `ε ~ N(0, 1)` and Gaussian `W | x`.
///
/// Serves three family tags: `linear-interaction` (unrestricted),
/// `ci-yw` (`α₂ = α₃ = 0`, so `Y ⊥ W | X`) and `indep-xw` (zero `W` slope,
/// so `W ⊥ X`).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinear {
    family: Family,
    pub alpha: [f64; 4],
    pub sigma: f64,
    pub w: GaussianW,
    sds: f64,
}

impl GaussianLinear {
    fn build(family: Family, alpha: [f64; 4], sigma: f64, w: GaussianW) -> Result<Self> {
        for (i, a) in alpha.iter().enumerate() {
            check_finite(&format!("alpha{i}"), *a)?;
        }
        check_positive("sigma", sigma)?;
        w.validate()?;
        match family {
            Family::CiYw if alpha[2] != 0.0 || alpha[3] != 0.0 => {
                return Err(Error::InvalidModel(
                    "ci-yw requires alpha2 = alpha3 = 0".into(),
                ))
            }
            Family::IndepXw if w.slope != 0.0 => {
                return Err(Error::InvalidModel("indep-xw requires w.slope = 0".into()))
            }
            _ => {}
        }
        Ok(GaussianLinear {
            family,
            alpha,
            sigma,
            w,
            sds: DEFAULT_SDS,
        })
    }

    pub fn linear_interaction(alpha: [f64; 4], sigma: f64, w: GaussianW) -> Result<Self> {
        Self::build(Family::LinearInteraction, alpha, sigma, w)
    }

    /// `Y | x ~ N(α₀ + α₁x, σ²)` regardless of `w`.
    pub fn ci_yw(alpha0: f64, alpha1: f64, sigma: f64, w: GaussianW) -> Result<Self> {
        Self::build(Family::CiYw, [alpha0, alpha1, 0.0, 0.0], sigma, w)
    }

    /// `W ~ N(w_mean, w_sd²)` regardless of `x`.
    pub fn indep_xw(alpha: [f64; 4], sigma: f64, w_mean: f64, w_sd: f64) -> Result<Self> {
        Self::build(Family::IndepXw, alpha, sigma, GaussianW::new(w_mean, 0.0, w_sd))
    }

    pub fn with_truncation(mut self, sds: f64) -> Result<Self> {
        check_positive("truncation sds", sds)?;
        self.sds = sds;
        Ok(self)
    }

    pub fn mean_y(&self, x: f64, w: f64) -> f64 {
        let [a0, a1, a2, a3] = self.alpha;
        a0 + a1 * x + a2 * w + a3 * x * w
    }

    fn z(&self, y: f64, x: f64, w: f64) -> f64 {
        (y - self.mean_y(x, w)) / self.sigma
    }

    fn u(&self, w: f64, x: f64) -> f64 {
        (w - self.w.mean(x)) / self.w.sd
    }
}

impl ContinuousModel for GaussianLinear {
    fn family(&self) -> Family {
        self.family
    }

    fn support_x(&self) -> Interval {
        Interval::REAL_LINE
    }

    fn support_y(&self, x: f64, w: f64) -> Interval {
        let m = self.mean_y(x, w);
        Interval::new(m - self.sds * self.sigma, m + self.sds * self.sigma)
    }

    fn support_w(&self, x: f64) -> Interval {
        let m = self.w.mean(x);
        Interval::new(m - self.sds * self.w.sd, m + self.sds * self.w.sd)
    }

    fn cdf_y(&self, y: f64, x: f64, w: f64) -> f64 {
        norm_cdf(self.z(y, x, w))
    }

    fn pdf_y(&self, y: f64, x: f64, w: f64) -> f64 {
        norm_pdf(self.z(y, x, w)) / self.sigma
    }

    fn cdf_w(&self, w: f64, x: f64) -> f64 {
        norm_cdf(self.u(w, x))
    }

    fn pdf_w(&self, w: f64, x: f64) -> f64 {
        norm_pdf(self.u(w, x)) / self.w.sd
    }

    fn cdf_y_dx(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        let [_, a1, _, a3] = self.alpha;
        Some(-(a1 + a3 * w) / self.sigma * norm_pdf(self.z(y, x, w)))
    }

    fn cdf_y_dw(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        let [_, _, a2, a3] = self.alpha;
        Some(-(a2 + a3 * x) / self.sigma * norm_pdf(self.z(y, x, w)))
    }

    fn pdf_y_dx(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        let [_, a1, _, a3] = self.alpha;
        let z = self.z(y, x, w);
        Some(z * norm_pdf(z) * (a1 + a3 * w) / (self.sigma * self.sigma))
    }

    fn cdf_w_dx(&self, w: f64, x: f64) -> Option<f64> {
        Some(-norm_pdf(self.u(w, x)) * self.w.slope / self.w.sd)
    }

    fn pdf_w_dx(&self, w: f64, x: f64) -> Option<f64> {
        let u = self.u(w, x);
        Some(u * norm_pdf(u) * self.w.slope / (self.w.sd * self.w.sd))
    }

    fn conditionally_complete(&self) -> Option<bool> {
        // Gaussian posteriors of W given (y, x) form an exponential family.
        Some(true)
    }

    fn default_region(&self) -> GridSpec {
        GridSpec {
            y: AxisSpec::new(-2.0, 2.0, 25),
            x: AxisSpec::new(-1.0, 1.0, 25),
            w: AxisSpec::new(-2.0, 2.0, 9),
        }
    }
}
