use super::ContinuousModel;
use crate::error::{Error, Result};
use crate::numerics::{integrate_with_breakpoints, QuadratureSpec};

fn check_x(model: &dyn ContinuousModel, x: f64) -> Result<()> {
    let sx = model.support_x();
    if x.is_finite() && sx.contains(x) {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!(
            "x = {x} outside the {} support {sx}",
            model.family()
        )))
    }
}

/// `∫ g(w) f(w|x) dw` over the effective `W` support, split at the model's
/// `w` breakpoints for `(y, x)`.
pub fn w_expectation<G>(
    model: &dyn ContinuousModel,
    y: f64,
    x: f64,
    g: G,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    check_x(model, x)?;
    let support = model.support_w(x);
    let breaks = model.w_breakpoints(y, x);
    let integral =
        integrate_with_breakpoints(|w| g(w) * model.pdf_w(w, x), support, &breaks, quad)?;
    Ok(integral.value)
}

/// `∫ h(w) dw` over the effective `W` support with the same breakpoints as
/// [`w_expectation`]; `h` carries its own weighting.
pub(crate) fn w_integral<H>(
    model: &dyn ContinuousModel,
    y: f64,
    x: f64,
    h: H,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    H: Fn(f64) -> f64,
{
    check_x(model, x)?;
    let support = model.support_w(x);
    let breaks = model.w_breakpoints(y, x);
    Ok(integrate_with_breakpoints(h, support, &breaks, quad)?.value)
}

/// `F(y|x) = ∫ F(y|x,w) f(w|x) dw`.
pub fn marginal_cdf_y_given_x(
    model: &dyn ContinuousModel,
    y: f64,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let v = w_expectation(model, y, x, |w| model.cdf_y(y, x, w), quad)?;
    let slack = 10.0 * quad.abs_tol.max(quad.rel_tol);
    if v < -slack || v > 1.0 + slack {
        return Err(Error::NotACdf { at: y });
    }
    Ok(v.clamp(0.0, 1.0))
}

/// `f(y|x) = ∫ f(y|x,w) f(w|x) dw`.
pub fn marginal_pdf_y_given_x(
    model: &dyn ContinuousModel,
    y: f64,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let v = w_expectation(model, y, x, |w| model.pdf_y(y, x, w), quad)?;
    Ok(v.max(0.0))
}

/// `f(w|y,x) = f(y|x,w) f(w|x) / f(y|x)`.
pub fn posterior_w_density(
    model: &dyn ContinuousModel,
    w: f64,
    y: f64,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let norm = marginal_pdf_y_given_x(model, y, x, quad)?;
    if !(norm > 0.0) {
        return Err(Error::NullConditioning {
            what: format!("f(y|x) = 0 at y = {y}, x = {x}"),
        });
    }
    if !model.support_w(x).contains(w) {
        return Ok(0.0);
    }
    Ok(model.pdf_y(y, x, w) * model.pdf_w(w, x) / norm)
}
