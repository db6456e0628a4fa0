//! Quantile regression coefficients `q_x = -F_x / f`, the total effect
//! `δ = q_x(y|x,w) + q_w(y|x,w) q_x(w|x)`, Cox's identity, quantile
//! A-collapsibility and Cochran's least-squares relation.

mod cochran;

pub use cochran::{cochran_decompose, cochran_from_sample, covariance_from_sample, CochranDecomposition};

use serde::{Deserialize, Serialize};

use crate::collapse::{Coord, Property, Status, Verdict, Witness, Worst};
use crate::dependence::{self, averaged_dependence, dist_dep_continuous, diff_fallible, WPoint};
use crate::error::{Error, Result};
use crate::model::marginal::w_integral;
use crate::model::{marginal_cdf_y_given_x, marginal_pdf_y_given_x, ContinuousModel, EvalGrid};
use crate::numerics::{invert_cdf, Interval, NumericConfig};

fn undefined(density: f64, at: String) -> Error {
    Error::UndefinedQuantileCoefficient { density, at }
}

/// `q_x(y|x,w) = -∂F(y|x,w)/∂x / f(y|x,w)`, or the marginal `q_x(y|x)` when
/// `w` is `None`.
pub fn quantile_coeff(model: &dyn ContinuousModel, y: f64, x: f64, w: Option<f64>, cfg: &NumericConfig) -> Result<f64> {
    match w {
        Some(w) => {
            let f = model.pdf_y(y, x, w);
            if !(f > cfg.density_floor) {
                return Err(undefined(f, format!("y = {y}, x = {x}, w = {w}")));
            }
            Ok(-dependence::cdf_y_dx(model, y, x, w, cfg) / f)
        }
        None => {
            let f = marginal_pdf_y_given_x(model, y, x, &cfg.quad)?;
            if !(f > cfg.density_floor) {
                return Err(undefined(f, format!("y = {y}, x = {x}")));
            }
            Ok(-dist_dep_continuous(model, y, x, WPoint::Marginal, cfg)?.value / f)
        }
    }
}

/// `q_w(y|x,w) = -∂F(y|x,w)/∂w / f(y|x,w)`.
pub fn quantile_coeff_w(model: &dyn ContinuousModel, y: f64, x: f64, w: f64, cfg: &NumericConfig) -> Result<f64> {
    let f = model.pdf_y(y, x, w);
    if !(f > cfg.density_floor) {
        return Err(undefined(f, format!("y = {y}, x = {x}, w = {w}")));
    }
    Ok(-dependence::cdf_y_dw(model, y, x, w, cfg) / f)
}

/// `q_x(w|x) = -∂F(w|x)/∂x / f(w|x)`.
pub fn quantile_coeff_wx(model: &dyn ContinuousModel, w: f64, x: f64, cfg: &NumericConfig) -> Result<f64> {
    let f = model.pdf_w(w, x);
    if !(f > cfg.density_floor) {
        return Err(undefined(f, format!("w = {w}, x = {x}")));
    }
    Ok(-dependence::cdf_w_dx(model, w, x, cfg) / f)
}

/// `δ(y|x,w) = q_x(y|x,w) + q_w(y|x,w) q_x(w|x)`.
pub fn total_effect(model: &dyn ContinuousModel, y: f64, x: f64, w: f64, cfg: &NumericConfig) -> Result<f64> {
    Ok(quantile_coeff(model, y, x, Some(w), cfg)?
        + quantile_coeff_w(model, y, x, w, cfg)? * quantile_coeff_wx(model, w, x, cfg)?)
}

fn marginal_density(model: &dyn ContinuousModel, y: f64, x: f64, cfg: &NumericConfig) -> Result<f64> {
    let f = marginal_pdf_y_given_x(model, y, x, &cfg.quad)?;
    if !(f > cfg.density_floor) {
        return Err(undefined(f, format!("y = {y}, x = {x}")));
    }
    Ok(f)
}

/// `∫ F_w(y|x,w) F_x(w|x) dw`.
pub fn criterion_integral(model: &dyn ContinuousModel, y: f64, x: f64, cfg: &NumericConfig) -> Result<f64> {
    let v = w_integral(
        model,
        y,
        x,
        |w| dependence::cdf_y_dw(model, y, x, w, cfg) * dependence::cdf_w_dx(model, w, x, cfg),
        &cfg.quad,
    )?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { at: x })
    }
}

/// Posterior expectations at one `(y, x)`, each computed as a single
/// quadrature of an unnormalised integrand divided by `f(y|x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTerms {
    /// `q_x(y|x)` from the differenced marginal CDF.
    pub q_marginal: f64,
    /// `E_{W|y,x}[q_x(y|x,W)]`
    pub mean_q_cond: f64,
    /// `E_{W|y,x}[q_w(y|x,W) q_x(W|x)]`
    pub mean_product: f64,
    /// `f(y|x)`
    pub density: f64,
}

impl PosteriorTerms {
    pub fn mean_delta(&self) -> f64 {
        self.mean_q_cond + self.mean_product
    }

    /// `q_x(y|x) - E_{W|y,x}[δ]`
    pub fn cox_residual(&self) -> f64 {
        self.q_marginal - self.mean_delta()
    }

    /// `|q_x(y|x) - E_{W|y,x}[q_x(y|x,W)]|`
    pub fn a_violation(&self) -> f64 {
        (self.q_marginal - self.mean_q_cond).abs()
    }

    /// `|E_{W|y,x}[q_w q_x(w|x)]|`
    pub fn criterion_violation(&self) -> f64 {
        self.mean_product.abs()
    }
}

/// `δ f(y|x,w) f(w|x) = -F_x(y|x,w) f(w|x) + F_w(y|x,w) F_x(w|x)`, so the
/// posterior means need no division by the conditional density and are
/// well defined where it vanishes.
pub fn posterior_terms(model: &dyn ContinuousModel, y: f64, x: f64, cfg: &NumericConfig) -> Result<PosteriorTerms> {
    let density = marginal_density(model, y, x, cfg)?;
    let q_marginal = -dist_dep_continuous(model, y, x, WPoint::Marginal, cfg)?.value / density;
    let mean_q_cond = -averaged_dependence(model, y, x, cfg)? / density;
    let mean_product = criterion_integral(model, y, x, cfg)? / density;
    Ok(PosteriorTerms {
        q_marginal,
        mean_q_cond,
        mean_product,
        density,
    })
}

/// `q_x(y|x) - E_{W|y,x}[δ(y|x,W)]`; zero for every model up to numerics.
pub fn cox_identity_residual(model: &dyn ContinuousModel, y: f64, x: f64, cfg: &NumericConfig) -> Result<f64> {
    Ok(posterior_terms(model, y, x, cfg)?.cox_residual())
}

fn yx(y: f64, x: f64) -> impl FnOnce(Witness) -> Witness {
    move |wt| wt.y(Coord::Value(y)).x(Coord::Value(x))
}

/// Both forms of the quantile A-collapsibility violation on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileAReport {
    /// Verdict on `|q_x(y|x) - E_{W|y,x}[q_x(y|x,W)]|`.
    pub verdict: Verdict,
    /// Largest `|E_{W|y,x}[q_w q_x(w|x)]|`.
    pub criterion_form_max: f64,
    /// Largest pointwise gap between the two forms.
    pub forms_gap: f64,
}

/// Quantile A-collapsibility over the `(y, x)` points of `grid`.
pub fn check_a_collapsibility_quantile(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<QuantileAReport> {
    grid.check_within(model)?;
    let mut direct = Worst::new();
    let mut criterion = Worst::new();
    let mut gap: f64 = 0.0;
    for &y in &grid.ys {
        for &x in &grid.xs {
            let t = posterior_terms(model, y, x, cfg)?;
            direct.observe(t.q_marginal, t.mean_q_cond, yx(y, x));
            criterion.observe(t.mean_product, 0.0, yx(y, x));
            gap = gap.max((t.a_violation() - t.criterion_violation()).abs());
        }
    }
    let criterion_form_max = criterion.value();
    let notes = vec![format!(
        "criterion form max {criterion_form_max:.3e}; largest gap between forms {gap:.3e}"
    )];
    Ok(QuantileAReport {
        verdict: direct.verdict(Property::QuantileACollapsibility, tol, notes),
        criterion_form_max,
        forms_gap: gap,
    })
}

pub fn check_criterion_integral(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    grid.check_within(model)?;
    let mut worst = Worst::new();
    for &y in &grid.ys {
        for &x in &grid.xs {
            worst.observe(criterion_integral(model, y, x, cfg)?, 0.0, yx(y, x));
        }
    }
    Ok(worst.verdict(Property::CriterionIntegral, tol, Vec::new()))
}

pub fn check_cox_identity(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    grid.check_within(model)?;
    let mut worst = Worst::new();
    for &y in &grid.ys {
        for &x in &grid.xs {
            let t = posterior_terms(model, y, x, cfg)?;
            worst.observe(t.q_marginal, t.mean_delta(), yx(y, x));
        }
    }
    Ok(worst.verdict(Property::CoxIdentity, tol, Vec::new()))
}

/// True when `(y, x, w)` lies within two differencing steps of a support
/// edge of `Y | x, w` or of a `w` breakpoint.
fn near_edge(model: &dyn ContinuousModel, y: f64, x: f64, w: f64, cfg: &NumericConfig) -> bool {
    let margin = 2.0 * cfg.diff.step(y).max(cfg.diff.step(x)).max(cfg.diff.step(w));
    model.y_breakpoints(x, w).iter().any(|b| (y - b).abs() <= margin)
        || model.w_breakpoints(y, x).iter().any(|b| (w - b).abs() <= margin)
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedQuantileCoefficient { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Quantile coefficients on a grid. Conditional arrays are `[y][x][w]`,
/// `q_x_marginal` is `[y][x]` and `q_x_w` is `[x][w]`. `None` marks null
/// densities and points near support edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileProfile {
    pub grid: EvalGrid,
    pub q_x_marginal: Vec<Option<f64>>,
    pub q_x_cond: Vec<Option<f64>>,
    pub q_w_cond: Vec<Option<f64>>,
    pub q_x_w: Vec<Option<f64>>,
    pub delta: Vec<Option<f64>>,
}

impl QuantileProfile {
    pub fn compute(model: &dyn ContinuousModel, grid: &EvalGrid, cfg: &NumericConfig) -> Result<Self> {
        grid.check_within(model)?;
        let mut q_x_w = Vec::new();
        for &x in &grid.xs {
            for &w in &grid.ws {
                q_x_w.push(defined(quantile_coeff_wx(model, w, x, cfg))?);
            }
        }
        let nw = grid.ws.len();
        let (mut q_x_marginal, mut q_x_cond, mut q_w_cond, mut delta) = (vec![], vec![], vec![], vec![]);
        for &y in &grid.ys {
            for (ix, &x) in grid.xs.iter().enumerate() {
                q_x_marginal.push(defined(quantile_coeff(model, y, x, None, cfg))?);
                for (iw, &w) in grid.ws.iter().enumerate() {
                    let (qx, qw) = if near_edge(model, y, x, w, cfg) {
                        (None, None)
                    } else {
                        (
                            defined(quantile_coeff(model, y, x, Some(w), cfg))?,
                            defined(quantile_coeff_w(model, y, x, w, cfg))?,
                        )
                    };
                    let d = match (qx, qw, q_x_w[ix * nw + iw]) {
                        (Some(a), Some(b), Some(c)) => Some(a + b * c),
                        _ => None,
                    };
                    q_x_cond.push(qx);
                    q_w_cond.push(qw);
                    delta.push(d);
                }
            }
        }
        Ok(QuantileProfile {
            grid: grid.clone(),
            q_x_marginal,
            q_x_cond,
            q_w_cond,
            q_x_w,
            delta,
        })
    }

    fn cond_index(&self, iy: usize, ix: usize, iw: usize) -> usize {
        (iy * self.grid.xs.len() + ix) * self.grid.ws.len() + iw
    }

    /// `q_w(y|x,w) q_x(w|x)` on the grid, `[y][x][w]`.
    pub fn product_field(&self) -> Vec<Option<f64>> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(self.q_w_cond.len());
        for iy in 0..g.ys.len() {
            for ix in 0..g.xs.len() {
                for iw in 0..g.ws.len() {
                    let qw = self.q_w_cond[self.cond_index(iy, ix, iw)];
                    let qxw = self.q_x_w[ix * g.ws.len() + iw];
                    out.push(qw.zip(qxw).map(|(a, b)| a * b));
                }
            }
        }
        out
    }
}

/// `q_w(y|x,w) q_x(w|x)` on a grid, `[y][x][w]`.
pub fn pointwise_product_field(model: &dyn ContinuousModel, grid: &EvalGrid, cfg: &NumericConfig) -> Result<Vec<Option<f64>>> {
    Ok(QuantileProfile::compute(model, grid, cfg)?.product_field())
}

/// Consistency of quantile A-collapsibility with the product field for a
/// family declared conditionally complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub declared_complete: Option<bool>,
    pub quantile_a_holds: bool,
    pub product_max: f64,
    pub status: Status,
    pub notes: Vec<String>,
}

/// Under declared completeness, quantile A-collapsibility should force the
/// product field to vanish. This checks that implication; completeness
/// itself is taken from the family.
pub fn completeness_check(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<CompletenessReport> {
    let a = check_a_collapsibility_quantile(model, grid, tol, cfg)?;
    let product = pointwise_product_field(model, grid, cfg)?;
    let product_max = product.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let declared = model.conditionally_complete();
    let mut notes = Vec::new();
    let status = match declared {
        Some(true) if !a.verdict.holds => Status::Vacuous,
        Some(true) if product_max <= tol => Status::Consistent,
        Some(true) => {
            notes.push("A-collapsible under a complete family but the product field is nonzero".into());
            Status::Violated
        }
        Some(false) => {
            notes.push("family declared not conditionally complete".into());
            Status::NotApplicable
        }
        None => {
            notes.push("completeness not declared".into());
            Status::NotApplicable
        }
    };
    Ok(CompletenessReport {
        declared_complete: declared,
        quantile_a_holds: a.verdict.holds,
        product_max,
        status,
        notes,
    })
}

/// `q_x(y|x) = δ(y|x,w)` wherever `δ` does not vary with `w` (spread within
/// `tol`). Points where `δ` varies are counted but not asserted.
pub fn check_w_free_total_effect(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    let p = QuantileProfile::compute(model, grid, cfg)?;
    let g = &p.grid;
    let mut worst = Worst::new();
    let mut premise_fails = 0;
    for (iy, &y) in g.ys.iter().enumerate() {
        for (ix, &x) in g.xs.iter().enumerate() {
            let deltas: Vec<f64> = (0..g.ws.len()).filter_map(|iw| p.delta[p.cond_index(iy, ix, iw)]).collect();
            let Some(q) = p.q_x_marginal[iy * g.xs.len() + ix] else { continue };
            if deltas.is_empty() {
                continue;
            }
            let lo = deltas.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > tol {
                premise_fails += 1;
                continue;
            }
            let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
            worst.observe(q, mean, yx(y, x));
        }
    }
    let mut notes = Vec::new();
    if premise_fails > 0 {
        notes.push(format!("premise fails: δ varies with w at {premise_fails} (y, x) points; not asserted there"));
    }
    Ok(worst.verdict(Property::WFreeTotalEffect, tol, notes))
}

/// A solved quantile with the slope identity `∂y_η/∂x = q_x(y_η|x)`
/// checked by differencing `y_η` in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub eta: f64,
    pub x: f64,
    pub w: Option<f64>,
    pub y: f64,
    pub slope: f64,
    pub coefficient: f64,
}

impl QuantilePoint {
    pub fn slope_residual(&self) -> f64 {
        self.slope - self.coefficient
    }
}

fn y_bracket(model: &dyn ContinuousModel, x: f64, w: Option<f64>) -> Interval {
    match w {
        Some(w) => model.support_y(x, w),
        None => {
            let sw = model.support_w(x);
            let mut ws: Vec<f64> = (0..=32).map(|i| sw.lo + sw.width() * i as f64 / 32.0).collect();
            ws.extend([0.5 * (sw.lo + sw.hi)]);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for w in ws {
                let s = model.support_y(x, w);
                lo = lo.min(s.lo);
                hi = hi.max(s.hi);
            }
            Interval::new(lo, hi)
        }
    }
}

fn solve_quantile(model: &dyn ContinuousModel, eta: f64, x: f64, w: Option<f64>, cfg: &NumericConfig) -> Result<f64> {
    let b = y_bracket(model, x, w);
    let (mut lo, mut hi) = (b.lo, b.hi);
    let cdf = |y: f64| -> Result<f64> {
        match w {
            Some(w) => Ok(model.cdf_y(y, x, w)),
            None => marginal_cdf_y_given_x(model, y, x, &cfg.quad),
        }
    };
    for _ in 0..20 {
        let (f_lo, f_hi) = (cdf(lo)?, cdf(hi)?);
        if f_lo <= eta && eta <= f_hi {
            break;
        }
        let width = (hi - lo).max(1.0);
        if f_lo > eta {
            lo -= width;
        }
        if f_hi < eta {
            hi += width;
        }
    }
    let failure = std::cell::RefCell::new(None);
    let y = invert_cdf(
        |t| match cdf(t) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        eta,
        (lo, hi),
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => y,
    }
}

/// Solves `F(y|x[,w]) = η` and checks the slope identity.
pub fn quantile_function(
    model: &dyn ContinuousModel,
    eta: f64,
    x: f64,
    w: Option<f64>,
    cfg: &NumericConfig,
) -> Result<QuantilePoint> {
    let y = solve_quantile(model, eta, x, w, cfg)?;
    let bounds = model.x_smooth_piece(x).intersect(&model.support_x());
    let spec = cfg.marginal_diff.within(bounds);
    let slope = diff_fallible(|t| solve_quantile(model, eta, t, w, cfg), x, &spec)?.value;
    let coefficient = quantile_coeff(model, y, x, w, cfg)?;
    Ok(QuantilePoint {
        eta,
        x,
        w,
        y,
        slope,
        coefficient,
    })
}
