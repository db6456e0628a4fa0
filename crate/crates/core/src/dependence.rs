//! Distribution and density dependence functions, conditional on `W` or
//! marginal over it, and the two-term split of the marginal dependence.

use std::cell::RefCell;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    marginal_cdf_y_given_x, marginal_pdf_y_given_x, ContinuousModel, DiscreteJoint, EvalGrid,
    WCondition,
};
use crate::model::marginal::w_integral;
use crate::numerics::{central_diff, Derivative, DiffSpec, Interval, NumericConfig};

/// How a dependence value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    FiniteDifference,
    /// Difference across adjacent levels of a discrete `X`.
    AdjacentDifference,
    /// Divided differences across the knots of a tabulated model.
    TabulatedDifference,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::FiniteDifference => "finite-difference",
            Method::AdjacentDifference => "adjacent-difference",
            Method::TabulatedDifference => "tabulated-difference",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// `∂F(y|·)/∂x`
    Distribution,
    /// `∂f(y|·)/∂x`
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Conditional,
    Marginal,
}

/// Where `W` stands in a continuous dependence query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WPoint {
    At(f64),
    Marginal,
}

/// A single dependence value with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dep {
    pub value: f64,
    pub method: Method,
    /// A support or smoothness boundary forced a one-sided stencil.
    pub one_sided: bool,
}

/// `Δ_x F(y|i,w) = P(Y ≤ y | i+1, w) - P(Y ≤ y | i, w)` with 0-based `y` and
/// `i` indices into the table's level lists.
pub fn dist_dep_discrete(
    joint: &DiscreteJoint,
    y: usize,
    i: usize,
    cond: &WCondition,
) -> Result<BigRational> {
    let (_, nx, _) = joint.dims();
    if i + 1 >= nx {
        return Err(Error::TooFewLevels {
            axis: "X",
            needed: i + 2,
            found: nx,
        });
    }
    Ok(joint.cdf(y, i + 1, cond)? - joint.cdf(y, i, cond)?)
}

/// Differentiates a fallible function, surfacing the first inner error in
/// place of the non-finite value it was turned into.
pub(crate) fn diff_fallible<F>(f: F, x: f64, spec: &DiffSpec) -> Result<Derivative>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let wrapped = |t: f64| match f(t) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let out = central_diff(wrapped, x, spec);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => out,
    }
}

fn x_bounds(model: &dyn ContinuousModel, x: f64) -> Interval {
    model.x_smooth_piece(x).intersect(&model.support_x())
}

fn fd(d: Derivative) -> Dep {
    Dep {
        value: d.value,
        method: Method::FiniteDifference,
        one_sided: d.one_sided,
    }
}

fn analytic(model: &dyn ContinuousModel, value: f64) -> Dep {
    Dep {
        value,
        method: model.partials_method(),
        one_sided: false,
    }
}

/// `∂F(y|x,w)/∂x`, or `∂F(y|x)/∂x` for [`WPoint::Marginal`].
///
/// Conditional values use the family's closed form when it has one. Marginal
/// values difference the quadrature-valued `F(y|x)` with the wider
/// `marginal_diff` stencil.
pub fn dist_dep_continuous(
    model: &dyn ContinuousModel,
    y: f64,
    x: f64,
    w: WPoint,
    cfg: &NumericConfig,
) -> Result<Dep> {
    let bounds = x_bounds(model, x);
    match w {
        WPoint::At(w) => match model.cdf_y_dx(y, x, w) {
            Some(v) => Ok(analytic(model, v)),
            None => {
                let spec = cfg.diff.within(bounds);
                central_diff(|t| model.cdf_y(y, t, w), x, &spec).map(fd)
            }
        },
        WPoint::Marginal => {
            let spec = cfg.marginal_diff.within(bounds);
            diff_fallible(|t| marginal_cdf_y_given_x(model, y, t, &cfg.quad), x, &spec).map(fd)
        }
    }
}

/// Relative jump above which a density is treated as discontinuous in `x`.
const EDGE_JUMP: f64 = 0.1;

fn check_not_edge(f0: f64, f_minus: f64, f_plus: f64, at: impl FnOnce() -> String) -> Result<()> {
    let local = f0.abs().max(f_minus.abs()).max(f_plus.abs());
    if local == 0.0 {
        return Ok(());
    }
    let jump = (f_plus - f0).abs().max((f_minus - f0).abs());
    if jump > EDGE_JUMP * local {
        Err(Error::NonDifferentiable { at: at() })
    } else {
        Ok(())
    }
}

/// `∂f(y|x,w)/∂x`, or `∂f(y|x)/∂x` for [`WPoint::Marginal`].
///
/// Fails with [`Error::NonDifferentiable`] when the density jumps by more
/// than 10% of its local value across one differencing step in `x`.
pub fn density_dep(
    model: &dyn ContinuousModel,
    y: f64,
    x: f64,
    w: WPoint,
    cfg: &NumericConfig,
) -> Result<Dep> {
    let bounds = x_bounds(model, x);
    match w {
        WPoint::At(w) => {
            let spec = cfg.diff.within(bounds);
            let h = spec.step(x);
            let at = |t: f64| model.pdf_y(y, t, w);
            let (lo, hi) = ((x - h).max(bounds.lo), (x + h).min(bounds.hi));
            check_not_edge(at(x), at(lo), at(hi), || format!("y = {y}, x = {x}, w = {w}"))?;
            match model.pdf_y_dx(y, x, w) {
                Some(v) => Ok(analytic(model, v)),
                None => central_diff(at, x, &spec).map(fd),
            }
        }
        WPoint::Marginal => {
            let spec = cfg.marginal_diff.within(bounds);
            let h = spec.step(x);
            let at = |t: f64| marginal_pdf_y_given_x(model, y, t, &cfg.quad);
            let (lo, hi) = ((x - h).max(bounds.lo), (x + h).min(bounds.hi));
            check_not_edge(at(x)?, at(lo)?, at(hi)?, || format!("y = {y}, x = {x}, marginal"))?;
            diff_fallible(at, x, &spec).map(fd)
        }
    }
}

/// `∂F(y|x,w)/∂x`, closed form or central difference.
pub(crate) fn cdf_y_dx(model: &dyn ContinuousModel, y: f64, x: f64, w: f64, cfg: &NumericConfig) -> f64 {
    model.cdf_y_dx(y, x, w).unwrap_or_else(|| {
        let spec = cfg.diff.within(x_bounds(model, x));
        central_diff(|t| model.cdf_y(y, t, w), x, &spec).map_or(f64::NAN, |d| d.value)
    })
}

/// `∂F(y|x,w)/∂w`, closed form or central difference.
pub(crate) fn cdf_y_dw(model: &dyn ContinuousModel, y: f64, x: f64, w: f64, cfg: &NumericConfig) -> f64 {
    model.cdf_y_dw(y, x, w).unwrap_or_else(|| {
        let spec = cfg.diff.within(model.support_w(x));
        central_diff(|t| model.cdf_y(y, x, t), w, &spec).map_or(f64::NAN, |d| d.value)
    })
}

/// `∂F(w|x)/∂x`, closed form or central difference.
pub(crate) fn cdf_w_dx(model: &dyn ContinuousModel, w: f64, x: f64, cfg: &NumericConfig) -> f64 {
    model.cdf_w_dx(w, x).unwrap_or_else(|| {
        let spec = cfg.diff.within(x_bounds(model, x));
        central_diff(|t| model.cdf_w(w, t), x, &spec).map_or(f64::NAN, |d| d.value)
    })
}

/// `∂f(w|x)/∂x`, closed form or central difference.
pub(crate) fn pdf_w_dx(model: &dyn ContinuousModel, w: f64, x: f64, cfg: &NumericConfig) -> f64 {
    model.pdf_w_dx(w, x).unwrap_or_else(|| {
        let spec = cfg.diff.within(x_bounds(model, x));
        central_diff(|t| model.pdf_w(w, t), x, &spec).map_or(f64::NAN, |d| d.value)
    })
}

/// `∂f(y|x,w)/∂x`, closed form or central difference.
pub(crate) fn pdf_y_dx(model: &dyn ContinuousModel, y: f64, x: f64, w: f64, cfg: &NumericConfig) -> f64 {
    model.pdf_y_dx(y, x, w).unwrap_or_else(|| {
        let spec = cfg.diff.within(x_bounds(model, x));
        central_diff(|t| model.pdf_y(y, t, w), x, &spec).map_or(f64::NAN, |d| d.value)
    })
}

fn finite_or(at: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { at })
    }
}

/// Averaged conditional dependence `∫ ∂F(y|x,w)/∂x f(w|x) dw`.
pub fn averaged_dependence(model: &dyn ContinuousModel, y: f64, x: f64, cfg: &NumericConfig) -> Result<f64> {
    let v = w_integral(model, y, x, |w| cdf_y_dx(model, y, x, w, cfg) * model.pdf_w(w, x), &cfg.quad)?;
    finite_or(x, v)
}

/// Mixing term `∫ F(y|x,w) ∂f(w|x)/∂x dw`.
pub fn residual_term(model: &dyn ContinuousModel, y: f64, x: f64, cfg: &NumericConfig) -> Result<f64> {
    let v = w_integral(model, y, x, |w| model.cdf_y(y, x, w) * pdf_w_dx(model, w, x, cfg), &cfg.quad)?;
    finite_or(x, v)
}

/// `(∫ ∂F/∂x f(w|x) dw, ∫ F ∂f(w|x)/∂x dw)`, whose sum is `∂F(y|x)/∂x`.
pub fn decomposition_terms(
    model: &dyn ContinuousModel,
    y: f64,
    x: f64,
    cfg: &NumericConfig,
) -> Result<(f64, f64)> {
    Ok((averaged_dependence(model, y, x, cfg)?, residual_term(model, y, x, cfg)?))
}

/// Dependence values sampled on an [`EvalGrid`].
///
/// Conditional values are stored `[y][x][w]`, marginal ones `[y][x]`.
/// `None` marks points where the dependence is undefined (density jumps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceField {
    pub kind: Kind,
    pub scope: Scope,
    pub grid: EvalGrid,
    pub values: Vec<Option<f64>>,
    pub method: Method,
    /// Points evaluated with a one-sided stencil.
    pub one_sided: usize,
}

impl DependenceField {
    pub fn conditional(
        model: &dyn ContinuousModel,
        grid: &EvalGrid,
        kind: Kind,
        cfg: &NumericConfig,
    ) -> Result<Self> {
        Self::build(model, grid, kind, Scope::Conditional, cfg)
    }

    pub fn marginal(
        model: &dyn ContinuousModel,
        grid: &EvalGrid,
        kind: Kind,
        cfg: &NumericConfig,
    ) -> Result<Self> {
        Self::build(model, grid, kind, Scope::Marginal, cfg)
    }

    fn build(
        model: &dyn ContinuousModel,
        grid: &EvalGrid,
        kind: Kind,
        scope: Scope,
        cfg: &NumericConfig,
    ) -> Result<Self> {
        grid.check_within(model)?;
        let wpoints: Vec<WPoint> = match scope {
            Scope::Conditional => grid.ws.iter().map(|&w| WPoint::At(w)).collect(),
            Scope::Marginal => vec![WPoint::Marginal],
        };
        let mut values = Vec::with_capacity(grid.ys.len() * grid.xs.len() * wpoints.len());
        let mut method = None;
        let mut one_sided = 0;
        for &y in &grid.ys {
            for &x in &grid.xs {
                for &w in &wpoints {
                    let dep = match kind {
                        Kind::Distribution => dist_dep_continuous(model, y, x, w, cfg),
                        Kind::Density => density_dep(model, y, x, w, cfg),
                    };
                    match dep {
                        Ok(d) => {
                            if !d.value.is_finite() {
                                return Err(Error::NonFinite { at: x });
                            }
                            method.get_or_insert(d.method);
                            one_sided += usize::from(d.one_sided);
                            values.push(Some(d.value));
                        }
                        Err(Error::NonDifferentiable { .. }) => values.push(None),
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        let method = method.unwrap_or(match scope {
            Scope::Conditional => model.partials_method(),
            Scope::Marginal => Method::FiniteDifference,
        });
        Ok(DependenceField {
            kind,
            scope,
            grid: grid.clone(),
            values,
            method,
            one_sided,
        })
    }

    fn w_len(&self) -> usize {
        match self.scope {
            Scope::Conditional => self.grid.ws.len(),
            Scope::Marginal => 1,
        }
    }

    /// Value at grid indices; `iw` is ignored for marginal fields.
    pub fn get(&self, iy: usize, ix: usize, iw: usize) -> Option<f64> {
        let nw = self.w_len();
        let iw = if self.scope == Scope::Marginal { 0 } else { iw };
        self.values[(iy * self.grid.xs.len() + ix) * nw + iw]
    }

    /// Number of grid points with an undefined value.
    pub fn undefined(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianLinear, GaussianW, LevelOrders, TableRow, UniformQuadratic, UniformShift};
    use crate::numerics::norm_pdf;
    use num_traits::ToPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    pub(crate) fn reference_table() -> DiscreteJoint {
        let rows = [
            ("1", "1", "1", 25),
            ("2", "1", "1", 35),
            ("1", "2", "1", 75),
            ("2", "2", "1", 45),
            ("1", "1", "2", 35),
            ("2", "1", "2", 15),
            ("1", "2", "2", 60),
            ("2", "2", "2", 40),
        ]
        .map(|(y, x, w, c)| TableRow::new(y, x, w, c));
        DiscreteJoint::from_rows(&rows, &LevelOrders::natural()).unwrap()
    }

    #[test]
    fn reference_table_differences() {
        let t = reference_table();
        let d1 = dist_dep_discrete(&t, 0, 0, &WCondition::At(0)).unwrap();
        let d2 = dist_dep_discrete(&t, 0, 0, &WCondition::At(1)).unwrap();
        let dm = dist_dep_discrete(&t, 0, 0, &WCondition::Marginal).unwrap();
        assert_eq!(d1, ratio(75, 120) - ratio(25, 60));
        assert_eq!(d2, ratio(-1, 10));
        assert_eq!(dm, ratio(135, 220) - ratio(60, 110));
        assert_eq!(format!("{:.3}", d1.to_f64().unwrap()), "0.208");
        assert_eq!(format!("{:.3}", dm.to_f64().unwrap()), "0.068");
        assert!(dist_dep_discrete(&t, 0, 1, &WCondition::Marginal).is_err());
    }

    #[test]
    fn marginal_difference_is_mixture_of_cells() {
        // Δ F(y|i) = Σ_w [P(w|i+1) F(y|i+1,w) - P(w|i) F(y|i,w)] exactly.
        let t = reference_table();
        let lhs = dist_dep_discrete(&t, 0, 0, &WCondition::Marginal).unwrap();
        let mut rhs = ratio(0, 1);
        for w in 0..2 {
            rhs += t.w_given_x(w, 1).unwrap() * t.cdf(0, 1, &WCondition::At(w)).unwrap();
            rhs -= t.w_given_x(w, 0).unwrap() * t.cdf(0, 0, &WCondition::At(w)).unwrap();
        }
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn linear_interaction_closed_form() {
        let w = GaussianW::new(0.0, 1.0, 1.0);
        let m = GaussianLinear::linear_interaction([0.1, 0.7, 0.4, 0.9], 1.3, w).unwrap();
        let cfg = NumericConfig::default();
        let (y, x, wv) = (0.4, 0.3, -0.6);
        let z = (y - m.mean_y(x, wv)) / 1.3;
        let expected = -((0.7 + 0.9 * wv) / 1.3) * norm_pdf(z);
        let d = dist_dep_continuous(&m, y, x, WPoint::At(wv), &cfg).unwrap();
        assert!((d.value - expected).abs() < 1e-15);
        assert_eq!(d.method, Method::Analytic);
    }

    #[test]
    fn shift_closed_form_matches_difference() {
        let m = UniformShift::default();
        let cfg = NumericConfig::default();
        let (y, x, w) = (0.3, 1.2, 0.1);
        let d = dist_dep_continuous(&m, y, x, WPoint::At(w), &cfg).unwrap();
        assert!((d.value - (w - y) / (2.0 * x * x)).abs() < 1e-15);
        let num = central_diff(|t| m.cdf_y(y, t, w), x, &cfg.diff).unwrap();
        assert!((num.value - d.value).abs() < 1e-6);
        let below = dist_dep_continuous(&m, -50.0, x, WPoint::At(w), &cfg).unwrap();
        assert_eq!(below.value, 0.0);
    }

    #[test]
    fn quadratic_density_dependence() {
        let m = UniformQuadratic::default();
        let cfg = NumericConfig::default();
        let (y, x, w) = (0.02, 0.5, 0.3);
        let d = density_dep(&m, y, x, WPoint::At(w), &cfg).unwrap();
        assert!((d.value - (2.0 * x + 2.0 * (x - w))).abs() < 1e-12);
        let marginal = density_dep(&m, 0.02, 1.0, WPoint::Marginal, &cfg).unwrap();
        assert!((marginal.value - 2.0).abs() < 1e-3, "{}", marginal.value);
    }

    #[test]
    fn density_edge_is_rejected() {
        let m = UniformShift::default();
        let cfg = NumericConfig::default();
        // y = w + x puts the point on the upper support edge
        let err = density_dep(&m, 1.5, 1.0, WPoint::At(0.5), &cfg).unwrap_err();
        assert!(matches!(err, Error::NonDifferentiable { .. }));
    }

    #[test]
    fn decomposition_sums_to_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cfg = NumericConfig::default();
        let w = GaussianW::new(0.0, 1.0, 1.0);
        let m = GaussianLinear::linear_interaction([0.0, 1.0, 0.5, 0.8], 1.0, w).unwrap();
        for _ in 0..10 {
            let y = rng.random_range(-2.0..2.0);
            let x = rng.random_range(-1.0..1.0);
            let (avg, res) = decomposition_terms(&m, y, x, &cfg).unwrap();
            let marg = dist_dep_continuous(&m, y, x, WPoint::Marginal, &cfg).unwrap();
            assert!((avg + res - marg.value).abs() < 1e-5, "{} vs {}", avg + res, marg.value);
        }
    }

    #[test]
    fn residual_vanishes_for_quadratic_and_independent_families() {
        let cfg = NumericConfig::default();
        let q = UniformQuadratic::default();
        let (_, res) = decomposition_terms(&q, 0.02, 0.5, &cfg).unwrap();
        assert!(res.abs() < 1e-6, "{res}");
        let i = GaussianLinear::indep_xw([0.0, 1.0, 1.0, 0.5], 1.0, 0.3, 1.2).unwrap();
        let (_, res) = decomposition_terms(&i, 0.4, 0.2, &cfg).unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn fields_index_and_serialize() {
        let m = UniformShift::default();
        let cfg = NumericConfig::default();
        let grid = EvalGrid::new(vec![-0.2, 0.2], vec![1.0, 1.5], vec![-0.5, 0.0, 0.5]).unwrap();
        let f = DependenceField::conditional(&m, &grid, Kind::Distribution, &cfg).unwrap();
        assert_eq!(f.values.len(), 12);
        assert_eq!(f.get(1, 0, 2), Some((0.5 - 0.2) / 2.0));
        let json = serde_json::to_value(&f).unwrap();
        assert_eq!(json["method"], "analytic");
        assert_eq!(json["kind"], "distribution");
    }
}
