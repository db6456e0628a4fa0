//! Grid-based checks on continuous models. The "for all" quantifiers run
//! over the points of an [`EvalGrid`]; expectations over `W` are quadratures.

use super::{ConditionReport, Coord, Direction, Property, ReversalReport, Verdict, Worst};
use crate::collapse::discrete::Independence;
use crate::dependence::{
    averaged_dependence, density_dep, pdf_y_dx, residual_term, DependenceField, Kind, WPoint,
};
use crate::error::{Error, Result};
use crate::model::marginal::w_integral;
use crate::model::{marginal_cdf_y_given_x, ContinuousModel, EvalGrid};
use crate::numerics::NumericConfig;

/// Tolerance for identities that involve only quadrature error.
pub const QUADRATURE_TOL: f64 = 1e-6;
/// Tolerance for families whose CDF is clamped on a `w`-dependent support.
pub const CLAMPED_TOL: f64 = 1e-3;

pub fn default_tolerance(model: &dyn ContinuousModel) -> f64 {
    if model.support_clamped() {
        CLAMPED_TOL
    } else {
        QUADRATURE_TOL
    }
}

fn yx(y: f64, x: f64) -> impl FnOnce(super::Witness) -> super::Witness {
    move |wt| wt.y(Coord::Value(y)).x(Coord::Value(x))
}

fn yxw(y: f64, x: f64, w: f64) -> impl FnOnce(super::Witness) -> super::Witness {
    move |wt| wt.y(Coord::Value(y)).x(Coord::Value(x)).w(Coord::Value(w))
}

fn undefined_note(field: &DependenceField) -> Vec<String> {
    match field.undefined() {
        0 => Vec::new(),
        n => vec![format!("{n} non-differentiable grid points excluded")],
    }
}

/// Largest spread of a conditional field across `W` at fixed `(y, x)`.
pub fn check_homogeneity(field: &DependenceField, tol: f64) -> Result<Verdict> {
    let g = &field.grid;
    if g.ws.len() < 2 {
        return Err(Error::HomogeneityUndefined);
    }
    let mut worst = Worst::new();
    for (iy, &y) in g.ys.iter().enumerate() {
        for (ix, &x) in g.xs.iter().enumerate() {
            let vals: Vec<(f64, f64)> = g
                .ws
                .iter()
                .enumerate()
                .filter_map(|(iw, &w)| field.get(iy, ix, iw).map(|v| (w, v)))
                .collect();
            let Some(&(w_min, lo)) = vals.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else {
                continue;
            };
            let &(w_max, hi) = vals.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or(&(w_min, lo));
            worst.observe(hi, lo, |wt| {
                yxw(y, x, w_max)(wt).w_other(Coord::Value(w_min))
            });
        }
    }
    let mut notes = vec![format!("conditional dependence method: {}", field.method.as_str())];
    notes.extend(undefined_note(field));
    Ok(worst.verdict(Property::Homogeneity, tol, notes))
}

/// `max |∂F(y|x,w)/∂x - ∂F(y|x)/∂x|` over the grid.
pub fn check_collapsibility_fields(
    conditional: &DependenceField,
    marginal: &DependenceField,
    tol: f64,
) -> Verdict {
    let g = &conditional.grid;
    let mut worst = Worst::new();
    for (iy, &y) in g.ys.iter().enumerate() {
        for (ix, &x) in g.xs.iter().enumerate() {
            let Some(m) = marginal.get(iy, ix, 0) else { continue };
            for (iw, &w) in g.ws.iter().enumerate() {
                if let Some(c) = conditional.get(iy, ix, iw) {
                    worst.observe(c, m, yxw(y, x, w));
                }
            }
        }
    }
    worst.verdict(Property::Collapsibility, tol, Vec::new())
}

pub fn check_collapsibility(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    let c = DependenceField::conditional(model, grid, Kind::Distribution, cfg)?;
    let m = DependenceField::marginal(model, grid, Kind::Distribution, cfg)?;
    Ok(check_collapsibility_fields(&c, &m, tol))
}

/// `max |E_{W|x}[∂F(y|x,W)/∂x] - ∂F(y|x)/∂x|` with the marginal dependence
/// taken from a precomputed field.
pub fn check_a_collapsibility_with(
    model: &dyn ContinuousModel,
    marginal: &DependenceField,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    let g = &marginal.grid;
    let mut worst = Worst::new();
    for (iy, &y) in g.ys.iter().enumerate() {
        for (ix, &x) in g.xs.iter().enumerate() {
            let Some(m) = marginal.get(iy, ix, 0) else { continue };
            let avg = averaged_dependence(model, y, x, cfg)?;
            worst.observe(avg, m, yx(y, x));
        }
    }
    Ok(worst.verdict(
        Property::ACollapsibility,
        tol,
        vec!["expectation under W | X = x by quadrature; marginal by finite differences".into()],
    ))
}

pub fn check_a_collapsibility(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    let m = DependenceField::marginal(model, grid, Kind::Distribution, cfg)?;
    check_a_collapsibility_with(model, &m, tol, cfg)
}

/// `∫ F(y|x,w) ∂f(w|x)/∂x dw`, which vanishes exactly when the averaged
/// conditional dependence equals the marginal one.
pub fn residual_integral(model: &dyn ContinuousModel, y: f64, x: f64, cfg: &NumericConfig) -> Result<f64> {
    residual_term(model, y, x, cfg)
}

pub fn check_residual_integral(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    grid.check_within(model)?;
    let mut worst = Worst::new();
    for &y in &grid.ys {
        for &x in &grid.xs {
            let r = residual_integral(model, y, x, cfg)?;
            worst.observe(r, 0.0, yx(y, x));
        }
    }
    Ok(worst.verdict(Property::ResidualIntegral, tol, Vec::new()))
}

/// `max |E_{W|x}[∂f(y|x,W)/∂x] - ∂f(y|x)/∂x|`. Points where the marginal
/// density is not differentiable in `x` are excluded and counted in notes.
pub fn check_density_a_collapsibility(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    grid.check_within(model)?;
    let mut worst = Worst::new();
    let mut excluded = 0;
    for &y in &grid.ys {
        for &x in &grid.xs {
            let marginal = match density_dep(model, y, x, WPoint::Marginal, cfg) {
                Ok(d) => d.value,
                Err(Error::NonDifferentiable { .. }) => {
                    excluded += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let avg = w_integral(model, y, x, |w| pdf_y_dx(model, y, x, w, cfg) * model.pdf_w(w, x), &cfg.quad)?;
            worst.observe(avg, marginal, yx(y, x));
        }
    }
    let mut notes = Vec::new();
    if excluded > 0 {
        notes.push(format!("{excluded} non-differentiable grid points excluded"));
    }
    if model.support_clamped() {
        notes.push("support-clamped family: moving support edges contribute to the marginal".into());
    }
    Ok(worst.verdict(Property::DensityACollapsibility, tol, notes))
}

/// `Y ⊥ W | X`: `max |F(y|x,w) - F(y|x)|`. `X ⊥ W`: largest spread of
/// `f(w|x)` across the grid's `x` values at each grid `w`.
pub fn check_independence(
    model: &dyn ContinuousModel,
    which: Independence,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<Verdict> {
    grid.check_within(model)?;
    let mut worst = Worst::new();
    match which {
        Independence::YWGivenX => {
            for &y in &grid.ys {
                for &x in &grid.xs {
                    let m = marginal_cdf_y_given_x(model, y, x, &cfg.quad)?;
                    for &w in &grid.ws {
                        worst.observe(model.cdf_y(y, x, w), m, yxw(y, x, w));
                    }
                }
            }
            Ok(worst.verdict(Property::YIndepWGivenX, tol, Vec::new()))
        }
        Independence::XW => {
            for &w in &grid.ws {
                let dens: Vec<(f64, f64)> = grid.xs.iter().map(|&x| (x, model.pdf_w(w, x))).collect();
                let &(x_lo, lo) = dens.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("nonempty grid");
                let &(x_hi, hi) = dens.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("nonempty grid");
                worst.observe(hi, lo, |wt| {
                    wt.w(Coord::Value(w)).x(Coord::Value(x_hi)).y(Coord::Value(x_lo))
                });
            }
            let mut notes = vec!["spread of f(w|x) across grid x values; witness y holds the second x".into()];
            if grid.xs.len() < 2 {
                notes.push("single x point: the check is vacuous".into());
            }
            Ok(worst.verdict(Property::XIndepW, tol, notes))
        }
    }
}

/// Class membership and the sufficiency status; necessity does not apply
/// to continuous `W`.
pub fn condition_report(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<ConditionReport> {
    let c = DependenceField::conditional(model, grid, Kind::Distribution, cfg)?;
    let m = DependenceField::marginal(model, grid, Kind::Distribution, cfg)?;
    let homogeneity = if grid.ws.len() >= 2 {
        check_homogeneity(&c, tol)?
    } else {
        return Err(Error::HomogeneityUndefined);
    };
    Ok(ConditionReport::assemble(
        homogeneity,
        check_collapsibility_fields(&c, &m, tol),
        check_a_collapsibility_with(model, &m, tol, cfg)?,
        check_independence(model, Independence::YWGivenX, grid, tol, cfg)?,
        check_independence(model, Independence::XW, grid, tol, cfg)?,
        false,
    ))
}

pub fn membership(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<super::ClassMembership> {
    Ok(condition_report(model, grid, tol, cfg)?.membership)
}

/// Sign reversal between conditional and marginal distribution dependence
/// on the grid. Values within `tol` of zero count as zero.
pub fn detect_reversal_fields(
    conditional: &DependenceField,
    marginal: &DependenceField,
    tol: f64,
) -> ReversalReport {
    let (mut pos, mut neg) = (0, 0);
    for v in conditional.values.iter().flatten() {
        if *v > tol {
            pos += 1;
        } else if *v < -tol {
            neg += 1;
        }
    }
    let direction = Direction::from_counts(pos, neg);
    let g = &marginal.grid;
    let mut worst = Worst::new();
    let mut notes = Vec::new();
    let mut reversed = false;
    match direction {
        Direction::NonNegative | Direction::NonPositive => {
            for (iy, &y) in g.ys.iter().enumerate() {
                for (ix, &x) in g.xs.iter().enumerate() {
                    let Some(m) = marginal.get(iy, ix, 0) else { continue };
                    let against = match direction {
                        Direction::NonNegative => -m,
                        _ => m,
                    };
                    if against > tol {
                        reversed = true;
                    }
                    worst.observe_value(against.max(0.0), m, 0.0, yx(y, x));
                }
            }
        }
        Direction::Mixed => notes.push("no uniform conditional direction".into()),
        Direction::Zero => notes.push("conditional dependence is zero within tolerance".into()),
    }
    ReversalReport {
        conditional_direction: direction,
        reversed,
        verdict: worst.verdict(Property::NoReversal, tol, notes),
    }
}

pub fn detect_reversal(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<ReversalReport> {
    let c = DependenceField::conditional(model, grid, Kind::Distribution, cfg)?;
    let m = DependenceField::marginal(model, grid, Kind::Distribution, cfg)?;
    Ok(detect_reversal_fields(&c, &m, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collapse::Status;
    use crate::model::{GaussianLinear, GaussianW, UniformQuadratic, UniformShift};

    fn quadratic_grid(n: usize) -> EvalGrid {
        let ys = (0..n).map(|i| 0.01 + 0.04 * i as f64 / (n - 1) as f64).collect();
        let xs = (0..n).map(|i| 0.25 + 0.75 * i as f64 / (n - 1) as f64).collect();
        EvalGrid::new(ys, xs, vec![-0.5, 0.0, 0.5, 1.0]).unwrap()
    }

    fn interaction() -> GaussianLinear {
        GaussianLinear::linear_interaction([0.0, 1.0, 0.5, 0.8], 1.0, GaussianW::new(0.0, 1.0, 1.0)).unwrap()
    }

    fn small_grid() -> EvalGrid {
        EvalGrid::new(vec![-1.0, 0.0, 1.0], vec![-0.5, 0.5], vec![-1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn quadratic_family_residual_and_density_check() {
        let m = UniformQuadratic::default();
        let cfg = NumericConfig::default();
        let g = quadratic_grid(4);
        let r = check_residual_integral(&m, &g, 1e-6, &cfg).unwrap();
        assert!(r.holds, "{}", r.max_violation);
        let d = check_density_a_collapsibility(&m, &g, 1e-3, &cfg).unwrap();
        assert!(d.holds, "{}", d.max_violation);
        let a = check_a_collapsibility(&m, &g, 1e-3, &cfg).unwrap();
        assert!(a.holds, "{}", a.max_violation);
        assert!(!check_independence(&m, Independence::YWGivenX, &g, 1e-6, &cfg).unwrap().holds);
        assert!(!check_independence(&m, Independence::XW, &g, 1e-6, &cfg).unwrap().holds);
    }

    #[test]
    fn interaction_is_not_homogeneous_nor_a_collapsible() {
        let m = interaction();
        let cfg = NumericConfig::default();
        let g = small_grid();
        let c = DependenceField::conditional(&m, &g, Kind::Distribution, &cfg).unwrap();
        assert!(!check_homogeneity(&c, 1e-6).unwrap().holds);
        assert!(!check_residual_integral(&m, &g, 1e-6, &cfg).unwrap().holds);
        assert!(!check_density_a_collapsibility(&m, &g, 1e-6, &cfg).unwrap().holds);
        let r = condition_report(&m, &g, 1e-6, &cfg).unwrap();
        assert!(!r.membership.in_c_a);
        assert_eq!(r.sufficiency, Status::Vacuous);
        assert_eq!(r.necessity, Status::NotApplicable);
    }

    #[test]
    fn ci_family_sits_in_every_class() {
        let m = GaussianLinear::ci_yw(0.2, 1.1, 0.9, GaussianW::new(0.0, 0.8, 1.0)).unwrap();
        let cfg = NumericConfig::default();
        let r = condition_report(&m, &small_grid(), 1e-6, &cfg).unwrap();
        assert!(r.membership.in_c1 && r.membership.in_c_a && r.membership.in_c_h && r.membership.in_c_w);
        assert_eq!(r.sufficiency, Status::Consistent);
        assert!(r.notes.iter().any(|n| n.contains("W not binary")));
    }

    #[test]
    fn residual_matches_a_violation() {
        let cfg = NumericConfig::default();
        let g = small_grid();
        let m = interaction();
        let a = check_a_collapsibility(&m, &g, 1e-6, &cfg).unwrap();
        let r = check_residual_integral(&m, &g, 1e-6, &cfg).unwrap();
        assert!((a.max_violation - r.max_violation).abs() < 1e-6);
    }

    #[test]
    fn independent_w_never_reverses() {
        let m = GaussianLinear::indep_xw([0.0, 1.0, 0.7, 0.0], 1.0, 0.0, 1.0).unwrap();
        let cfg = NumericConfig::default();
        let r = detect_reversal(&m, &small_grid(), 1e-6, &cfg).unwrap();
        assert_eq!(r.conditional_direction, Direction::NonPositive);
        assert!(!r.reversed && r.verdict.holds);
    }

    #[test]
    fn shift_family_is_clamped() {
        assert_eq!(default_tolerance(&UniformShift::default()), CLAMPED_TOL);
        assert_eq!(default_tolerance(&interaction()), QUADRATURE_TOL);
    }
}
