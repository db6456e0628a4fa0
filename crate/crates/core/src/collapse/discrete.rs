//! Exact checks on contingency tables. Every comparison is made between
//! rationals; the default tolerance is zero.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{
    to_f64, ConditionReport, Coord, Direction, Property, ReversalReport, Verdict, WorstExact,
};
use crate::dependence::dist_dep_discrete;
use crate::error::{Error, Result};
use crate::model::{DiscreteJoint, WCondition};

/// Which independence condition to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Independence {
    /// `Y ⊥ W | X`
    YWGivenX,
    /// `X ⊥ W`
    XW,
}

/// Collects the descriptions of skipped zero-mass cells.
#[derive(Default)]
struct Skipped(BTreeSet<String>);

impl Skipped {
    fn take<T>(&mut self, r: Result<T>) -> Result<Option<T>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::ZeroMass { cell }) => {
                self.0.insert(cell);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn notes(self) -> Vec<String> {
        self.0
            .into_iter()
            .map(|cell| format!("skipped zero-mass conditioning event {cell}"))
            .collect()
    }
}

fn y_coord(t: &DiscreteJoint, y: usize) -> Coord {
    Coord::Level(t.levels_y()[y].clone())
}

fn x_pair(t: &DiscreteJoint, i: usize) -> Coord {
    Coord::Levels(vec![t.levels_x()[i].clone(), t.levels_x()[i + 1].clone()])
}

fn w_coord(t: &DiscreteJoint, cond: &WCondition) -> Coord {
    match cond {
        WCondition::At(w) => Coord::Level(t.levels_w()[*w].clone()),
        WCondition::Among(ws) => Coord::Levels(ws.iter().map(|&w| t.levels_w()[w].clone()).collect()),
        WCondition::Marginal => Coord::Level("*".into()),
    }
}

/// `y` levels whose CDF can differ across conditions; the last level has
/// `F = 1` everywhere.
fn y_range(t: &DiscreteJoint) -> std::ops::Range<usize> {
    0..t.dims().0.saturating_sub(1).max(1)
}

/// Conditional differences `Δ(y, i, w)` for every level `w`, `None` where a
/// conditioning cell is empty.
fn conditional_deps(t: &DiscreteJoint, skipped: &mut Skipped) -> Result<Vec<Vec<Vec<Option<BigRational>>>>> {
    let (_, nx, nw) = t.dims();
    let mut out = Vec::new();
    for y in y_range(t) {
        let mut per_y = Vec::new();
        for i in 0..nx - 1 {
            let mut per_i = Vec::new();
            for w in 0..nw {
                per_i.push(skipped.take(dist_dep_discrete(t, y, i, &WCondition::At(w)))?);
            }
            per_y.push(per_i);
        }
        out.push(per_y);
    }
    Ok(out)
}

fn marginal_deps(t: &DiscreteJoint, skipped: &mut Skipped) -> Result<Vec<Vec<Option<BigRational>>>> {
    let (_, nx, _) = t.dims();
    let mut out = Vec::new();
    for y in y_range(t) {
        let mut per_y = Vec::new();
        for i in 0..nx - 1 {
            per_y.push(skipped.take(dist_dep_discrete(t, y, i, &WCondition::Marginal))?);
        }
        out.push(per_y);
    }
    Ok(out)
}

/// Same adjacent difference at every level of `W`.
pub fn check_homogeneity(t: &DiscreteJoint, tol: f64) -> Result<Verdict> {
    let (_, nx, nw) = t.dims();
    if nw < 2 {
        return Err(Error::HomogeneityUndefined);
    }
    let mut skipped = Skipped::default();
    let deps = conditional_deps(t, &mut skipped)?;
    let mut worst = WorstExact::new();
    for (y, per_y) in deps.iter().enumerate() {
        for i in 0..nx - 1 {
            for w in 0..nw {
                for v in w + 1..nw {
                    if let (Some(a), Some(b)) = (&per_y[i][w], &per_y[i][v]) {
                        worst.observe(a, b, |wt| {
                            wt.y(y_coord(t, y))
                                .x(x_pair(t, i))
                                .w(w_coord(t, &WCondition::At(w)))
                                .w_other(w_coord(t, &WCondition::At(v)))
                        });
                    }
                }
            }
        }
    }
    Ok(worst.verdict(Property::Homogeneity, tol, skipped.notes()))
}

/// Every conditional difference equals the marginal one.
pub fn check_collapsibility(t: &DiscreteJoint, tol: f64) -> Result<Verdict> {
    let (_, nx, nw) = t.dims();
    let mut skipped = Skipped::default();
    let deps = conditional_deps(t, &mut skipped)?;
    let marg = marginal_deps(t, &mut skipped)?;
    let mut worst = WorstExact::new();
    for (y, per_y) in deps.iter().enumerate() {
        for i in 0..nx - 1 {
            let Some(m) = &marg[y][i] else { continue };
            for w in 0..nw {
                if let Some(c) = &per_y[i][w] {
                    worst.observe(c, m, |wt| {
                        wt.y(y_coord(t, y)).x(x_pair(t, i)).w(w_coord(t, &WCondition::At(w)))
                    });
                }
            }
        }
    }
    Ok(worst.verdict(Property::Collapsibility, tol, skipped.notes()))
}

/// Collapsibility after conditioning on every contiguous interval of `W`
/// levels, the full range included.
pub fn check_uniform_collapsibility(t: &DiscreteJoint, tol: f64) -> Result<Verdict> {
    let (_, nx, nw) = t.dims();
    let mut skipped = Skipped::default();
    let marg = marginal_deps(t, &mut skipped)?;
    let mut worst = WorstExact::new();
    for start in 0..nw {
        for end in start..nw {
            let cond = if start == end {
                WCondition::At(start)
            } else {
                WCondition::Among((start..=end).collect())
            };
            for y in y_range(t) {
                for i in 0..nx - 1 {
                    let Some(m) = &marg[y][i] else { continue };
                    let Some(c) = skipped.take(dist_dep_discrete(t, y, i, &cond))? else {
                        continue;
                    };
                    worst.observe(&c, m, |wt| wt.y(y_coord(t, y)).x(x_pair(t, i)).w(w_coord(t, &cond)));
                }
            }
        }
    }
    Ok(worst.verdict(Property::UniformCollapsibility, tol, skipped.notes()))
}

/// `Σ_w P(w | X = i) Δ(y, i, w) = Δ(y, i)`, averaging under the lower of the
/// two compared `X` levels.
pub fn check_a_collapsibility(t: &DiscreteJoint, tol: f64) -> Result<Verdict> {
    let (_, nx, nw) = t.dims();
    let mut skipped = Skipped::default();
    let deps = conditional_deps(t, &mut skipped)?;
    let marg = marginal_deps(t, &mut skipped)?;
    let mut worst = WorstExact::new();
    let mut notes = Vec::new();
    for (y, per_y) in deps.iter().enumerate() {
        'pairs: for i in 0..nx - 1 {
            let Some(m) = &marg[y][i] else { continue };
            let mut avg = BigRational::zero();
            for w in 0..nw {
                let weight = t.w_given_x(w, i)?;
                if weight.is_zero() {
                    continue;
                }
                match &per_y[i][w] {
                    Some(d) => avg += weight * d,
                    None => {
                        notes.push(format!(
                            "skipped y={}, x={}..{}: W={} has mass at the lower level only",
                            t.levels_y()[y],
                            t.levels_x()[i],
                            t.levels_x()[i + 1],
                            t.levels_w()[w]
                        ));
                        continue 'pairs;
                    }
                }
            }
            worst.observe(&avg, m, |wt| wt.y(y_coord(t, y)).x(x_pair(t, i)));
        }
    }
    let mut all = skipped.notes();
    all.extend(notes);
    Ok(worst.verdict(Property::ACollapsibility, tol, all))
}

/// `Y ⊥ W | X` compares `F(y|x,w)` with `F(y|x)`; `X ⊥ W` compares
/// `P(w|x)` with `P(w)`.
pub fn check_independence(t: &DiscreteJoint, which: Independence, tol: f64) -> Result<Verdict> {
    let (_, nx, nw) = t.dims();
    let mut skipped = Skipped::default();
    let mut worst = WorstExact::new();
    match which {
        Independence::YWGivenX => {
            for y in y_range(t) {
                for x in 0..nx {
                    let Some(m) = skipped.take(t.cdf(y, x, &WCondition::Marginal))? else {
                        continue;
                    };
                    for w in 0..nw {
                        let cond = WCondition::At(w);
                        if let Some(c) = skipped.take(t.cdf(y, x, &cond))? {
                            worst.observe(&c, &m, |wt| {
                                wt.y(y_coord(t, y))
                                    .x(Coord::Level(t.levels_x()[x].clone()))
                                    .w(w_coord(t, &cond))
                            });
                        }
                    }
                }
            }
            Ok(worst.verdict(Property::YIndepWGivenX, tol, skipped.notes()))
        }
        Independence::XW => {
            for x in 0..nx {
                for w in 0..nw {
                    let Some(c) = skipped.take(t.w_given_x(w, x))? else { continue };
                    let m = t.w_marginal(w);
                    worst.observe(&c, &m, |wt| {
                        wt.x(Coord::Level(t.levels_x()[x].clone())).w(w_coord(t, &WCondition::At(w)))
                    });
                }
            }
            Ok(worst.verdict(Property::XIndepW, tol, skipped.notes()))
        }
    }
}

/// Class membership and the status of both directions of the condition
/// characterisation. Necessity is only asserted for binary `W`.
pub fn condition_report(t: &DiscreteJoint, tol: f64) -> Result<ConditionReport> {
    let w_binary = t.dims().2 == 2;
    Ok(ConditionReport::assemble(
        check_homogeneity(t, tol)?,
        check_collapsibility(t, tol)?,
        check_a_collapsibility(t, tol)?,
        check_independence(t, Independence::YWGivenX, tol)?,
        check_independence(t, Independence::XW, tol)?,
        w_binary,
    ))
}

/// Class membership only.
pub fn membership(t: &DiscreteJoint, tol: f64) -> Result<super::ClassMembership> {
    Ok(condition_report(t, tol)?.membership)
}

/// Sign reversal between the conditional and the marginal differences.
///
/// The conditional differences must share one weak sign with at least one
/// strict value; a reversal is then a marginal difference of the opposite
/// strict sign. The witness is the most reversed marginal point.
pub fn detect_reversal(t: &DiscreteJoint) -> Result<ReversalReport> {
    let (_, nx, nw) = t.dims();
    let mut skipped = Skipped::default();
    let deps = conditional_deps(t, &mut skipped)?;
    let marg = marginal_deps(t, &mut skipped)?;
    let (mut pos, mut neg) = (0, 0);
    for per_y in &deps {
        for per_i in per_y.iter().take(nx - 1) {
            for d in per_i.iter().take(nw).flatten() {
                if d.is_positive() {
                    pos += 1;
                } else if d.is_negative() {
                    neg += 1;
                }
            }
        }
    }
    let direction = Direction::from_counts(pos, neg);
    let mut notes = skipped.notes();
    let mut worst = WorstExact::new();
    let zero = BigRational::zero();
    let mut reversed = false;
    match direction {
        Direction::NonNegative | Direction::NonPositive => {
            for (y, per_y) in marg.iter().enumerate() {
                for (i, m) in per_y.iter().enumerate() {
                    let Some(m) = m else { continue };
                    let against = match direction {
                        Direction::NonNegative => m.is_negative(),
                        _ => m.is_positive(),
                    };
                    if against {
                        reversed = true;
                        worst.observe(m, &zero, |wt| wt.y(y_coord(t, y)).x(x_pair(t, i)));
                    } else {
                        worst.observe(&zero, &zero, |wt| wt);
                    }
                }
            }
        }
        Direction::Mixed => notes.push("no uniform conditional direction".into()),
        Direction::Zero => notes.push("conditional dependence is identically zero".into()),
    }
    let mut verdict = worst.verdict(Property::NoReversal, 0.0, notes);
    if let Some(w) = verdict.witness.as_mut() {
        w.rhs = 0.0;
    }
    Ok(ReversalReport {
        conditional_direction: direction,
        reversed,
        verdict,
    })
}

/// Conditional and marginal differences in floating point, for reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiscreteDependence {
    pub y: String,
    pub x_from: String,
    pub x_to: String,
    /// `W` level, or `*` for the marginal difference.
    pub w: String,
    pub value: Option<f64>,
    pub exact: Option<String>,
}

/// Every conditional and marginal adjacent difference of the table.
pub fn dependence_table(t: &DiscreteJoint) -> Result<Vec<DiscreteDependence>> {
    let (_, nx, nw) = t.dims();
    let mut out = Vec::new();
    for y in y_range(t) {
        for i in 0..nx - 1 {
            let conds = (0..nw).map(WCondition::At).chain(std::iter::once(WCondition::Marginal));
            for cond in conds {
                let r = match dist_dep_discrete(t, y, i, &cond) {
                    Ok(v) => Some(v),
                    Err(Error::ZeroMass { .. }) => None,
                    Err(e) => return Err(e),
                };
                let w = match &cond {
                    WCondition::At(w) => t.levels_w()[*w].clone(),
                    _ => "*".into(),
                };
                out.push(DiscreteDependence {
                    y: t.levels_y()[y].clone(),
                    x_from: t.levels_x()[i].clone(),
                    x_to: t.levels_x()[i + 1].clone(),
                    w,
                    value: r.as_ref().map(to_f64),
                    exact: r.map(|v| v.to_string()),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collapse::Status;
    use crate::model::{LevelOrders, TableRow};

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

    fn table(counts: [i64; 8]) -> DiscreteJoint {
        // counts in [y][x][w] order for binary Y, X, W
        let mut rows = Vec::new();
        let mut k = 0;
        for y in ["1", "2"] {
            for x in ["1", "2"] {
                for w in ["1", "2"] {
                    rows.push(TableRow::new(y, x, w, counts[k]));
                    k += 1;
                }
            }
        }
        DiscreteJoint::from_rows(&rows, &LevelOrders::natural()).unwrap()
    }

    #[test]
    fn reference_table_verdicts() {
        let t = reference_table();
        let h = check_homogeneity(&t, 0.0).unwrap();
        assert!(!h.holds);
        assert!((h.max_violation - (0.625 - 25.0 / 60.0 + 0.1)).abs() < 1e-12);
        let wt = h.witness.unwrap();
        assert_eq!(wt.w, Some(Coord::Level("1".into())));
        assert_eq!(wt.w_other, Some(Coord::Level("2".into())));

        let c = check_collapsibility(&t, 0.0).unwrap();
        assert!(!c.holds);
        assert!((c.max_violation - 0.1682).abs() < 1e-3, "{}", c.max_violation);

        let a = check_a_collapsibility(&t, 0.0).unwrap();
        assert!(a.holds);
        assert_eq!(a.exact_violation.as_deref(), Some("0"));
        assert_eq!(a.max_violation, 0.0);

        assert!(check_independence(&t, Independence::XW, 0.0).unwrap().holds);
        let ci = check_independence(&t, Independence::YWGivenX, 0.0).unwrap();
        assert!(!ci.holds);
        assert!(!check_uniform_collapsibility(&t, 0.0).unwrap().holds);
    }

    #[test]
    fn reference_table_conditions() {
        let r = condition_report(&reference_table(), 0.0).unwrap();
        assert!(r.w_binary);
        assert!(r.membership.in_c2 && r.membership.in_c_a);
        assert!(!r.membership.in_c_h && !r.membership.in_c_w);
        assert_eq!(r.sufficiency, Status::Consistent);
        assert_eq!(r.necessity, Status::Consistent);
    }

    #[test]
    fn mixed_signs_are_not_a_reversal() {
        let r = detect_reversal(&reference_table()).unwrap();
        assert_eq!(r.conditional_direction, Direction::Mixed);
        assert!(!r.reversed);
        assert!(r.verdict.holds);
        assert!(r.verdict.notes.iter().any(|n| n.contains("no uniform conditional direction")));
    }

    #[test]
    fn reversal_is_flagged_with_witness() {
        // P(Y=1|X=1,W) = 10/20, 80/90 ; P(Y=1|X=2,W) = 60/110, 9/10:
        // both conditional differences of F(1|·) are positive, marginal is negative.
        let t = table([10, 80, 60, 9, 10, 10, 50, 1]);
        let d1 = dist_dep_discrete(&t, 0, 0, &WCondition::At(0)).unwrap();
        let d2 = dist_dep_discrete(&t, 0, 0, &WCondition::At(1)).unwrap();
        let dm = dist_dep_discrete(&t, 0, 0, &WCondition::Marginal).unwrap();
        assert!(d1.is_positive() && d2.is_positive() && dm.is_negative());
        let r = detect_reversal(&t).unwrap();
        assert!(r.reversed);
        assert_eq!(r.conditional_direction, Direction::NonNegative);
        let wt = r.verdict.witness.unwrap();
        assert_eq!(wt.y, Some(Coord::Level("1".into())));
        assert!((wt.lhs - to_f64(&dm)).abs() < 1e-15);
    }

    #[test]
    fn single_w_level_has_no_homogeneity() {
        let rows = [TableRow::new("a", "1", "w", 2), TableRow::new("b", "2", "w", 3)];
        let t = DiscreteJoint::from_rows(&rows, &LevelOrders::default()).unwrap();
        assert_eq!(check_homogeneity(&t, 0.0), Err(Error::HomogeneityUndefined));
    }

    #[test]
    fn zero_mass_cells_are_skipped_with_notes() {
        let t = table([5, 0, 5, 3, 5, 0, 2, 7]);
        let v = check_collapsibility(&t, 0.0).unwrap();
        assert!(v.notes.iter().any(|n| n.contains("X=1, W=2")), "{:?}", v.notes);
    }

    #[test]
    fn a_collapsible_without_either_condition_when_y_ignores_w_at_upper_level_only() {
        // At X=2, Y ⊥ W (F = 1/2 in both W cells); at X=1 it depends on W;
        // P(W|X) differs between X levels. Averaging under P(w | X = 1)
        // makes the difference vanish, yet neither condition holds.
        let t = table([2, 6, 5, 10, 8, 4, 5, 10]);
        let r = condition_report(&t, 0.0).unwrap();
        assert!(r.membership.in_c_a);
        assert!(!r.membership.in_c1 && !r.membership.in_c2);
        assert_eq!(r.necessity, Status::Violated);
    }

    #[test]
    fn dependence_table_lists_all_differences() {
        let rows = dependence_table(&reference_table()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].w, "*");
        assert_eq!(rows[1].exact.as_deref(), Some("-1/10"));
    }
}
