//! Verdict engine for homogeneity, collapsibility, uniform collapsibility
//! and A-collapsibility of the distribution dependence function, the two
//! independence conditions, class membership and reversal detection.

pub mod continuous;
pub mod discrete;
pub mod generate;
pub mod suite;

pub use discrete::Independence;

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Property a [`Verdict`] speaks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Homogeneity,
    Collapsibility,
    UniformCollapsibility,
    ACollapsibility,
    DensityACollapsibility,
    ResidualIntegral,
    /// `Y ⊥ W | X`
    YIndepWGivenX,
    /// `X ⊥ W`
    XIndepW,
    NoReversal,
    QuantileACollapsibility,
    CriterionIntegral,
    CoxIdentity,
    /// `q_x(y|x) = δ(y|x,w)` wherever `δ` is free of `w`.
    WFreeTotalEffect,
    /// Slope of the quantile curve against the quantile coefficient.
    QuantileSlope,
}

impl Property {
    pub fn as_str(&self) -> &'static str {
        match self {
            Property::Homogeneity => "homogeneity",
            Property::Collapsibility => "collapsibility",
            Property::UniformCollapsibility => "uniform-collapsibility",
            Property::ACollapsibility => "a-collapsibility",
            Property::DensityACollapsibility => "density-a-collapsibility",
            Property::ResidualIntegral => "residual-integral",
            Property::YIndepWGivenX => "y-indep-w-given-x",
            Property::XIndepW => "x-indep-w",
            Property::NoReversal => "no-reversal",
            Property::QuantileACollapsibility => "quantile-a-collapsibility",
            Property::CriterionIntegral => "criterion-integral",
            Property::CoxIdentity => "cox-identity",
            Property::WFreeTotalEffect => "w-free-total-effect",
            Property::QuantileSlope => "quantile-slope",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One coordinate of a witness: a numeric point, a level, or a level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Value(f64),
    Level(String),
    Levels(Vec<String>),
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Value(v) => write!(f, "{v}"),
            Coord::Level(l) => f.write_str(l),
            Coord::Levels(ls) => write!(f, "{{{}}}", ls.join(",")),
        }
    }
}

/// Grid point attaining the largest violation, with both sides of the
/// compared identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Coord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Coord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Coord>,
    /// Second `W` point of a pairwise comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_other: Option<Coord>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Witness {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Witness {
            y: None,
            x: None,
            w: None,
            w_other: None,
            lhs,
            rhs,
        }
    }

    pub fn y(mut self, c: Coord) -> Self {
        self.y = Some(c);
        self
    }
    pub fn x(mut self, c: Coord) -> Self {
        self.x = Some(c);
        self
    }
    pub fn w(mut self, c: Coord) -> Self {
        self.w = Some(c);
        self
    }
    pub fn w_other(mut self, c: Coord) -> Self {
        self.w_other = Some(c);
        self
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (name, c) in [("y", &self.y), ("x", &self.x), ("w", &self.w), ("w'", &self.w_other)] {
            if let Some(c) = c {
                parts.push(format!("{name}={c}"));
            }
        }
        write!(f, "{} (lhs {:.6}, rhs {:.6})", parts.join(", "), self.lhs, self.rhs)
    }
}

/// Outcome of one check over a grid or a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub property: Property,
    pub holds: bool,
    pub max_violation: f64,
    /// Exact violation of a rational computation, as `p/q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_violation: Option<String>,
    /// Present exactly when the property fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub tolerance: f64,
    /// Points at which the compared identity was evaluated.
    pub points: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn witness_text(&self) -> String {
        self.witness.as_ref().map(|w| w.to_string()).unwrap_or_default()
    }
}

/// Running maximum of a floating-point violation.
#[derive(Debug, Clone, Default)]
pub struct Worst {
    value: f64,
    witness: Option<Witness>,
    points: usize,
}

impl Worst {
    pub fn new() -> Self {
        Worst::default()
    }

    /// Records `|lhs - rhs|`; the witness is built lazily for new maxima.
    pub fn observe(&mut self, lhs: f64, rhs: f64, witness: impl FnOnce(Witness) -> Witness) {
        self.observe_value((lhs - rhs).abs(), lhs, rhs, witness);
    }

    pub fn observe_value(
        &mut self,
        violation: f64,
        lhs: f64,
        rhs: f64,
        witness: impl FnOnce(Witness) -> Witness,
    ) {
        self.points += 1;
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        if self.witness.is_none() || violation > self.value {
            self.value = violation;
            self.witness = Some(witness(Witness::new(lhs, rhs)));
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn verdict(self, property: Property, tolerance: f64, notes: Vec<String>) -> Verdict {
        let holds = self.value <= tolerance;
        Verdict {
            property,
            holds,
            max_violation: self.value,
            exact_violation: None,
            witness: if holds { None } else { self.witness },
            tolerance,
            points: self.points,
            notes,
        }
    }
}

/// Running maximum of an exact rational violation.
#[derive(Debug, Clone)]
pub struct WorstExact {
    value: BigRational,
    witness: Option<Witness>,
    points: usize,
}

impl Default for WorstExact {
    fn default() -> Self {
        WorstExact {
            value: BigRational::zero(),
            witness: None,
            points: 0,
        }
    }
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl WorstExact {
    pub fn new() -> Self {
        WorstExact::default()
    }

    pub fn observe(&mut self, lhs: &BigRational, rhs: &BigRational, witness: impl FnOnce(Witness) -> Witness) {
        self.points += 1;
        let diff = (lhs - rhs).abs();
        if self.witness.is_none() || diff > self.value {
            self.value = diff;
            self.witness = Some(witness(Witness::new(to_f64(lhs), to_f64(rhs))));
        }
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    /// `holds` compares the exact violation with `tolerance` read as an
    /// exact rational, so a zero tolerance demands exact equality.
    pub fn verdict(self, property: Property, tolerance: f64, notes: Vec<String>) -> Verdict {
        let tol = BigRational::from_float(tolerance.max(0.0)).unwrap_or_else(BigRational::zero);
        let holds = self.value <= tol;
        Verdict {
            property,
            holds,
            max_violation: to_f64(&self.value),
            exact_violation: Some(self.value.to_string()),
            witness: if holds { None } else { self.witness },
            tolerance,
            points: self.points,
            notes,
        }
    }
}

/// Membership of a model in the classes compared by the containment result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMembership {
    /// Homogeneous over `W`.
    pub in_c_h: bool,
    /// Collapsible over `W`.
    pub in_c_w: bool,
    /// A-collapsible over `W`.
    pub in_c_a: bool,
    /// `Y ⊥ W | X`
    pub in_c1: bool,
    /// `X ⊥ W`
    pub in_c2: bool,
}

impl ClassMembership {
    /// Collapsible models must be homogeneous and A-collapsible.
    pub fn containment_ok(&self) -> bool {
        !self.in_c_w || (self.in_c_h && self.in_c_a)
    }

    /// With binary `W`, homogeneous and A-collapsible models are collapsible.
    pub fn binary_equality_ok(&self) -> bool {
        !(self.in_c_h && self.in_c_a) || self.in_c_w
    }
}

/// Logical status of one direction of the sufficiency / necessity result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Premise true and conclusion true.
    Consistent,
    /// Premise true, conclusion false: an internal inconsistency.
    Violated,
    /// Premise false.
    Vacuous,
    /// The direction does not apply (necessity with non-binary `W`).
    NotApplicable,
}

/// Class membership together with the status of both directions of the
/// "`Y ⊥ W | X` or `W ⊥ X`" characterisation of A-collapsibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub membership: ClassMembership,
    pub w_binary: bool,
    pub sufficiency: Status,
    pub necessity: Status,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub verdicts: Vec<Verdict>,
}

impl ConditionReport {
    pub(crate) fn assemble(
        homogeneity: Verdict,
        collapsibility: Verdict,
        a: Verdict,
        c1: Verdict,
        c2: Verdict,
        w_binary: bool,
    ) -> Self {
        let membership = ClassMembership {
            in_c_h: homogeneity.holds,
            in_c_w: collapsibility.holds,
            in_c_a: a.holds,
            in_c1: c1.holds,
            in_c2: c2.holds,
        };
        let condition = membership.in_c1 || membership.in_c2;
        let sufficiency = match (condition, membership.in_c_a) {
            (false, _) => Status::Vacuous,
            (true, true) => Status::Consistent,
            (true, false) => Status::Violated,
        };
        let mut notes = Vec::new();
        let necessity = if !w_binary {
            notes.push("necessity does not apply: W not binary".to_string());
            Status::NotApplicable
        } else {
            match (membership.in_c_a, condition) {
                (false, _) => Status::Vacuous,
                (true, true) => Status::Consistent,
                (true, false) => Status::Violated,
            }
        };
        if sufficiency == Status::Violated {
            notes.push("inconsistency: a sufficient condition holds but A-collapsibility fails".into());
        }
        if necessity == Status::Violated {
            notes.push("inconsistency: A-collapsible with binary W but neither condition holds".into());
        }
        ConditionReport {
            membership,
            w_binary,
            sufficiency,
            necessity,
            notes,
            verdicts: vec![homogeneity, collapsibility, a, c1, c2],
        }
    }
}

/// Sign pattern of the conditional dependence over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `≥ 0` everywhere, `> 0` somewhere.
    NonNegative,
    /// `≤ 0` everywhere, `< 0` somewhere.
    NonPositive,
    /// Identically zero.
    Zero,
    /// Both signs occur.
    Mixed,
}

impl Direction {
    pub(crate) fn from_counts(positive: usize, negative: usize) -> Self {
        match (positive > 0, negative > 0) {
            (true, true) => Direction::Mixed,
            (true, false) => Direction::NonNegative,
            (false, true) => Direction::NonPositive,
            (false, false) => Direction::Zero,
        }
    }
}

/// Reversal check: the verdict is on the property "no reversal", so a
/// reversal shows up as `holds = false` with the reversing marginal point
/// as witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversalReport {
    pub conditional_direction: Direction,
    pub reversed: bool,
    pub verdict: Verdict,
}

/// Per-model membership rows plus the containment checks over the batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub rows: Vec<LatticeRow>,
    /// Models in `C^W` but outside `C_H ∩ C_A`.
    pub containment_violations: Vec<String>,
    /// Binary-`W` models in `C_H ∩ C_A` but outside `C^W`.
    pub binary_equality_violations: Vec<String>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRow {
    pub name: String,
    pub w_binary: bool,
    pub membership: ClassMembership,
}

/// Tabulates memberships and evaluates the containments over a batch.
/// Failed analyses are listed in `errors` and do not stop the batch.
pub fn class_lattice<I>(models: I) -> LatticeReport
where
    I: IntoIterator<Item = (String, bool, crate::Result<ClassMembership>)>,
{
    let mut report = LatticeReport {
        rows: Vec::new(),
        containment_violations: Vec::new(),
        binary_equality_violations: Vec::new(),
        errors: Vec::new(),
    };
    for (name, w_binary, membership) in models {
        match membership {
            Ok(m) => {
                if !m.containment_ok() {
                    report.containment_violations.push(name.clone());
                }
                if w_binary && !m.binary_equality_ok() {
                    report.binary_equality_violations.push(name.clone());
                }
                report.rows.push(LatticeRow {
                    name,
                    w_binary,
                    membership: m,
                });
            }
            Err(e) => report.errors.push(format!("{name}: {e}")),
        }
    }
    report
}
