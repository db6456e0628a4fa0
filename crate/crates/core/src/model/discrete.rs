use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a contingency table: a `(y, x, w)` cell and its count.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub y: String,
    pub x: String,
    pub w: String,
    pub count: BigRational,
}

impl TableRow {
    pub fn new(y: impl Into<String>, x: impl Into<String>, w: impl Into<String>, count: i64) -> Self {
        TableRow {
            y: y.into(),
            x: x.into(),
            w: w.into(),
            count: BigRational::from_integer(count.into()),
        }
    }
}

/// How the levels of one variable are ordered. Order matters: CDFs, adjacent
/// differencing and interval sets of `W` all depend on it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelOrder {
    #[default]
    FirstAppearance,
    /// Numeric if every level parses as a number, lexicographic otherwise.
    Natural,
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LevelOrders {
    #[serde(default)]
    pub y: LevelOrder,
    #[serde(default)]
    pub x: LevelOrder,
    #[serde(default)]
    pub w: LevelOrder,
}

impl LevelOrders {
    pub fn natural() -> Self {
        LevelOrders {
            y: LevelOrder::Natural,
            x: LevelOrder::Natural,
            w: LevelOrder::Natural,
        }
    }
}

/// Conditioning on `W`: a single level, a set of levels, or nothing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WCondition {
    At(usize),
    Among(Vec<usize>),
    Marginal,
}

/// A nonnegative three-way table over ordered levels of `(Y, X, W)`.
///
/// Counts are stored as exact rationals so conditional probabilities and
/// their differences compare exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    levels_y: Vec<String>,
    levels_x: Vec<String>,
    levels_w: Vec<String>,
    counts: Vec<BigRational>,
    total: BigRational,
}

/// Builds a table from rows, ordering levels by first appearance.
pub fn build_discrete_joint(rows: &[TableRow]) -> Result<DiscreteJoint> {
    DiscreteJoint::from_rows(rows, &LevelOrders::default())
}

/// Parses a decimal count such as `12`, `2.5` or `1e3` into an exact rational.
pub fn parse_count(text: &str) -> Option<BigRational> {
    let s = text.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(numer);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

fn order_levels(seen: Vec<String>, order: &LevelOrder, axis: &'static str) -> Result<Vec<String>> {
    match order {
        LevelOrder::FirstAppearance => Ok(seen),
        LevelOrder::Natural => {
            let mut levels = seen;
            let numeric: Option<Vec<f64>> = levels.iter().map(|l| l.trim().parse().ok()).collect();
            if numeric.is_some() {
                levels.sort_by(|a, b| {
                    let (a, b): (f64, f64) = (a.trim().parse().unwrap(), b.trim().parse().unwrap());
                    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
                });
            } else {
                levels.sort();
            }
            Ok(levels)
        }
        LevelOrder::Explicit(explicit) => {
            if let Some(missing) = seen.iter().find(|l| !explicit.contains(l)) {
                return Err(Error::UnknownLevel {
                    axis,
                    level: missing.clone(),
                });
            }
            Ok(explicit.clone())
        }
    }
}

fn first_appearance<'a>(names: impl Iterator<Item = &'a String>) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for n in names {
        if !seen.contains(n) {
            seen.push(n.clone());
        }
    }
    seen
}

impl DiscreteJoint {
    /// Builds a table from rows. Duplicate cells are summed; missing cells are zero.
    pub fn from_rows(rows: &[TableRow], orders: &LevelOrders) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.count.is_negative() {
                return Err(Error::NegativeCount {
                    row: i + 1,
                    count: row.count.to_string(),
                });
            }
        }
        let levels_y = order_levels(first_appearance(rows.iter().map(|r| &r.y)), &orders.y, "Y")?;
        let levels_x = order_levels(first_appearance(rows.iter().map(|r| &r.x)), &orders.x, "X")?;
        let levels_w = order_levels(first_appearance(rows.iter().map(|r| &r.w)), &orders.w, "W")?;

        let index = |levels: &[String]| -> HashMap<String, usize> {
            levels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect()
        };
        let (iy, ix, iw) = (index(&levels_y), index(&levels_x), index(&levels_w));
        let (nx, nw) = (levels_x.len(), levels_w.len());
        let mut counts = vec![BigRational::zero(); levels_y.len() * nx * nw];
        for row in rows {
            let cell = (iy[&row.y] * nx + ix[&row.x]) * nw + iw[&row.w];
            counts[cell] += &row.count;
        }
        DiscreteJoint::from_counts(levels_y, levels_x, levels_w, counts)
    }

    /// Builds a table from a dense `[y][x][w]` count array.
    pub fn from_counts(
        levels_y: Vec<String>,
        levels_x: Vec<String>,
        levels_w: Vec<String>,
        counts: Vec<BigRational>,
    ) -> Result<Self> {
        if levels_x.len() < 2 {
            return Err(Error::TooFewLevels {
                axis: "X",
                needed: 2,
                found: levels_x.len(),
            });
        }
        if levels_y.is_empty() || levels_w.is_empty() {
            return Err(Error::TooFewLevels {
                axis: if levels_y.is_empty() { "Y" } else { "W" },
                needed: 1,
                found: 0,
            });
        }
        let expected = levels_y.len() * levels_x.len() * levels_w.len();
        if counts.len() != expected {
            return Err(Error::InvalidModel(format!(
                "expected {expected} cells, got {}",
                counts.len()
            )));
        }
        if let Some(i) = counts.iter().position(|c| c.is_negative()) {
            return Err(Error::NegativeCount {
                row: i + 1,
                count: counts[i].to_string(),
            });
        }
        let total: BigRational = counts.iter().sum();
        if total.is_zero() {
            return Err(Error::ZeroTotal);
        }
        Ok(DiscreteJoint {
            levels_y,
            levels_x,
            levels_w,
            counts,
            total,
        })
    }

    pub fn levels_y(&self) -> &[String] {
        &self.levels_y
    }
    pub fn levels_x(&self) -> &[String] {
        &self.levels_x
    }
    pub fn levels_w(&self) -> &[String] {
        &self.levels_w
    }
    pub fn total(&self) -> &BigRational {
        &self.total
    }
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.levels_y.len(), self.levels_x.len(), self.levels_w.len())
    }

    pub fn count(&self, y: usize, x: usize, w: usize) -> &BigRational {
        let (_, nx, nw) = self.dims();
        &self.counts[(y * nx + x) * nw + w]
    }

    /// Joint probability of the cell `(y, x, w)`.
    pub fn pmf(&self, y: usize, x: usize, w: usize) -> BigRational {
        self.count(y, x, w) / &self.total
    }

    pub fn w_levels_of(&self, cond: &WCondition) -> Vec<usize> {
        match cond {
            WCondition::At(w) => vec![*w],
            WCondition::Among(ws) => ws.clone(),
            WCondition::Marginal => (0..self.levels_w.len()).collect(),
        }
    }

    /// Human-readable description of the conditioning event `X = x, W ∈ cond`.
    pub fn describe(&self, x: usize, cond: &WCondition) -> String {
        let xs = &self.levels_x[x];
        match cond {
            WCondition::At(w) => format!("X={xs}, W={}", self.levels_w[*w]),
            WCondition::Among(ws) => {
                let names: Vec<&str> = ws.iter().map(|&w| self.levels_w[w].as_str()).collect();
                format!("X={xs}, W in {{{}}}", names.join(","))
            }
            WCondition::Marginal => format!("X={xs}"),
        }
    }

    fn mass_where(&self, ys: impl Iterator<Item = usize> + Clone, x: usize, cond: &WCondition) -> BigRational {
        let ws = self.w_levels_of(cond);
        let mut sum = BigRational::zero();
        for y in ys {
            for &w in &ws {
                sum += self.count(y, x, w);
            }
        }
        sum
    }

    /// Total count of the conditioning event `X = x, W ∈ cond`.
    pub fn mass(&self, x: usize, cond: &WCondition) -> BigRational {
        self.mass_where(0..self.levels_y.len(), x, cond)
    }

    /// `P(Y ∈ event | X = x, W ∈ cond)`, exactly.
    pub fn conditional_prob(&self, event: &[usize], x: usize, cond: &WCondition) -> Result<BigRational> {
        let denom = self.mass(x, cond);
        if denom.is_zero() {
            return Err(Error::ZeroMass {
                cell: self.describe(x, cond),
            });
        }
        Ok(self.mass_where(event.iter().copied(), x, cond) / denom)
    }

    /// `P(Y ≤ y | X = x, W ∈ cond)` under the level order of `Y`.
    pub fn cdf(&self, y: usize, x: usize, cond: &WCondition) -> Result<BigRational> {
        let denom = self.mass(x, cond);
        if denom.is_zero() {
            return Err(Error::ZeroMass {
                cell: self.describe(x, cond),
            });
        }
        Ok(self.mass_where(0..=y, x, cond) / denom)
    }

    /// `P(W = w | X = x)`.
    pub fn w_given_x(&self, w: usize, x: usize) -> Result<BigRational> {
        let denom = self.mass(x, &WCondition::Marginal);
        if denom.is_zero() {
            return Err(Error::ZeroMass {
                cell: format!("X={}", self.levels_x[x]),
            });
        }
        Ok(self.mass(x, &WCondition::At(w)) / denom)
    }

    /// `P(W = w)`.
    pub fn w_marginal(&self, w: usize) -> BigRational {
        let mut sum = BigRational::zero();
        for x in 0..self.levels_x.len() {
            sum += self.mass(x, &WCondition::At(w));
        }
        sum / &self.total
    }

    pub fn level_index(&self, axis: &'static str, level: &str) -> Result<usize> {
        let levels = match axis {
            "Y" => &self.levels_y,
            "X" => &self.levels_x,
            _ => &self.levels_w,
        };
        levels
            .iter()
            .position(|l| l == level)
            .ok_or_else(|| Error::UnknownLevel {
                axis,
                level: level.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, ToPrimitive};

    pub(crate) fn reference_rows() -> Vec<TableRow> {
        vec![
            TableRow::new("1", "1", "1", 25),
            TableRow::new("1", "1", "2", 35),
            TableRow::new("1", "2", "1", 75),
            TableRow::new("1", "2", "2", 60),
            TableRow::new("2", "1", "1", 35),
            TableRow::new("2", "1", "2", 15),
            TableRow::new("2", "2", "1", 45),
            TableRow::new("2", "2", "2", 40),
        ]
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn reference_table_total() {
        let t = build_discrete_joint(&reference_rows()).unwrap();
        assert_eq!(t.total(), &q(330, 1));
        assert_eq!(t.dims(), (2, 2, 2));
    }

    #[test]
    fn reference_conditionals() {
        let t = build_discrete_joint(&reference_rows()).unwrap();
        let p = t.conditional_prob(&[0], 1, &WCondition::At(0)).unwrap();
        assert_eq!(p, q(75, 120));
        assert_eq!(p.to_f64().unwrap(), 0.625);
        let p = t.conditional_prob(&[0], 0, &WCondition::Marginal).unwrap();
        assert_eq!(p, q(60, 110));
        assert!((p.to_f64().unwrap() - 0.5455).abs() < 1e-4);
        let all = t.conditional_prob(&[0, 1], 0, &WCondition::Marginal).unwrap();
        assert!(all.is_one());
    }

    #[test]
    fn w_given_x_matches_margin() {
        let t = build_discrete_joint(&reference_rows()).unwrap();
        assert_eq!(t.w_given_x(0, 0).unwrap(), q(6, 11));
        assert_eq!(t.w_given_x(0, 1).unwrap(), q(6, 11));
        assert_eq!(t.w_marginal(0), q(180, 330));
    }

    #[test]
    fn single_x_level_rejected() {
        let err = build_discrete_joint(&[TableRow::new("1", "1", "1", 5)]).unwrap_err();
        assert_eq!(
            err,
            Error::TooFewLevels {
                axis: "X",
                needed: 2,
                found: 1
            }
        );
    }

    #[test]
    fn duplicates_are_summed() {
        let rows = vec![
            TableRow::new("1", "1", "1", 2),
            TableRow::new("1", "1", "1", 3),
            TableRow::new("1", "2", "1", 0),
        ];
        let t = build_discrete_joint(&rows).unwrap();
        assert_eq!(t.count(0, 0, 0), &q(5, 1));
        assert_eq!(t.total(), &q(5, 1));
    }

    #[test]
    fn negative_and_zero_tables_rejected() {
        let mut rows = reference_rows();
        rows[3].count = q(-1, 1);
        assert!(matches!(
            build_discrete_joint(&rows),
            Err(Error::NegativeCount { row: 4, .. })
        ));
        let zeros = vec![TableRow::new("1", "1", "1", 0), TableRow::new("1", "2", "1", 0)];
        assert_eq!(build_discrete_joint(&zeros), Err(Error::ZeroTotal));
    }

    #[test]
    fn zero_mass_condition_is_an_error() {
        let rows = vec![
            TableRow::new("1", "1", "1", 4),
            TableRow::new("1", "2", "2", 3),
            TableRow::new("2", "2", "1", 1),
        ];
        let t = build_discrete_joint(&rows).unwrap();
        let err = t.cdf(0, 0, &WCondition::At(1)).unwrap_err();
        assert_eq!(
            err,
            Error::ZeroMass {
                cell: "X=1, W=2".into()
            }
        );
    }

    #[test]
    fn natural_and_explicit_orders() {
        let rows = vec![
            TableRow::new("10", "b", "1", 1),
            TableRow::new("9", "a", "1", 1),
        ];
        let t = DiscreteJoint::from_rows(&rows, &LevelOrders::natural()).unwrap();
        assert_eq!(t.levels_y(), ["9", "10"]);
        assert_eq!(t.levels_x(), ["a", "b"]);
        let orders = LevelOrders {
            x: LevelOrder::Explicit(vec!["b".into(), "a".into()]),
            ..LevelOrders::default()
        };
        let t = DiscreteJoint::from_rows(&rows, &orders).unwrap();
        assert_eq!(t.levels_x(), ["b", "a"]);
        let orders = LevelOrders {
            x: LevelOrder::Explicit(vec!["b".into()]),
            ..LevelOrders::default()
        };
        assert!(matches!(
            DiscreteJoint::from_rows(&rows, &orders),
            Err(Error::UnknownLevel { axis: "X", .. })
        ));
    }

    #[test]
    fn decimal_counts_parse_exactly() {
        assert_eq!(parse_count("25"), Some(q(25, 1)));
        assert_eq!(parse_count("2.5"), Some(q(5, 2)));
        assert_eq!(parse_count(" 1e3 "), Some(q(1000, 1)));
        assert_eq!(parse_count("1.25E-1"), Some(q(1, 8)));
        assert_eq!(parse_count("-4"), Some(q(-4, 1)));
        assert_eq!(parse_count(".5"), Some(q(1, 2)));
        assert_eq!(parse_count("abc"), None);
        assert_eq!(parse_count(""), None);
        assert_eq!(parse_count("1.2.3"), None);
    }

    #[test]
    fn conditionals_sum_to_one_exactly() {
        let t = build_discrete_joint(&reference_rows()).unwrap();
        for x in 0..2 {
            for cond in [WCondition::At(0), WCondition::At(1), WCondition::Marginal] {
                let sum: BigRational = (0..2)
                    .map(|y| t.conditional_prob(&[y], x, &cond).unwrap())
                    .sum();
                assert!(sum.is_one());
            }
        }
    }
}
