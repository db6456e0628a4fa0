//! Run configuration: which checks to run, on which grid, at which
//! tolerances, and how to write the report.

use std::collections::BTreeMap;

use clap::ValueEnum;
use collapse_core::model::{AxisSpec, GridSpec, LevelOrders};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Dependence,
    Decomposition,
    Homogeneity,
    Collapsibility,
    UniformCollapsibility,
    ACollapsibility,
    DensityACollapsibility,
    ResidualIntegral,
    Independence,
    Conditions,
    Reversal,
    QuantileACollapsibility,
    Cox,
    CriterionIntegral,
    WFreeTotalEffect,
    Completeness,
}

/// What a run reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Table,
    Model,
}

impl Check {
    pub fn as_str(&self) -> &'static str {
        match self {
            Check::Dependence => "dependence",
            Check::Decomposition => "decomposition",
            Check::Homogeneity => "homogeneity",
            Check::Collapsibility => "collapsibility",
            Check::UniformCollapsibility => "uniform-collapsibility",
            Check::ACollapsibility => "a-collapsibility",
            Check::DensityACollapsibility => "density-a-collapsibility",
            Check::ResidualIntegral => "residual-integral",
            Check::Independence => "independence",
            Check::Conditions => "conditions",
            Check::Reversal => "reversal",
            Check::QuantileACollapsibility => "quantile-a-collapsibility",
            Check::Cox => "cox",
            Check::CriterionIntegral => "criterion-integral",
            Check::WFreeTotalEffect => "w-free-total-effect",
            Check::Completeness => "completeness",
        }
    }

    pub const TABLE: [Check; 8] = [
        Check::Dependence,
        Check::Homogeneity,
        Check::Collapsibility,
        Check::UniformCollapsibility,
        Check::ACollapsibility,
        Check::Independence,
        Check::Conditions,
        Check::Reversal,
    ];

    pub const MODEL: [Check; 14] = [
        Check::Decomposition,
        Check::Homogeneity,
        Check::Collapsibility,
        Check::ACollapsibility,
        Check::DensityACollapsibility,
        Check::ResidualIntegral,
        Check::Independence,
        Check::Conditions,
        Check::Reversal,
        Check::QuantileACollapsibility,
        Check::Cox,
        Check::CriterionIntegral,
        Check::WFreeTotalEffect,
        Check::Completeness,
    ];

    pub fn applies_to(&self, kind: InputKind) -> bool {
        match kind {
            InputKind::Table => Check::TABLE.contains(self),
            InputKind::Model => Check::MODEL.contains(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    CsvSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Sufficiency,
    Necessity,
    Containment,
    Chain,
    Reversal,
    Cox,
    Cochran,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Sufficiency,
        Suite::Necessity,
        Suite::Containment,
        Suite::Chain,
        Suite::Reversal,
        Suite::Cox,
        Suite::Cochran,
    ];
}

fn natural_orders() -> LevelOrders {
    LevelOrders::natural()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Empty means every check that applies to the input.
    #[serde(default)]
    pub checks: Vec<Check>,
    /// Evaluation grid for continuous models; `None` is automatic.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub tolerances: BTreeMap<Check, f64>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub emit_fields: bool,
    #[serde(default = "natural_orders")]
    pub level_order: LevelOrders,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            checks: Vec::new(),
            grid: None,
            tolerances: BTreeMap::new(),
            format: OutputFormat::Json,
            seed: None,
            emit_fields: false,
            level_order: natural_orders(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Requested checks, or every applicable one. Inapplicable requests and
    /// tolerances that are not finite and nonnegative are input errors.
    pub fn resolve_checks(&self, kind: InputKind) -> Result<Vec<Check>> {
        for (check, tol) in &self.tolerances {
            if !(tol.is_finite() && *tol >= 0.0) {
                return Err(CliError::Input(format!("tolerance for {} must be finite and >= 0", check.as_str())));
            }
        }
        if self.checks.is_empty() {
            return Ok(match kind {
                InputKind::Table => Check::TABLE.to_vec(),
                InputKind::Model => Check::MODEL.to_vec(),
            });
        }
        for c in &self.checks {
            if !c.applies_to(kind) {
                let what = match kind {
                    InputKind::Table => "a discrete table",
                    InputKind::Model => "a continuous model (it needs discrete ordinal W)",
                };
                return Err(CliError::Input(format!("check {} does not apply to {what}", c.as_str())));
            }
        }
        let mut out = Vec::new();
        for c in &self.checks {
            if !out.contains(c) {
                out.push(*c);
            }
        }
        Ok(out)
    }

    pub fn tolerance(&self, check: Check, default: f64) -> f64 {
        self.tolerances.get(&check).copied().unwrap_or(default)
    }
}

/// `auto`, or `y=lo:hi:n,x=lo:hi:n,w=lo:hi:n`.
pub fn parse_grid(text: &str) -> Result<Option<GridSpec>> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    let bad = |m: String| CliError::Input(format!("grid {text:?}: {m}"));
    let mut axes: BTreeMap<&str, AxisSpec> = BTreeMap::new();
    for part in text.split(',') {
        let (name, spec) = part.split_once('=').ok_or_else(|| bad(format!("expected axis=lo:hi:n, got {part:?}")))?;
        let name = name.trim();
        let fields: Vec<&str> = spec.split(':').map(str::trim).collect();
        let [lo, hi, n] = fields[..] else {
            return Err(bad(format!("axis {name} needs lo:hi:n")));
        };
        let lo: f64 = lo.parse().map_err(|_| bad(format!("bad number {lo:?}")))?;
        let hi: f64 = hi.parse().map_err(|_| bad(format!("bad number {hi:?}")))?;
        let n: usize = n.parse().map_err(|_| bad(format!("bad count {n:?}")))?;
        if !matches!(name, "y" | "x" | "w") {
            return Err(bad(format!("unknown axis {name:?}")));
        }
        axes.insert(name, AxisSpec::new(lo, hi, n));
    }
    let take = |k: &str| axes.get(k).copied().ok_or_else(|| bad(format!("missing axis {k}")));
    Ok(Some(GridSpec {
        y: take("y")?,
        x: take("x")?,
        w: take("w")?,
    }))
}
