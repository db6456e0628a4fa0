//! Command implementations behind the `collapse-kit` binary. Each command
//! reads its input, runs the requested checks and returns a [`Report`].

pub mod config;
pub mod error;
pub mod input;
pub mod report;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use collapse_core::collapse::{continuous, discrete, suite, Independence};
use collapse_core::dependence::{decomposition_terms, dist_dep_continuous, DependenceField, Kind, WPoint};
use collapse_core::model::{ContinuousModel, DiscreteJoint, EvalGrid, ModelConfig};
use collapse_core::numerics::NumericConfig;
use collapse_core::quantile::{self, cochran_decompose, cochran_from_sample, QuantileProfile};
use serde::Serialize;
use serde_json::json;

pub use config::{Check, InputKind, OutputFormat, RunConfig, Suite};
pub use error::{CliError, Result};
pub use input::CochranInput;
pub use report::{Fingerprint, Report};

const EXACT: &str = "exact-rational";
const QUANTILE_TOL: f64 = 1e-5;
const CRITERION_TOL: f64 = 1e-6;

fn dims3(y: usize, x: usize, w: usize) -> BTreeMap<String, usize> {
    [("Y", y), ("X", x), ("W", w)].into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn finish(mut report: Report, start: Instant) -> Report {
    report.timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

/// Discrete checks on a long-format CSV table.
pub fn cmd_table(path: &Path, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let bytes = input::read_bytes(path)?;
    let table = input::parse_table(&bytes, path, &cfg.level_order)?;
    let checks = cfg.resolve_checks(InputKind::Table)?;
    let (ny, nx, nw) = table.dims();
    let fp = Fingerprint::of(&bytes, dims3(ny, nx, nw), describe_table(&table));
    let mut report = Report::new("table", fp, cfg.clone());
    run_table_checks(&mut report, &table, &checks, cfg);
    if cfg.emit_fields {
        report.fields = discrete::dependence_table(&table)
            .ok()
            .map(|d| json!({ "dependence": d }));
    }
    Ok(finish(report, start))
}

fn describe_table(t: &DiscreteJoint) -> String {
    format!(
        "Y levels {:?}, X levels {:?}, W levels {:?}, total {}",
        t.levels_y(),
        t.levels_x(),
        t.levels_w(),
        t.total()
    )
}

/// Runs table checks into `report`; exact arithmetic, tolerance 0 unless
/// overridden.
pub fn run_table_checks(report: &mut Report, t: &DiscreteJoint, checks: &[Check], cfg: &RunConfig) {
    for &check in checks {
        let tol = cfg.tolerance(check, 0.0);
        let name = check.as_str();
        match check {
            Check::Dependence => report.run(name, EXACT, None, || discrete::dependence_table(t)),
            Check::Homogeneity => report.run(name, EXACT, Some(tol), || discrete::check_homogeneity(t, tol)),
            Check::Collapsibility => report.run(name, EXACT, Some(tol), || discrete::check_collapsibility(t, tol)),
            Check::UniformCollapsibility => {
                report.run(name, EXACT, Some(tol), || discrete::check_uniform_collapsibility(t, tol))
            }
            Check::ACollapsibility => report.run(name, EXACT, Some(tol), || discrete::check_a_collapsibility(t, tol)),
            Check::Independence => report.run(name, EXACT, Some(tol), || {
                Ok(vec![
                    discrete::check_independence(t, Independence::YWGivenX, tol)?,
                    discrete::check_independence(t, Independence::XW, tol)?,
                ])
            }),
            Check::Conditions => report.run(name, EXACT, Some(tol), || discrete::condition_report(t, tol)),
            Check::Reversal => report.run(name, EXACT, None, || discrete::detect_reversal(t)),
            _ => unreachable!("resolve_checks filters model-only checks"),
        }
    }
}

/// Largest gap between `∂F(y|x)/∂x` and the sum of its two decomposition
/// terms, with the terms themselves.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub holds: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    pub points: usize,
    /// `(y, x, averaged term, mixing term, marginal dependence)`.
    pub terms: Vec<[f64; 5]>,
}

pub fn decomposition(
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    tol: f64,
    cfg: &NumericConfig,
) -> collapse_core::Result<DecompositionReport> {
    grid.check_within(model)?;
    let mut terms = Vec::new();
    let mut worst: f64 = 0.0;
    for &y in &grid.ys {
        for &x in &grid.xs {
            let (a, r) = decomposition_terms(model, y, x, cfg)?;
            let m = dist_dep_continuous(model, y, x, WPoint::Marginal, cfg)?.value;
            worst = worst.max((m - a - r).abs());
            terms.push([y, x, a, r, m]);
        }
    }
    Ok(DecompositionReport {
        holds: worst <= tol,
        max_violation: worst,
        tolerance: tol,
        points: terms.len(),
        terms,
    })
}

/// Continuous checks on a model configuration file.
pub fn cmd_model(path: &Path, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let bytes = input::read_bytes(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    let model_cfg = ModelConfig::from_json(&text)?;
    let model = model_cfg.build()?;
    let checks = cfg.resolve_checks(InputKind::Model)?;
    let grid = match cfg.grid.or(model_cfg.eval_grid) {
        Some(spec) => EvalGrid::from_spec(&spec)?,
        None => EvalGrid::auto(model.as_ref())?,
    };
    grid.check_within(model.as_ref())?;
    let fp = Fingerprint::of(
        &bytes,
        dims3(grid.ys.len(), grid.xs.len(), grid.ws.len()),
        format!("family {}", model.family().as_str()),
    );
    let mut report = Report::new("model", fp, cfg.clone());
    run_model_checks(&mut report, model.as_ref(), &grid, &checks, cfg, &NumericConfig::default());
    if cfg.emit_fields {
        report.fields = Some(model_fields(model.as_ref(), &grid));
    }
    Ok(finish(report, start))
}

fn model_fields(model: &dyn ContinuousModel, grid: &EvalGrid) -> serde_json::Value {
    let num = NumericConfig::default();
    let show = |r: collapse_core::Result<serde_json::Value>| r.unwrap_or_else(|e| json!({ "error": e.to_string() }));
    json!({
        "conditional": show(DependenceField::conditional(model, grid, Kind::Distribution, &num).map(|f| json!(f))),
        "marginal": show(DependenceField::marginal(model, grid, Kind::Distribution, &num).map(|f| json!(f))),
        "quantile_profile": show(QuantileProfile::compute(model, grid, &num).map(|p| json!(p))),
    })
}

pub fn run_model_checks(
    report: &mut Report,
    model: &dyn ContinuousModel,
    grid: &EvalGrid,
    checks: &[Check],
    cfg: &RunConfig,
    num: &NumericConfig,
) {
    let dist_tol = continuous::default_tolerance(model);
    let density_tol = if model.support_clamped() { continuous::CLAMPED_TOL } else { 1e-5 };
    let method = model.partials_method().as_str();
    let quad = format!("quadrature+{method}");
    for &check in checks {
        let name = check.as_str();
        match check {
            Check::Decomposition => {
                let tol = cfg.tolerance(check, dist_tol);
                report.run(name, &quad, Some(tol), || decomposition(model, grid, tol, num))
            }
            Check::Homogeneity => {
                let tol = cfg.tolerance(check, dist_tol);
                report.run(name, method, Some(tol), || {
                    continuous::check_homogeneity(&DependenceField::conditional(model, grid, Kind::Distribution, num)?, tol)
                })
            }
            Check::Collapsibility => {
                let tol = cfg.tolerance(check, dist_tol);
                report.run(name, &quad, Some(tol), || continuous::check_collapsibility(model, grid, tol, num))
            }
            Check::ACollapsibility => {
                let tol = cfg.tolerance(check, dist_tol);
                report.run(name, &quad, Some(tol), || continuous::check_a_collapsibility(model, grid, tol, num))
            }
            Check::DensityACollapsibility => {
                let tol = cfg.tolerance(check, density_tol);
                report.run(name, &quad, Some(tol), || continuous::check_density_a_collapsibility(model, grid, tol, num))
            }
            Check::ResidualIntegral => {
                let tol = cfg.tolerance(check, dist_tol);
                report.run(name, &quad, Some(tol), || continuous::check_residual_integral(model, grid, tol, num))
            }
            Check::Independence => {
                let tol = cfg.tolerance(check, dist_tol);
                report.run(name, &quad, Some(tol), || {
                    Ok(vec![
                        continuous::check_independence(model, Independence::YWGivenX, grid, tol, num)?,
                        continuous::check_independence(model, Independence::XW, grid, tol, num)?,
                    ])
                })
            }
            Check::Conditions => {
                let tol = cfg.tolerance(check, dist_tol);
                report.run(name, &quad, Some(tol), || continuous::condition_report(model, grid, tol, num))
            }
            Check::Reversal => {
                let tol = cfg.tolerance(check, dist_tol);
                report.run(name, &quad, Some(tol), || continuous::detect_reversal(model, grid, tol, num))
            }
            Check::QuantileACollapsibility => {
                let tol = cfg.tolerance(check, QUANTILE_TOL);
                report.run(name, &quad, Some(tol), || quantile::check_a_collapsibility_quantile(model, grid, tol, num))
            }
            Check::Cox => {
                let tol = cfg.tolerance(check, QUANTILE_TOL);
                report.run(name, &quad, Some(tol), || quantile::check_cox_identity(model, grid, tol, num))
            }
            Check::CriterionIntegral => {
                let tol = cfg.tolerance(check, CRITERION_TOL);
                report.run(name, &quad, Some(tol), || quantile::check_criterion_integral(model, grid, tol, num))
            }
            Check::WFreeTotalEffect => {
                let tol = cfg.tolerance(check, QUANTILE_TOL);
                report.run(name, &quad, Some(tol), || quantile::check_w_free_total_effect(model, grid, tol, num))
            }
            Check::Completeness => {
                let tol = cfg.tolerance(check, QUANTILE_TOL);
                report.run(name, &quad, Some(tol), || quantile::completeness_check(model, grid, tol, num))
            }
            _ => unreachable!("resolve_checks filters table-only checks"),
        }
    }
}

/// Cochran decomposition from a covariance matrix (`.json`) or a CSV sample.
pub fn cmd_cochran(path: &Path, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let bytes = input::read_bytes(path)?;
    let parsed = input::parse_cochran(&bytes, path)?;
    let (dims, description) = match &parsed {
        CochranInput::Covariance(_) => (BTreeMap::from([("matrix".to_string(), 3)]), "covariance matrix".to_string()),
        CochranInput::Sample(rows) => (BTreeMap::from([("rows".to_string(), rows.len())]), "sample".to_string()),
    };
    let mut report = Report::new("cochran", Fingerprint::of(&bytes, dims, description), cfg.clone());
    let result = match &parsed {
        CochranInput::Covariance(c) => cochran_decompose(c),
        CochranInput::Sample(rows) => cochran_from_sample(rows),
    };
    // Collinearity and short samples make the whole input unusable.
    let d = result?;
    report.run("cochran", "least-squares", None, || Ok(d));
    Ok(finish(report, start))
}

/// Seeded randomized suites.
pub fn cmd_property_batch(cfg: &RunConfig, count: usize, suites: &[Suite]) -> Result<Report> {
    let start = Instant::now();
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Input("randomized batches need a seed".into()))?;
    let mut chosen: Vec<Suite> = if suites.contains(&Suite::All) {
        Suite::EACH.to_vec()
    } else {
        suites.to_vec()
    };
    chosen.dedup();
    let canonical = serde_json::to_vec(&json!({ "seed": seed, "count": count, "suites": chosen }))?;
    let fp = Fingerprint::of(&canonical, BTreeMap::from([("count".to_string(), count)]), format!("seed {seed}"));
    let mut report = Report::new("batch", fp, cfg.clone());
    let num = NumericConfig::default();
    for s in chosen {
        match s {
            Suite::Sufficiency => report.run("sufficiency", EXACT, Some(0.0), || suite::sufficiency(seed, count, &num)),
            Suite::Necessity => report.run("necessity", EXACT, Some(0.0), || suite::necessity(seed, count)),
            Suite::Containment => report.run("containment", EXACT, Some(0.0), || suite::containment(seed, count)),
            Suite::Chain => report.run("chain", EXACT, Some(0.0), || suite::chain(seed, count)),
            Suite::Reversal => report.run("reversal", EXACT, None, || suite::reversal(seed, count, 100)),
            Suite::Cox => report.run("cox", "quadrature", Some(QUANTILE_TOL), || suite::cox(seed, count, QUANTILE_TOL, &num)),
            Suite::Cochran => report.run("cochran", "least-squares", Some(1e-10), || suite::cochran(seed, count, 200, 1e-10)),
            Suite::All => {}
        }
    }
    Ok(finish(report, start))
}

/// Writes the report in the configured format to `out`, or stdout.
pub fn write_report(report: &Report, format: OutputFormat, out: Option<&Path>) -> Result<()> {
    let text = match format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::CsvSummary => report.to_csv_summary(),
    };
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
