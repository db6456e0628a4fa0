//! Seeded randomized suites. Each run is reproducible from its seed and
//! reports how many trials reached the premise of the implication it tests,
//! together with the first counterexample found.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generate::{random_continuous, random_dims, random_table, ContinuousClass, TableClass};
use super::{continuous, discrete, Status};
use crate::error::Result;
use crate::model::{ContinuousModel, DiscreteJoint, EvalGrid};
use crate::numerics::NumericConfig;
use crate::quantile::{cochran_from_sample, cox_identity_residual};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    /// Trials where the premise held and the conclusion was checked.
    pub checked: usize,
    pub failures: usize,
    /// Trial counts per generated class or per outcome.
    pub coverage: BTreeMap<String, usize>,
    pub first_counterexample: Option<String>,
    /// Set when no trial reached the premise, so a clean pass says nothing.
    pub coverage_shortfall: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str, seed: u64, trials: usize) -> Self {
        SuiteReport {
            name: name.to_string(),
            seed,
            trials,
            checked: 0,
            failures: 0,
            coverage: BTreeMap::new(),
            first_counterexample: None,
            coverage_shortfall: false,
            notes: Vec::new(),
        }
    }

    fn finish(mut self) -> Self {
        if self.trials > 0 && self.checked == 0 {
            self.coverage_shortfall = true;
            self.notes.push("coverage shortfall: no trial reached the premise".into());
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn tally(&mut self, key: impl Into<String>) {
        *self.coverage.entry(key.into()).or_default() += 1;
    }

    fn fail(&mut self, what: impl FnOnce() -> String) {
        self.failures += 1;
        if self.first_counterexample.is_none() {
            self.first_counterexample = Some(what());
        }
    }
}

fn counts_text(t: &DiscreteJoint) -> String {
    let (ny, nx, nw) = t.dims();
    let mut cells = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            for w in 0..nw {
                cells.push(t.count(y, x, w).to_string());
            }
        }
    }
    format!("{ny}x{nx}x{nw} counts [{}]", cells.join(", "))
}

fn small_grid(model: &dyn ContinuousModel) -> Result<EvalGrid> {
    EvalGrid::from_spec(&model.default_region().with_counts(3, 3, 3))
}

/// Tables and continuous models satisfying `Y ⊥ W | X` or `X ⊥ W` must be
/// A-collapsible. Discrete trials are exact; continuous ones use a small grid
/// at the family tolerance.
pub fn sufficiency(seed: u64, trials: usize, cfg: &NumericConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("sufficiency", seed, trials);
    for k in 0..trials {
        let c1 = k % 2 == 0;
        if k % 4 < 2 {
            let class = if c1 { TableClass::C1 } else { TableClass::C2 };
            let dims = random_dims(&mut rng, false);
            let t = random_table(&mut rng, class, dims)?;
            rep.tally(format!("discrete-{}", class.as_str()));
            rep.checked += 1;
            let v = discrete::check_a_collapsibility(&t, 0.0)?;
            if !v.holds {
                rep.fail(|| format!("{} not A-collapsible: {}", class.as_str(), counts_text(&t)));
            }
        } else {
            let class = if c1 { ContinuousClass::C1 } else { ContinuousClass::C2 };
            let m = random_continuous(&mut rng, class)?;
            rep.tally(format!("continuous-{}", if c1 { "c1" } else { "c2" }));
            rep.checked += 1;
            let grid = small_grid(m.as_ref())?;
            let v = continuous::check_a_collapsibility(m.as_ref(), &grid, continuous::default_tolerance(m.as_ref()), cfg)?;
            if !v.holds {
                rep.fail(|| format!("{:?} not A-collapsible: violation {:.3e}", m.family(), v.max_violation));
            }
        }
    }
    Ok(rep.finish())
}

/// Binary-`W` tables that are A-collapsible should satisfy `Y ⊥ W | X` or
/// `X ⊥ W`. The coverage reports how many sampled tables were A-collapsible;
/// with discrete `X` and weights `P(w | X = i)` this can fail.
pub fn necessity(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("necessity", seed, trials);
    for _ in 0..trials {
        let class = *TableClass::ALL.choose(&mut rng).expect("classes");
        let dims = random_dims(&mut rng, true);
        let t = random_table(&mut rng, class, dims)?;
        rep.tally(class.as_str());
        let report = discrete::condition_report(&t, 0.0)?;
        match report.necessity {
            Status::Consistent => rep.checked += 1,
            Status::Violated => {
                rep.checked += 1;
                rep.fail(|| format!("A-collapsible, in neither C1 nor C2: {}", counts_text(&t)));
            }
            Status::Vacuous | Status::NotApplicable => {}
        }
    }
    rep.notes.push(format!("{} of {} tables were A-collapsible", rep.checked, trials));
    Ok(rep.finish())
}

/// Collapsible tables must be homogeneous and A-collapsible.
pub fn containment(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("containment", seed, trials);
    for _ in 0..trials {
        let t = mixed_table(&mut rng, &mut rep)?;
        let m = discrete::condition_report(&t, 0.0)?.membership;
        if m.in_c_w {
            rep.checked += 1;
        }
        if !m.containment_ok() {
            rep.fail(|| format!("collapsible but not in C_H ∩ C_A: {}", counts_text(&t)));
        } else if !m.binary_equality_ok() {
            rep.fail(|| format!("in C_H ∩ C_A but not collapsible: {}", counts_text(&t)));
        }
    }
    Ok(rep.finish())
}

/// Uniform collapsibility implies collapsibility, which implies homogeneity.
pub fn chain(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("chain", seed, trials);
    for _ in 0..trials {
        let t = mixed_table(&mut rng, &mut rep)?;
        let uniform = discrete::check_uniform_collapsibility(&t, 0.0)?.holds;
        let collapsible = discrete::check_collapsibility(&t, 0.0)?.holds;
        let homogeneous = discrete::check_homogeneity(&t, 0.0)?.holds;
        if uniform || collapsible {
            rep.checked += 1;
        }
        if uniform && !collapsible {
            rep.fail(|| format!("uniformly collapsible but not collapsible: {}", counts_text(&t)));
        } else if collapsible && !homogeneous {
            rep.fail(|| format!("collapsible but not homogeneous: {}", counts_text(&t)));
        }
    }
    Ok(rep.finish())
}

fn mixed_table(rng: &mut ChaCha8Rng, rep: &mut SuiteReport) -> Result<DiscreteJoint> {
    let class = *TableClass::ALL.choose(rng).expect("classes");
    let binary = rng.random_bool(0.5);
    let dims = random_dims(rng, binary);
    rep.tally(class.as_str());
    random_table(rng, class, dims)
}

/// Random binary tables: counts how often the marginal difference reverses
/// a conditional difference of constant sign.
pub fn reversal(seed: u64, trials: usize, max_count: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("reversal", seed, trials);
    for _ in 0..trials {
        let cells: Vec<u64> = (0..8).map(|_| rng.random_range(1..=max_count)).collect();
        let t = super::generate::table_from_fn((2, 2, 2), |y, x, w| cells[(y * 2 + x) * 2 + w])?;
        let r = discrete::detect_reversal(&t)?;
        rep.tally(if r.reversed { "reversed" } else { "not-reversed" });
        if r.reversed {
            rep.checked += 1;
            if rep.first_counterexample.is_none() {
                rep.first_counterexample = Some(counts_text(&t));
            }
        }
    }
    rep.notes.push("a reversal is an observation here, not a failure".into());
    Ok(rep.finish())
}

/// `q_x(y|x) = E_{W|y,x}[δ]` at random points of random Gaussian models.
pub fn cox(seed: u64, trials: usize, tol: f64, cfg: &NumericConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("cox", seed, trials);
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let class = if k % 2 == 0 { ContinuousClass::C1 } else { ContinuousClass::C2 };
        let m = random_continuous(&mut rng, class)?;
        let r = m.default_region();
        let x = rng.random_range(r.x.lo..=r.x.hi);
        let y = rng.random_range(r.y.lo..=r.y.hi);
        rep.tally(format!("{:?}", m.family()));
        rep.checked += 1;
        let res = cox_identity_residual(m.as_ref(), y, x, cfg)?;
        worst = worst.max(res.abs());
        if !(res.abs() <= tol) {
            rep.fail(|| format!("{:?} at (y, x) = ({y}, {x}): residual {res:.3e}", m.family()));
        }
    }
    rep.notes.push(format!("largest residual {worst:.3e}"));
    Ok(rep.finish())
}

/// Cochran residual on random linear samples.
pub fn cochran(seed: u64, trials: usize, n: usize, tol: f64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("cochran", seed, trials);
    for _ in 0..trials {
        let b: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let rows: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let w = b[0] * x + rng.random_range(-1.0..1.0);
                [b[1] * x + b[2] * w + b[3] * rng.random_range(-1.0..1.0), x, w]
            })
            .collect();
        let d = cochran_from_sample(&rows)?;
        rep.checked += 1;
        if !(d.residual.abs() <= tol) {
            rep.fail(|| format!("residual {:.3e}", d.residual));
        }
    }
    Ok(rep.finish())
}
