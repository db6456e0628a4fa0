//! Seeded random models for the property suites.
//!
//! Discrete tables have positive integer counts, so every conditioning cell
//! has mass. Constrained classes are built by factorising the counts.

use num_rational::BigRational;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{ContinuousModel, DiscreteJoint, GaussianLinear, GaussianW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableClass {
    /// Independent uniform counts in `1..=60`.
    Generic,
    /// `Y ⊥ W | X`: counts `a(y,x)·b(x,w)`.
    C1,
    /// `X ⊥ W`: rows of `Y` with a common total times `u(x)·v(w)`.
    C2,
    /// `P(y|x,w) = (b(y,w) + e(y,x)) / T`, so the adjacent differences do
    /// not depend on `w`.
    Homogeneous,
    /// Homogeneous with cell masses `u(x)·v(w)`, hence collapsible.
    HomogeneousIndependent,
}

impl TableClass {
    pub const ALL: [TableClass; 5] = [
        TableClass::Generic,
        TableClass::C1,
        TableClass::C2,
        TableClass::Homogeneous,
        TableClass::HomogeneousIndependent,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TableClass::Generic => "generic",
            TableClass::C1 => "c1",
            TableClass::C2 => "c2",
            TableClass::Homogeneous => "homogeneous",
            TableClass::HomogeneousIndependent => "homogeneous-independent",
        }
    }
}

/// Table shape with 8 to 27 cells; `W` binary when asked.
pub fn random_dims<R: Rng + ?Sized>(rng: &mut R, binary_w: bool) -> (usize, usize, usize) {
    let ny = rng.random_range(2..=3);
    let nx = rng.random_range(2..=3);
    let nw = if binary_w { 2 } else { rng.random_range(2..=3) };
    (ny, nx, nw)
}

/// Splits `total` into `parts` positive integers, uniformly over compositions.
fn composition<R: Rng + ?Sized>(rng: &mut R, total: u64, parts: usize) -> Vec<u64> {
    debug_assert!(total >= parts as u64);
    let mut cuts: Vec<u64> = rand::seq::index::sample(rng, (total - 1) as usize, parts - 1)
        .into_iter()
        .map(|c| c as u64 + 1)
        .collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

fn levels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Builds a table from an integer count function over `[y][x][w]`.
pub fn table_from_fn(
    dims: (usize, usize, usize),
    mut count: impl FnMut(usize, usize, usize) -> u64,
) -> Result<DiscreteJoint> {
    let (ny, nx, nw) = dims;
    let mut counts = Vec::with_capacity(ny * nx * nw);
    for y in 0..ny {
        for x in 0..nx {
            for w in 0..nw {
                counts.push(BigRational::from_integer(count(y, x, w).into()));
            }
        }
    }
    DiscreteJoint::from_counts(levels("y", ny), levels("x", nx), levels("w", nw), counts)
}

pub fn random_table<R: Rng + ?Sized>(
    rng: &mut R,
    class: TableClass,
    dims: (usize, usize, usize),
) -> Result<DiscreteJoint> {
    let (ny, nx, nw) = dims;
    match class {
        TableClass::Generic => {
            let cells: Vec<u64> = (0..ny * nx * nw).map(|_| rng.random_range(1..=60)).collect();
            table_from_fn(dims, |y, x, w| cells[(y * nx + x) * nw + w])
        }
        TableClass::C1 => {
            let a: Vec<u64> = (0..ny * nx).map(|_| rng.random_range(1..=9)).collect();
            let b: Vec<u64> = (0..nx * nw).map(|_| rng.random_range(1..=9)).collect();
            table_from_fn(dims, |y, x, w| a[y * nx + x] * b[x * nw + w])
        }
        TableClass::C2 => {
            let total = 6 * ny as u64;
            let rows: Vec<Vec<u64>> = (0..nx * nw).map(|_| composition(rng, total, ny)).collect();
            let u: Vec<u64> = (0..nx).map(|_| rng.random_range(1..=6)).collect();
            let v: Vec<u64> = (0..nw).map(|_| rng.random_range(1..=6)).collect();
            table_from_fn(dims, |y, x, w| rows[x * nw + w][y] * u[x] * v[w])
        }
        TableClass::Homogeneous | TableClass::HomogeneousIndependent => {
            // b(·,w) ≥ 3 and shifts e(·,x) in [-2, 2] summing to zero keep
            // every cell positive.
            let total = 10 * ny as u64;
            let base: Vec<Vec<u64>> = (0..nw)
                .map(|_| composition(rng, total - 2 * ny as u64, ny).into_iter().map(|c| c + 2).collect())
                .collect();
            let mut shift = vec![vec![0i64; ny]; nx];
            for row in shift.iter_mut() {
                for _ in 0..2 {
                    let from = rng.random_range(0..ny);
                    let to = rng.random_range(0..ny);
                    if row[from] > -2 && row[to] < 2 && from != to {
                        row[from] -= 1;
                        row[to] += 1;
                    }
                }
            }
            let mass: Vec<u64> = if class == TableClass::HomogeneousIndependent {
                let u: Vec<u64> = (0..nx).map(|_| rng.random_range(1..=5)).collect();
                let v: Vec<u64> = (0..nw).map(|_| rng.random_range(1..=5)).collect();
                (0..nx * nw).map(|k| u[k / nw] * v[k % nw]).collect()
            } else {
                (0..nx * nw).map(|_| rng.random_range(1..=5)).collect()
            };
            table_from_fn(dims, |y, x, w| {
                let p = base[w][y] as i64 + shift[x][y];
                p as u64 * mass[x * nw + w]
            })
        }
    }
}

/// Continuous class used by the sufficiency suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuousClass {
    /// `Y ⊥ W | X` Gaussian family with a random `W | x` law.
    C1,
    /// `W ⊥ X` Gaussian family with random interaction coefficients.
    C2,
}

pub fn random_continuous<R: Rng + ?Sized>(rng: &mut R, class: ContinuousClass) -> Result<Box<dyn ContinuousModel>> {
    let sigma = rng.random_range(0.5..2.0);
    Ok(match class {
        ContinuousClass::C1 => {
            let w = GaussianW::new(rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0));
            Box::new(GaussianLinear::ci_yw(rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0), sigma, w)?)
        }
        ContinuousClass::C2 => {
            let alpha = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-1.0..1.0),
            ];
            Box::new(GaussianLinear::indep_xw(alpha, sigma, rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0))?)
        }
    })
}

/// Outcome of the brute-force reversal search.
#[derive(Debug, Clone)]
pub struct ReversalFind {
    pub table: DiscreteJoint,
    /// `[y][x][w]` counts of the binary table.
    pub counts: [u64; 8],
    pub tries: usize,
}

/// Searches random binary `2 × 2 × 2` tables with counts in `1..=max_count`
/// until one shows a sign reversal, or gives up after `budget` tries.
pub fn find_reversal_table<R: Rng + ?Sized>(rng: &mut R, max_count: u64, budget: usize) -> Result<Option<ReversalFind>> {
    let choices: Vec<u64> = (1..=max_count).collect();
    for tries in 1..=budget {
        let mut counts = [0u64; 8];
        for c in counts.iter_mut() {
            *c = *choices.choose(rng).expect("max_count >= 1");
        }
        let table = table_from_fn((2, 2, 2), |y, x, w| counts[(y * 2 + x) * 2 + w])?;
        if super::discrete::detect_reversal(&table)?.reversed {
            return Ok(Some(ReversalFind { table, counts, tries }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collapse::discrete::{self, Independence};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compositions_are_positive_and_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c = composition(&mut rng, 12, 3);
            assert_eq!(c.iter().sum::<u64>(), 12);
            assert!(c.iter().all(|&p| p > 0));
        }
    }

    #[test]
    fn constructed_classes_satisfy_their_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let dims = random_dims(&mut rng, false);
            let c1 = random_table(&mut rng, TableClass::C1, dims).unwrap();
            assert!(discrete::check_independence(&c1, Independence::YWGivenX, 0.0).unwrap().holds);
            let c2 = random_table(&mut rng, TableClass::C2, dims).unwrap();
            assert!(discrete::check_independence(&c2, Independence::XW, 0.0).unwrap().holds);
            let h = random_table(&mut rng, TableClass::Homogeneous, dims).unwrap();
            assert!(discrete::check_homogeneity(&h, 0.0).unwrap().holds);
            let hi = random_table(&mut rng, TableClass::HomogeneousIndependent, dims).unwrap();
            assert!(discrete::check_collapsibility(&hi, 0.0).unwrap().holds);
        }
    }

    #[test]
    fn dims_respect_cell_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (a, b, c) = random_dims(&mut rng, true);
            assert_eq!(c, 2);
            assert!((8..=36).contains(&(a * b * c)));
        }
    }

    #[test]
    fn reversal_search_finds_a_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let found = find_reversal_table(&mut rng, 100, 100_000).unwrap().expect("reversal table");
        assert!(found.counts.iter().all(|&c| (1..=100).contains(&c)));
        assert!(discrete::detect_reversal(&found.table).unwrap().reversed);
    }
}
