//! Oracles and invariants exercised through the public API only.

use collapse_core::collapse::discrete as disc;
use collapse_core::collapse::{continuous, Independence};
use collapse_core::model::{build_discrete_joint, DiscreteJoint, EvalGrid, GaussianLinear, TableRow, UniformQuadratic};
use collapse_core::numerics::NumericConfig;
use collapse_core::quantile;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn table(ny: usize, nx: usize, nw: usize, counts: Vec<BigRational>) -> DiscreteJoint {
    DiscreteJoint::from_counts(labels(ny), labels(nx), labels(nw), counts).unwrap()
}

fn reference() -> DiscreteJoint {
    let rows = [
        ("1", "1", "1", 25),
        ("2", "1", "1", 35),
        ("1", "2", "1", 75),
        ("2", "2", "1", 45),
        ("1", "1", "2", 35),
        ("2", "1", "2", 15),
        ("1", "2", "2", 60),
        ("2", "2", "2", 40),
    ];
    let rows: Vec<TableRow> = rows.iter().map(|&(y, x, w, c)| TableRow::new(y, x, w, c)).collect();
    build_discrete_joint(&rows).unwrap()
}

#[test]
fn reference_table_oracle() {
    let t = reference();
    let deps = disc::dependence_table(&t).unwrap();
    let exact: Vec<_> = deps.iter().map(|d| d.exact.clone().unwrap()).collect();
    assert_eq!(exact, ["5/24", "-1/10", "3/44"]);

    let h = disc::check_homogeneity(&t, 0.0).unwrap();
    assert!(!h.holds);
    assert_eq!(h.exact_violation.as_deref(), Some("37/120"));
    let c = disc::check_collapsibility(&t, 0.0).unwrap();
    assert!(!c.holds);
    assert_eq!(c.exact_violation.as_deref(), Some("37/220"));
    assert!(disc::check_a_collapsibility(&t, 0.0).unwrap().holds);
    assert!(disc::check_independence(&t, Independence::XW, 0.0).unwrap().holds);
    assert!(!disc::check_independence(&t, Independence::YWGivenX, 0.0).unwrap().holds);
}

/// Joint counts `n(y,x,w) / Σ_y n(·,x,w) · c(x) · d(w)`, so that `X ⊥ W`.
fn independent_xw(ny: usize, nx: usize, nw: usize, n: &[i64], c: &[i64], d: &[i64]) -> DiscreteJoint {
    let mut counts = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            for w in 0..nw {
                let col: i64 = (0..ny).map(|yy| n[(yy * nx + x) * nw + w]).sum();
                counts.push(q(n[(y * nx + x) * nw + w], col) * q(c[x] * d[w], 1));
            }
        }
    }
    table(ny, nx, nw, counts)
}

/// Joint counts `a(y,x) · b(x,w)`, so that `Y ⊥ W | X`.
fn conditionally_independent(ny: usize, nx: usize, nw: usize, a: &[i64], b: &[i64]) -> DiscreteJoint {
    let mut counts = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            for w in 0..nw {
                counts.push(q(a[y * nx + x] * b[x * nw + w], 1));
            }
        }
    }
    table(ny, nx, nw, counts)
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..=3, 2usize..=3, 2usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn independent_background_gives_exact_a_collapsibility(
        (ny, nx, nw) in dims(),
        seed in prop::collection::vec(1i64..20, 27 + 3 + 3),
    ) {
        let t = independent_xw(ny, nx, nw, &seed[..27], &seed[27..30], &seed[30..33]);
        prop_assert!(disc::check_independence(&t, Independence::XW, 0.0).unwrap().holds);
        prop_assert!(disc::check_a_collapsibility(&t, 0.0).unwrap().holds);
    }

    #[test]
    fn conditional_independence_gives_exact_collapsibility(
        (ny, nx, nw) in dims(),
        seed in prop::collection::vec(1i64..20, 9 + 9),
    ) {
        let t = conditionally_independent(ny, nx, nw, &seed[..9], &seed[9..]);
        prop_assert!(disc::check_uniform_collapsibility(&t, 0.0).unwrap().holds);
        prop_assert!(disc::check_collapsibility(&t, 0.0).unwrap().holds);
        prop_assert!(disc::check_homogeneity(&t, 0.0).unwrap().holds);
    }

    #[test]
    fn strength_chain_on_arbitrary_tables(
        (ny, nx, nw) in dims(),
        raw in prop::collection::vec(0i64..6, 27),
    ) {
        let counts: Vec<BigRational> = raw[..ny * nx * nw].iter().map(|&c| q(c + 1, 1)).collect();
        let t = table(ny, nx, nw, counts);
        let uniform = disc::check_uniform_collapsibility(&t, 0.0).unwrap().holds;
        let collapsible = disc::check_collapsibility(&t, 0.0).unwrap().holds;
        let homogeneous = disc::check_homogeneity(&t, 0.0).unwrap().holds;
        prop_assert!(!uniform || collapsible);
        prop_assert!(!collapsible || homogeneous);
    }

    #[test]
    fn w_relabelling_leaves_verdicts_unchanged(
        (ny, nx, nw) in dims(),
        raw in prop::collection::vec(1i64..9, 27),
    ) {
        let counts: Vec<BigRational> = raw[..ny * nx * nw].iter().map(|&c| q(c, 1)).collect();
        let mut flipped = counts.clone();
        for y in 0..ny {
            for x in 0..nx {
                for w in 0..nw {
                    flipped[(y * nx + x) * nw + w] = counts[(y * nx + x) * nw + (nw - 1 - w)].clone();
                }
            }
        }
        let (a, b) = (table(ny, nx, nw, counts), table(ny, nx, nw, flipped));
        for check in [disc::check_homogeneity, disc::check_collapsibility, disc::check_a_collapsibility] {
            let (va, vb) = (check(&a, 0.0).unwrap(), check(&b, 0.0).unwrap());
            prop_assert_eq!(va.holds, vb.holds);
            prop_assert_eq!(va.exact_violation, vb.exact_violation);
        }
    }
}

#[test]
fn continuous_families_through_public_checks() {
    let cfg = NumericConfig::default();
    let grid = EvalGrid::new(vec![-1.0, 0.0, 1.5], vec![-0.5, 0.5], vec![-1.0, 1.0]).unwrap();

    let indep = GaussianLinear::indep_xw([0.2, 1.0, 0.7, 0.4], 1.0, 0.0, 1.0).unwrap();
    assert!(continuous::check_a_collapsibility(&indep, &grid, 1e-6, &cfg).unwrap().holds);
    assert!(continuous::check_residual_integral(&indep, &grid, 1e-8, &cfg).unwrap().holds);
    assert!(quantile::check_cox_identity(&indep, &grid, 1e-5, &cfg).unwrap().holds);

    let quad = UniformQuadratic::new(1.0).unwrap();
    let qgrid = EvalGrid::new(vec![0.1, 0.3], vec![0.6, 1.2], vec![0.0, 1.0]).unwrap();
    assert!(continuous::check_a_collapsibility(&quad, &qgrid, 1e-6, &cfg).unwrap().holds);
    let report = quantile::check_a_collapsibility_quantile(&quad, &qgrid, 1e-5, &cfg).unwrap();
    assert!(report.verdict.holds);
    assert!(report.forms_gap < 1e-8);
}
