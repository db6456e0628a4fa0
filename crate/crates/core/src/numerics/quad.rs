use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Clips infinite integration limits.
    pub truncation: Option<Interval>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            truncation: None,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidSetting(format!(
                "quadrature tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidSetting("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |t: f64| {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: t })
        }
    };

    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_sum = kronrod.abs();
    let mut lower = [0.0; 7];
    let mut upper = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (fl, fu) = (eval(center - dx)?, eval(center + dx)?);
        lower[j] = fl;
        upper[j] = fu;
        kronrod += WGK[j] * (fl + fu);
        abs_sum += WGK[j] * (fl.abs() + fu.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (fl + fu);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((lower[j] - mean).abs() + (upper[j] - mean).abs());
    }

    let width = half.abs();
    let (asc, abs_sum) = (asc * width, abs_sum * width);
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Ok(Panel {
        a,
        b,
        value: kronrod * half,
        error,
    })
}

/// Adaptive 15-point Gauss–Kronrod quadrature of `f` over `interval`.
pub fn integrate<F>(f: F, interval: Interval, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    integrate_with_breakpoints(f, interval, &[], spec)
}

/// As [`integrate`], but starts from panels split at `breakpoints` so that
/// kinks and jumps of the integrand sit on panel boundaries.
pub fn integrate_with_breakpoints<F>(
    f: F,
    interval: Interval,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let range = match spec.truncation {
        Some(t) => interval.intersect(&t),
        None => interval,
    };
    if !range.is_finite() {
        return Err(Error::InvalidSetting(format!(
            "integration range [{}, {}] is unbounded; declare a truncation",
            range.lo, range.hi
        )));
    }
    if range.width() == 0.0 {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }

    let min_gap = 1e-12 * range.width().max(range.lo.abs()).max(range.hi.abs());
    let mut cuts = vec![range.lo];
    let mut interior: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t.is_finite() && t > range.lo && t < range.hi)
        .collect();
    interior.sort_by(f64::total_cmp);
    for t in interior {
        if t - cuts[cuts.len() - 1] > min_gap {
            cuts.push(t);
        }
    }
    if range.hi - cuts[cuts.len() - 1] > min_gap || cuts.len() == 1 {
        cuts.push(range.hi);
    } else {
        let last = cuts.len() - 1;
        cuts[last] = range.hi;
    }

    let mut heap = BinaryHeap::new();
    let mut settled = Vec::new();
    for w in cuts.windows(2) {
        heap.push(gauss_kronrod(&f, w[0], w[1])?);
    }
    let mut panels = heap.len();

    loop {
        let (value, error) = heap
            .iter()
            .chain(settled.iter())
            .fold((0.0, 0.0), |(v, e), p: &Panel| (v + p.value, e + p.error));
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= target {
            return Ok(Integral {
                value,
                error,
                subdivisions: panels,
            });
        }
        let worst = match heap.pop() {
            Some(p) if panels < spec.max_subdivisions => p,
            _ => {
                return Err(Error::Quadrature {
                    estimate: value,
                    error_bound: error,
                    subdivisions: panels,
                })
            }
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid - worst.a <= min_gap || worst.b - mid <= min_gap {
            settled.push(worst);
            continue;
        }
        heap.push(gauss_kronrod(&f, worst.a, mid)?);
        heap.push(gauss_kronrod(&f, mid, worst.b)?);
        panels += 1;
    }
}
