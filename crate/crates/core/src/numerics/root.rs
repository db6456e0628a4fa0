use crate::error::{Error, Result};

const VALUE_TOL: f64 = 1e-10;
const WIDTH_TOL: f64 = 1e-12;
const MAX_ITER: usize = 300;

/// Solves `cdf(y) = target` inside `bracket` by bisection with secant steps.
///
/// The bracket is kept throughout; a secant step is taken only when it lands
/// well inside the current bracket and the previous step shrank it enough.
pub fn invert_cdf<F>(cdf: F, target: f64, bracket: (f64, f64)) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidProbability(target));
    }
    let (mut lo, mut hi) = bracket;
    let (mut f_lo, mut f_hi) = (cdf(lo), cdf(hi));
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(Error::NonFinite {
            at: if f_lo.is_finite() { hi } else { lo },
        });
    }
    if lo > hi || f_lo > f_hi {
        return Err(Error::NotACdf { at: lo });
    }
    if !(f_lo <= target && target <= f_hi) {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo,
            f_hi,
            target,
        });
    }

    let mut last_width = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let width = hi - lo;
        let mid = 0.5 * (lo + hi);
        if width <= WIDTH_TOL.max(4.0 * f64::EPSILON * mid.abs()) {
            return Ok(mid);
        }
        let mut next = mid;
        if f_hi > f_lo && width < 0.5 * last_width {
            let secant = lo + (target - f_lo) * width / (f_hi - f_lo);
            if secant > lo + 0.05 * width && secant < hi - 0.05 * width {
                next = secant;
            }
        }
        last_width = width;

        let f_next = cdf(next);
        if !f_next.is_finite() {
            return Err(Error::NonFinite { at: next });
        }
        if f_next < f_lo || f_next > f_hi {
            return Err(Error::NotACdf { at: next });
        }
        if (f_next - target).abs() <= VALUE_TOL {
            return Ok(next);
        }
        if f_next < target {
            lo = next;
            f_lo = f_next;
        } else {
            hi = next;
            f_hi = f_next;
        }
    }
    Ok(0.5 * (lo + hi))
}
