use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `(f(x+h) - f(x-h)) / 2h`
    Central2,
    /// Richardson extrapolation of the 2-point rule at `h` and `h/2`.
    Central4,
}

/// Step rule `h = h0 * max(1, |x|)`; stencils never leave `bounds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffSpec {
    pub scheme: Scheme,
    pub h0: f64,
    pub bounds: Interval,
}

impl Default for DiffSpec {
    fn default() -> Self {
        DiffSpec {
            scheme: Scheme::Central2,
            h0: f64::EPSILON.cbrt(),
            bounds: Interval::REAL_LINE,
        }
    }
}

impl DiffSpec {
    pub fn within(mut self, bounds: Interval) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn step(&self, x: f64) -> f64 {
        self.h0 * x.abs().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    /// `|2-point - 4-point|`
    pub error: f64,
    /// A boundary forced a one-sided stencil.
    pub one_sided: bool,
}

/// Central-difference derivative of `f` at `x`, falling back to one-sided
/// second-order stencils when `x ± h` would leave `spec.bounds`.
pub fn central_diff<F>(f: F, x: f64, spec: &DiffSpec) -> Result<Derivative>
where
    F: Fn(f64) -> f64,
{
    if !(spec.h0 > 0.0) {
        return Err(Error::InvalidSetting(format!("h0 must be positive, got {}", spec.h0)));
    }
    let h = spec.step(x);
    let eval = |t: f64| -> Result<f64> {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: t })
        }
    };

    let b = spec.bounds;
    let (rule, one_sided): (Box<dyn Fn(f64) -> Result<f64>>, bool) = if b.contains(x - h)
        && b.contains(x + h)
    {
        (Box::new(|h| Ok((eval(x + h)? - eval(x - h)?) / (2.0 * h))), false)
    } else if b.contains(x + 2.0 * h) {
        let fx = eval(x)?;
        (
            Box::new(move |h| Ok((-3.0 * fx + 4.0 * eval(x + h)? - eval(x + 2.0 * h)?) / (2.0 * h))),
            true,
        )
    } else if b.contains(x - 2.0 * h) {
        let fx = eval(x)?;
        (
            Box::new(move |h| Ok((3.0 * fx - 4.0 * eval(x - h)? + eval(x - 2.0 * h)?) / (2.0 * h))),
            true,
        )
    } else {
        return Err(Error::InvalidSetting(format!(
            "no stencil of width {h} fits in [{}, {}] around {x}",
            b.lo, b.hi
        )));
    };

    let coarse = rule(h)?;
    let fine = rule(0.5 * h)?;
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let value = match spec.scheme {
        Scheme::Central2 => coarse,
        Scheme::Central4 => extrapolated,
    };
    Ok(Derivative {
        value,
        error: (coarse - extrapolated).abs(),
        one_sided,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{norm_cdf, norm_pdf};

    #[test]
    fn square_at_three() {
        let d = central_diff(|x| x * x, 3.0, &DiffSpec::default()).unwrap();
        assert!((d.value - 6.0).abs() < 1e-7, "{}", d.value);
    }

    #[test]
    fn normal_cdf_slope_at_origin() {
        let d = central_diff(norm_cdf, 0.0, &DiffSpec::default()).unwrap();
        assert!((d.value - norm_pdf(0.0)).abs() < 1e-8);
        assert!((d.value - 0.398_942_3).abs() < 1e-7);
    }

    #[test]
    fn constant_has_zero_slope() {
        let spec = DiffSpec {
            scheme: Scheme::Central4,
            ..DiffSpec::default()
        };
        let d = central_diff(|_| 4.25, 17.0, &spec).unwrap();
        assert!(d.value.abs() < 1e-12);
    }

    #[test]
    fn one_sided_at_lower_bound() {
        let spec = DiffSpec::default().within(Interval::new(0.0, 10.0));
        let d = central_diff(|x| x.powi(3), 0.0, &spec).unwrap();
        assert!(d.one_sided);
        assert!(d.value.abs() < 1e-8);
        let d = central_diff(|x| x.sqrt(), 1e-9, &spec.within(Interval::new(0.0, 1.0)));
        // forward stencil only touches x, x+h, x+2h
        assert!(d.is_ok());
    }

    #[test]
    fn non_finite_stencil_point_is_named() {
        let err = central_diff(|x| if x > 1.0 { f64::NAN } else { x }, 1.0, &DiffSpec::default())
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { at } if at > 1.0));
    }

    #[test]
    fn two_point_error_quarters_when_step_halves() {
        let x = 0.7_f64;
        let exact = x.cos();
        let err = |h0: f64| {
            let spec = DiffSpec {
                scheme: Scheme::Central2,
                h0,
                bounds: Interval::REAL_LINE,
            };
            (central_diff(f64::sin, x, &spec).unwrap().value - exact).abs()
        };
        for h0 in [4e-2, 2e-2, 1e-2] {
            let ratio = err(h0) / err(h0 / 2.0);
            assert!((3.0..=5.0).contains(&ratio), "h0={h0} ratio={ratio}");
        }
    }

    #[test]
    fn four_point_beats_two_point() {
        let spec2 = DiffSpec {
            scheme: Scheme::Central2,
            h0: 1e-2,
            bounds: Interval::REAL_LINE,
        };
        let spec4 = DiffSpec {
            scheme: Scheme::Central4,
            ..spec2
        };
        let d2 = central_diff(f64::exp, 0.3, &spec2).unwrap();
        let d4 = central_diff(f64::exp, 0.3, &spec4).unwrap();
        let exact = 0.3_f64.exp();
        assert!((d4.value - exact).abs() < 1e-3 * (d2.value - exact).abs());
        assert!(d4.error > 0.0);
    }
}
