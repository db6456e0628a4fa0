use serde::{Deserialize, Serialize};

use super::{AxisSpec, ContinuousModel, Family, GridSpec, Interval};
use crate::dependence::Method;
use crate::error::{Error, Result};

/// Tabulated conditional CDFs as they appear in a model config.
///
/// `cdf_y[i][j]` is `F(· | xs[i], ws[j])` sampled on `ys`; `cdf_w[i]` is
/// `F(· | xs[i])` sampled on `ws`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTable {
    pub xs: Vec<f64>,
    pub ws: Vec<f64>,
    pub ys: Vec<f64>,
    pub cdf_y: Vec<Vec<Vec<f64>>>,
    pub cdf_w: Vec<Vec<f64>>,
}

/// Grid-tabulated model: CDFs piecewise linear in `y`, `w` and `x`, hence
/// piecewise-constant densities. Partial derivatives in `x` and `w` are
/// differences across tabulated knots (central at interior knots, one-sided
/// at the ends).
#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    xs: Vec<f64>,
    ws: Vec<f64>,
    ys: Vec<f64>,
    cdf_y: Vec<f64>,
    cdf_w: Vec<f64>,
    complete: Option<bool>,
}

const ENDPOINT_TOL: f64 = 1e-9;

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::InvalidModel(format!("grid axis {name} needs at least 2 knots")));
    }
    if axis.iter().any(|t| !t.is_finite()) || axis.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidModel(format!(
            "grid axis {name} must be finite and strictly increasing"
        )));
    }
    Ok(())
}

fn check_cdf_row(what: &str, row: &[f64]) -> Result<()> {
    if row.iter().any(|v| !v.is_finite()) || row.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::InvalidModel(format!("{what} is not nondecreasing")));
    }
    let (first, last) = (row[0], row[row.len() - 1]);
    if first.abs() > ENDPOINT_TOL || (last - 1.0).abs() > ENDPOINT_TOL {
        return Err(Error::InvalidModel(format!(
            "{what} must run from 0 to 1, got {first} .. {last}"
        )));
    }
    Ok(())
}

/// Cell index `k` with `axis[k] <= t <= axis[k+1]` and the fraction within it;
/// `t` is clamped to the axis range.
fn locate(axis: &[f64], t: f64) -> (usize, f64) {
    let n = axis.len();
    if t <= axis[0] {
        return (0, 0.0);
    }
    if t >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    let k = axis.partition_point(|&a| a <= t) - 1;
    let k = k.min(n - 2);
    (k, (t - axis[k]) / (axis[k + 1] - axis[k]))
}

/// Knot-difference derivative along `axis` of a function known at knots.
fn knot_slope(axis: &[f64], t: f64, at: impl Fn(usize) -> f64) -> f64 {
    let n = axis.len();
    let (k, frac) = locate(axis, t);
    if frac == 0.0 && k > 0 && t == axis[k] {
        (at(k + 1) - at(k - 1)) / (axis[k + 1] - axis[k - 1])
    } else if frac == 1.0 && k + 2 < n && t == axis[k + 1] {
        (at(k + 2) - at(k)) / (axis[k + 2] - axis[k])
    } else {
        (at(k + 1) - at(k)) / (axis[k + 1] - axis[k])
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

impl GridModel {
    pub fn from_table(table: GridTable) -> Result<Self> {
        check_axis("xs", &table.xs)?;
        check_axis("ws", &table.ws)?;
        check_axis("ys", &table.ys)?;
        let (nx, nw, ny) = (table.xs.len(), table.ws.len(), table.ys.len());
        if table.cdf_y.len() != nx || table.cdf_y.iter().any(|r| r.len() != nw) {
            return Err(Error::InvalidModel(format!("cdf_y must have shape [{nx}][{nw}][{ny}]")));
        }
        if table.cdf_w.len() != nx {
            return Err(Error::InvalidModel(format!("cdf_w must have shape [{nx}][{nw}]")));
        }
        let mut cdf_y = Vec::with_capacity(nx * nw * ny);
        for (i, per_x) in table.cdf_y.iter().enumerate() {
            for (j, row) in per_x.iter().enumerate() {
                if row.len() != ny {
                    return Err(Error::InvalidModel(format!(
                        "cdf_y[{i}][{j}] has {} values, expected {ny}",
                        row.len()
                    )));
                }
                check_cdf_row(&format!("cdf_y[{i}][{j}]"), row)?;
                cdf_y.extend_from_slice(row);
            }
        }
        let mut cdf_w = Vec::with_capacity(nx * nw);
        for (i, row) in table.cdf_w.iter().enumerate() {
            if row.len() != nw {
                return Err(Error::InvalidModel(format!(
                    "cdf_w[{i}] has {} values, expected {nw}",
                    row.len()
                )));
            }
            check_cdf_row(&format!("cdf_w[{i}]"), row)?;
            cdf_w.extend_from_slice(row);
        }
        Ok(GridModel {
            xs: table.xs,
            ws: table.ws,
            ys: table.ys,
            cdf_y,
            cdf_w,
            complete: None,
        })
    }

    /// Samples `model` on the given knots, renormalising each CDF row so it
    /// runs exactly from 0 to 1 across the tabulated range.
    pub fn tabulate(model: &dyn ContinuousModel, xs: &[f64], ws: &[f64], ys: &[f64]) -> Result<Self> {
        let normalise = |row: Vec<f64>| -> Result<Vec<f64>> {
            let (lo, hi) = (row[0], row[row.len() - 1]);
            if !(hi > lo) {
                return Err(Error::InvalidModel("tabulated CDF row is flat".into()));
            }
            Ok(row.into_iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect())
        };
        let mut cdf_y = Vec::new();
        let mut cdf_w = Vec::new();
        for &x in xs {
            let mut per_x = Vec::new();
            for &w in ws {
                per_x.push(normalise(ys.iter().map(|&y| model.cdf_y(y, x, w)).collect())?);
            }
            cdf_y.push(per_x);
            cdf_w.push(normalise(ws.iter().map(|&w| model.cdf_w(w, x)).collect())?);
        }
        GridModel::from_table(GridTable {
            xs: xs.to_vec(),
            ws: ws.to_vec(),
            ys: ys.to_vec(),
            cdf_y,
            cdf_w,
        })
    }

    pub fn with_completeness(mut self, complete: Option<bool>) -> Self {
        self.complete = complete;
        self
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
    pub fn ws(&self) -> &[f64] {
        &self.ws
    }
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    fn fy(&self, ix: usize, iw: usize, iy: usize) -> f64 {
        self.cdf_y[(ix * self.ws.len() + iw) * self.ys.len() + iy]
    }

    fn fw(&self, ix: usize, iw: usize) -> f64 {
        self.cdf_w[ix * self.ws.len() + iw]
    }

    /// `F(y | xs[ix], ws[iw])`, or `None` when `y` is outside the tabulated range.
    fn corner_cdf(&self, y: f64) -> Option<impl Fn(usize, usize) -> f64 + '_> {
        let n = self.ys.len();
        if y <= self.ys[0] || y >= self.ys[n - 1] {
            return None;
        }
        let (ky, t) = locate(&self.ys, y);
        Some(move |ix, iw| lerp(self.fy(ix, iw, ky), self.fy(ix, iw, ky + 1), t))
    }

    fn corner_pdf(&self, y: f64) -> Option<impl Fn(usize, usize) -> f64 + '_> {
        let n = self.ys.len();
        if y < self.ys[0] || y >= self.ys[n - 1] {
            return None;
        }
        let (ky, _) = locate(&self.ys, y);
        let dy = self.ys[ky + 1] - self.ys[ky];
        Some(move |ix, iw| (self.fy(ix, iw, ky + 1) - self.fy(ix, iw, ky)) / dy)
    }

    fn along_w(&self, w: f64, ix: usize, corner: &impl Fn(usize, usize) -> f64) -> f64 {
        let (kw, t) = locate(&self.ws, w);
        lerp(corner(ix, kw), corner(ix, kw + 1), t)
    }

    fn bilinear(&self, x: f64, w: f64, corner: impl Fn(usize, usize) -> f64) -> f64 {
        let (kx, t) = locate(&self.xs, x);
        lerp(self.along_w(w, kx, &corner), self.along_w(w, kx + 1, &corner), t)
    }

    fn bilinear_dx(&self, x: f64, w: f64, corner: impl Fn(usize, usize) -> f64) -> f64 {
        knot_slope(&self.xs, x, |ix| self.along_w(w, ix, &corner))
    }

    fn bilinear_dw(&self, x: f64, w: f64, corner: impl Fn(usize, usize) -> f64) -> f64 {
        let (kx, t) = locate(&self.xs, x);
        let slope = |ix| knot_slope(&self.ws, w, |iw| corner(ix, iw));
        lerp(slope(kx), slope(kx + 1), t)
    }

    fn w_outside(&self, w: f64) -> bool {
        w <= self.ws[0] || w >= self.ws[self.ws.len() - 1]
    }
}

impl ContinuousModel for GridModel {
    fn family(&self) -> Family {
        Family::Grid
    }

    fn support_x(&self) -> Interval {
        Interval::new(self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn support_y(&self, _x: f64, _w: f64) -> Interval {
        Interval::new(self.ys[0], self.ys[self.ys.len() - 1])
    }

    fn support_w(&self, _x: f64) -> Interval {
        Interval::new(self.ws[0], self.ws[self.ws.len() - 1])
    }

    fn cdf_y(&self, y: f64, x: f64, w: f64) -> f64 {
        match self.corner_cdf(y) {
            Some(c) => self.bilinear(x, w, c),
            None if y <= self.ys[0] => 0.0,
            None => 1.0,
        }
    }

    fn pdf_y(&self, y: f64, x: f64, w: f64) -> f64 {
        self.corner_pdf(y).map_or(0.0, |c| self.bilinear(x, w, c))
    }

    fn cdf_w(&self, w: f64, x: f64) -> f64 {
        if w <= self.ws[0] {
            0.0
        } else if w >= self.ws[self.ws.len() - 1] {
            1.0
        } else {
            self.bilinear(x, w, |ix, iw| self.fw(ix, iw))
        }
    }

    fn pdf_w(&self, w: f64, x: f64) -> f64 {
        if w < self.ws[0] || w >= self.ws[self.ws.len() - 1] {
            return 0.0;
        }
        let (kw, _) = locate(&self.ws, w);
        let dw = self.ws[kw + 1] - self.ws[kw];
        let (kx, t) = locate(&self.xs, x);
        let slope = |ix| (self.fw(ix, kw + 1) - self.fw(ix, kw)) / dw;
        lerp(slope(kx), slope(kx + 1), t)
    }

    fn y_breakpoints(&self, _x: f64, _w: f64) -> Vec<f64> {
        self.ys.clone()
    }

    fn w_breakpoints(&self, _y: f64, _x: f64) -> Vec<f64> {
        self.ws.clone()
    }

    fn x_smooth_piece(&self, x: f64) -> Interval {
        let (k, _) = locate(&self.xs, x);
        Interval::new(self.xs[k], self.xs[k + 1])
    }

    fn cdf_y_dx(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        Some(self.corner_cdf(y).map_or(0.0, |c| self.bilinear_dx(x, w, c)))
    }

    fn cdf_y_dw(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        if self.w_outside(w) {
            return Some(0.0);
        }
        Some(self.corner_cdf(y).map_or(0.0, |c| self.bilinear_dw(x, w, c)))
    }

    fn pdf_y_dx(&self, y: f64, x: f64, w: f64) -> Option<f64> {
        Some(self.corner_pdf(y).map_or(0.0, |c| self.bilinear_dx(x, w, c)))
    }

    fn cdf_w_dx(&self, w: f64, x: f64) -> Option<f64> {
        if self.w_outside(w) {
            return Some(0.0);
        }
        Some(self.bilinear_dx(x, w, |ix, iw| self.fw(ix, iw)))
    }

    fn pdf_w_dx(&self, w: f64, x: f64) -> Option<f64> {
        if w < self.ws[0] || w >= self.ws[self.ws.len() - 1] {
            return Some(0.0);
        }
        let (kw, _) = locate(&self.ws, w);
        let dw = self.ws[kw + 1] - self.ws[kw];
        Some(knot_slope(&self.xs, x, |ix| (self.fw(ix, kw + 1) - self.fw(ix, kw)) / dw))
    }

    fn partials_method(&self) -> Method {
        Method::TabulatedDifference
    }

    fn conditionally_complete(&self) -> Option<bool> {
        self.complete
    }

    fn default_region(&self) -> GridSpec {
        let inner = |axis: &[f64], n: usize| {
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            let pad = 0.1 * (hi - lo);
            AxisSpec::new(lo + pad, hi - pad, n)
        };
        GridSpec {
            y: inner(&self.ys, 25),
            x: inner(&self.xs, 25),
            w: inner(&self.ws, 9),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UniformShift;

    fn small() -> GridModel {
        GridModel::from_table(GridTable {
            xs: vec![0.0, 1.0],
            ws: vec![0.0, 1.0],
            ys: vec![0.0, 1.0, 2.0],
            cdf_y: vec![
                vec![vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 1.0]],
                vec![vec![0.0, 0.75, 1.0], vec![0.0, 0.5, 1.0]],
            ],
            cdf_w: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        })
        .unwrap()
    }

    #[test]
    fn trilinear_interpolation() {
        let g = small();
        assert_eq!(g.cdf_y(1.0, 0.0, 0.0), 0.5);
        assert_eq!(g.cdf_y(1.0, 1.0, 1.0), 0.5);
        assert!((g.cdf_y(1.0, 0.5, 0.5) - 0.5).abs() < 1e-15);
        assert!((g.cdf_y(0.5, 0.0, 0.0) - 0.25).abs() < 1e-15);
        assert_eq!(g.cdf_y(-1.0, 0.3, 0.3), 0.0);
        assert_eq!(g.cdf_y(3.0, 0.3, 0.3), 1.0);
    }

    #[test]
    fn densities_are_cell_slopes() {
        let g = small();
        assert!((g.pdf_y(0.5, 0.0, 0.0) - 0.5).abs() < 1e-15);
        assert!((g.pdf_y(1.5, 0.0, 0.0) - 0.5).abs() < 1e-15);
        assert!((g.pdf_y(0.5, 1.0, 0.0) - 0.75).abs() < 1e-15);
        assert_eq!(g.pdf_w(0.5, 0.2), 1.0);
    }

    #[test]
    fn x_partials_difference_knots() {
        let g = small();
        // F(0.5 | x, 0) moves from 0.25 to 0.375 across the x cell
        assert!((g.cdf_y_dx(0.5, 0.3, 0.0).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(g.cdf_w_dx(0.4, 0.3), Some(0.0));
        assert_eq!(g.partials_method(), Method::TabulatedDifference);
    }

    #[test]
    fn rejects_malformed_tables() {
        let mut t = GridTable {
            xs: vec![0.0, 1.0],
            ws: vec![0.0, 1.0],
            ys: vec![0.0, 1.0],
            cdf_y: vec![vec![vec![0.0, 1.0]; 2]; 2],
            cdf_w: vec![vec![0.0, 1.0]; 2],
        };
        assert!(GridModel::from_table(t.clone()).is_ok());
        t.cdf_y[1][0] = vec![0.0, 0.9];
        assert!(GridModel::from_table(t.clone()).is_err());
        t.cdf_y[1][0] = vec![0.0, 1.0];
        t.xs = vec![1.0, 0.0];
        assert!(GridModel::from_table(t).is_err());
    }

    #[test]
    fn tabulated_shift_model_tracks_source() {
        let src = UniformShift::default();
        let xs: Vec<f64> = (0..=12).map(|i| 0.5 + 0.125 * i as f64).collect();
        let ws: Vec<f64> = (0..=64).map(|i| -8.0 + 0.25 * i as f64).collect();
        let ys: Vec<f64> = (0..=80).map(|i| -10.0 + 0.25 * i as f64).collect();
        let g = GridModel::tabulate(&src, &xs, &ws, &ys).unwrap();
        let (y, x, w) = (0.3, 1.0, 0.25);
        assert!((g.cdf_y(y, x, w) - src.cdf_y(y, x, w)).abs() < 1e-2);
        assert!((g.cdf_w(w, x) - src.cdf_w(w, x)).abs() < 1e-2);
    }
}
