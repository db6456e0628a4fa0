//! Least-squares coefficients of `Y` on `X` with and without `W`, and the
//! residual of `β_yx = β_yx.w + β_yw.x β_wx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CochranDecomposition {
    pub beta_yx: f64,
    pub beta_yx_w: f64,
    pub beta_yw_x: f64,
    pub beta_wx: f64,
    /// `β_yx - (β_yx.w + β_yw.x β_wx)`
    pub residual: f64,
}

/// Covariance matrix ordered `(Y, X, W)`.
pub fn cochran_decompose(cov: &[[f64; 3]; 3]) -> Result<CochranDecomposition> {
    let invalid = |m: &str| Error::InvalidCovariance(m.to_string());
    if cov.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite entry"));
    }
    let scale = (0..3).map(|i| cov[i][i].abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..3 {
        if cov[i][i] < 0.0 {
            return Err(invalid("negative variance"));
        }
        for j in 0..i {
            if (cov[i][j] - cov[j][i]).abs() > 1e-9 * scale {
                return Err(invalid("not symmetric"));
            }
        }
    }
    let [[vyy, vyx, vyw], [_, vxx, vxw], [_, _, vww]] = *cov;
    let minors = [
        vyy * vxx - vyx * vyx,
        vyy * vww - vyw * vyw,
        vxx * vww - vxw * vxw,
        vyy * (vxx * vww - vxw * vxw) - vyx * (vyx * vww - vxw * vyw) + vyw * (vyx * vxw - vxx * vyw),
    ];
    if minors[..3].iter().any(|&m| m < -1e-12 * scale * scale) || minors[3] < -1e-12 * scale.powi(3) {
        return Err(invalid("not positive semidefinite"));
    }
    if vxx <= 0.0 {
        return Err(Error::Collinear);
    }
    let det = minors[2];
    if det <= 1e-12 * vxx * vww {
        return Err(Error::Collinear);
    }
    let beta_yx_w = (vyx * vww - vyw * vxw) / det;
    let beta_yw_x = (vyw * vxx - vyx * vxw) / det;
    let beta_yx = vyx / vxx;
    let beta_wx = vxw / vxx;
    Ok(CochranDecomposition {
        beta_yx,
        beta_yx_w,
        beta_yw_x,
        beta_wx,
        residual: beta_yx - (beta_yx_w + beta_yw_x * beta_wx),
    })
}

/// Sample covariance (divisor `n - 1`) of rows `(y, x, w)`.
pub fn covariance_from_sample(rows: &[[f64; 3]]) -> Result<[[f64; 3]; 3]> {
    if rows.len() < 3 {
        return Err(Error::InvalidCovariance("need at least 3 rows".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidCovariance("non-finite sample value".into()));
    }
    let n = rows.len() as f64;
    let mut mean = [0.0; 3];
    for r in rows {
        for k in 0..3 {
            mean[k] += r[k] / n;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for r in rows {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    Ok(cov)
}

pub fn cochran_from_sample(rows: &[[f64; 3]]) -> Result<CochranDecomposition> {
    cochran_decompose(&covariance_from_sample(rows)?)
}
