//! Ordinary least squares through a thin QR factorisation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::t_two_sided;

/// Pivots of `R` below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    pub coefficients: Vec<Coefficient>,
    pub intercept: Option<Coefficient>,
    pub r_squared: f64,
    pub n: usize,
    pub rss: f64,
    pub df_residual: usize,
}

impl OlsResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Largest p-value over the named covariates.
    pub fn max_p_value(&self) -> f64 {
        self.coefficients.iter().map(|c| c.p_value).fold(0.0, f64::max)
    }
}

/// Least-squares coefficients and `(X'X)^-1` for a full-rank design.
pub(crate) fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let k = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if scale == 0.0 || (0..k).any(|j| r[(j, j)].abs() <= RANK_TOL * scale) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::RankDeficient)?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok((beta, xtx_inv))
}

/// Regresses `y` on the named columns, optionally with an intercept.
///
/// With an intercept `r_squared` is the centred coefficient of determination;
/// without one it is the uncentred version.
pub fn ols(y: &[f64], covariates: &[(String, Vec<f64>)], intercept: bool) -> Result<OlsResult> {
    let n = y.len();
    let k = covariates.len() + usize::from(intercept);
    if k == 0 {
        return Err(Error::InvalidParams("no regressors".into()));
    }
    if let Some((name, _)) = covariates.iter().find(|(_, c)| c.len() != n) {
        return Err(Error::InvalidParams(format!("covariate {name} length differs from y")));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!("{n} observations for {k} parameters")));
    }
    if y.iter()
        .chain(covariates.iter().flat_map(|(_, c)| c))
        .any(|v| !v.is_finite())
    {
        return Err(Error::InvalidParams("non-finite regression input".into()));
    }

    let x = DMatrix::from_fn(n, k, |row, col| match (intercept, col) {
        (true, 0) => 1.0,
        (true, c) => covariates[c - 1].1[row],
        (false, c) => covariates[c].1[row],
    });
    let yv = DVector::from_column_slice(y);
    let (beta, xtx_inv) = lstsq(&x, &yv)?;

    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let df = n - k;
    let sigma2 = rss / df as f64;
    let tss = if intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let coef = |j: usize, name: &str| {
        let estimate = beta[j];
        let std_error = (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt();
        let t_value = if std_error > 0.0 {
            estimate / std_error
        } else if estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(estimate)
        };
        Coefficient {
            name: name.to_string(),
            estimate,
            std_error,
            t_value,
            p_value: t_two_sided(t_value, df as f64),
        }
    };
    let offset = usize::from(intercept);
    Ok(OlsResult {
        intercept: intercept.then(|| coef(0, "intercept")),
        coefficients: covariates
            .iter()
            .enumerate()
            .map(|(j, (name, _))| coef(j + offset, name))
            .collect(),
        r_squared,
        n,
        rss,
        df_residual: df,
    })
}
