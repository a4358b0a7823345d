//! Exponential relaxation fit `x(t) = offset + amplitude * exp(-(t - t0) / tau)`
//! by damped Gauss-Newton (Levenberg-Marquardt), with an F-test against the
//! constant-mean model.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::project::ProjectedSeries;
use crate::error::{Error, Result};
use crate::stats::nested_f_test;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub tau_min: f64,
    pub tau_max: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tau_min: 0.5,
            tau_max: 200.0,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Converged,
    /// `tau` was pinned at one of its bounds.
    TauAtBound,
    /// The series is constant; the exponential has nothing to explain.
    NullModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub entity: String,
    pub theta: f64,
    pub tau: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub p_value: f64,
    pub rms_residual: f64,
    pub n: usize,
    pub iterations: usize,
    pub status: FitStatus,
}

impl FitResult {
    /// Significant at `p_threshold` with `tau` strictly inside its bounds.
    pub fn is_sound(&self, p_threshold: f64) -> bool {
        self.status == FitStatus::Converged && self.p_value < p_threshold && self.tau.is_finite()
    }
}

pub fn fit_relaxation(s: &ProjectedSeries) -> Result<FitResult> {
    fit_relaxation_with(s, &FitOptions::default())
}

pub fn fit_relaxation_with(s: &ProjectedSeries, opts: &FitOptions) -> Result<FitResult> {
    let n = s.values.len();
    if n < 5 || s.times.len() != n {
        return Err(Error::InsufficientData(format!(
            "relaxation fit needs >= 5 points (have {n})"
        )));
    }
    let t0 = s.times[0];
    let dt: Vec<f64> = s.times.iter().map(|t| t - t0).collect();
    let y = &s.values;

    let mean = y.iter().sum::<f64>() / n as f64;
    let rss_null: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let make = |tau: f64, amplitude: f64, offset: f64, rss: f64, iterations: usize, status: FitStatus| FitResult {
        entity: s.entity.clone(),
        theta: s.theta,
        tau,
        amplitude,
        offset,
        p_value: nested_f_test(rss_null, rss, 1, 3, n),
        rms_residual: (rss / n as f64).sqrt(),
        n,
        iterations,
        status,
    };

    let span = dt[n - 1];
    let tau0 = (0.5 * span).clamp(opts.tau_min, opts.tau_max);
    if y.iter().all(|v| *v == y[0]) || rss_null <= 1e-28 * n as f64 * mean * mean {
        return Ok(FitResult {
            p_value: 1.0,
            ..make(tau0, 0.0, mean, 0.0, 0, FitStatus::NullModel)
        });
    }

    let mut p = Vector3::new(y[n - 1], y[0] - y[n - 1], tau0);
    let residuals = |p: &Vector3<f64>, out: &mut Vec<f64>| -> f64 {
        out.clear();
        let mut ss = 0.0;
        for (t, v) in dt.iter().zip(y) {
            let r = p[0] + p[1] * (-t / p[2]).exp() - v;
            ss += r * r;
            out.push(r);
        }
        ss
    };

    let mut r = Vec::with_capacity(n);
    let mut trial_r = Vec::with_capacity(n);
    let mut cost = residuals(&p, &mut r);
    let mut damping = 1e-3;
    let mut iterations = 0;
    let mut converged = cost == 0.0;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (k, t) in dt.iter().enumerate() {
            let ex = (-t / p[2]).exp();
            let row = Vector3::new(1.0, ex, p[1] * ex * t / (p[2] * p[2]));
            jtj += row * row.transpose();
            jtr += row * r[k];
        }
        let diag_floor = 1e-12 * jtj.diagonal().max().max(1e-300);

        let mut accepted = false;
        while damping < 1e16 {
            let mut lhs = jtj;
            for d in 0..3 {
                lhs[(d, d)] += damping * jtj[(d, d)].max(diag_floor);
            }
            let step = match lhs.cholesky() {
                Some(ch) => ch.solve(&(-jtr)),
                None => {
                    damping *= 4.0;
                    continue;
                }
            };
            let mut trial = p + step;
            if !(opts.tau_min..=opts.tau_max).contains(&trial[2]) {
                // on a bound the linear parameters are solved exactly
                trial[2] = trial[2].clamp(opts.tau_min, opts.tau_max);
                let (offset, amplitude) = linear_part(&dt, y, trial[2]);
                trial[0] = offset;
                trial[1] = amplitude;
            }
            let trial_cost = residuals(&trial, &mut trial_r);
            if trial_cost.is_finite() && trial_cost < cost {
                let moved = (trial - p)
                    .iter()
                    .zip(p.iter())
                    .all(|(d, v)| d.abs() <= 1e-12 * (v.abs() + 1e-12));
                let gain = cost - trial_cost;
                p = trial;
                std::mem::swap(&mut r, &mut trial_r);
                cost = trial_cost;
                damping = (damping / 3.0).max(1e-15);
                accepted = true;
                if moved || gain <= 1e-15 * cost || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            // no descent direction at working precision: a minimum
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(iterations));
    }

    let pinned = p[2] <= opts.tau_min * (1.0 + 1e-9) || p[2] >= opts.tau_max * (1.0 - 1e-9);
    let status = if pinned {
        FitStatus::TauAtBound
    } else {
        FitStatus::Converged
    };
    Ok(make(p[2], p[1], p[0], cost, iterations, status))
}

/// Least-squares `(offset, amplitude)` for a fixed `tau`.
fn linear_part(dt: &[f64], y: &[f64], tau: f64) -> (f64, f64) {
    let n = y.len() as f64;
    let ex: Vec<f64> = dt.iter().map(|t| (-t / tau).exp()).collect();
    let mx = ex.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = ex.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = ex.iter().zip(y).map(|(x, v)| (x - mx) * (v - my)).sum();
    let amplitude = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - amplitude * mx, amplitude)
}
