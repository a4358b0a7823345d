use serde::{Deserialize, Serialize};

use super::project::project;
use super::relax::{fit_relaxation_with, FitOptions, FitResult};
use crate::error::{Error, Result};
use crate::model::infer_alpha_lambda;
use crate::simulate::Trajectory;

pub const DEFAULT_P_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauAggregate {
    pub mean_tau: f64,
    /// Sample standard deviation; zero for a single survivor.
    pub sigma: f64,
    pub n: usize,
}

/// Mean and spread of `tau` over the sound fits.
pub fn screen_and_aggregate(fits: &[FitResult], p_threshold: f64) -> Result<TauAggregate> {
    let taus: Vec<f64> = fits.iter().filter(|f| f.is_sound(p_threshold)).map(|f| f.tau).collect();
    if taus.is_empty() {
        return Err(Error::EmptySurvivors(p_threshold));
    }
    let n = taus.len();
    let mean_tau = taus.iter().sum::<f64>() / n as f64;
    let sigma = if n > 1 {
        (taus.iter().map(|t| (t - mean_tau).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(TauAggregate { mean_tau, sigma, n })
}

/// Fit outcome for one trajectory along one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityFit {
    pub entity: String,
    pub theta: f64,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

/// Fits every trajectory projected at `theta`; failures are kept with their
/// error message.
pub fn fit_along(trajs: &[Trajectory], theta: f64, opts: &FitOptions) -> Vec<EntityFit> {
    trajs
        .iter()
        .map(|tr| {
            let outcome = project(tr, theta).and_then(|s| fit_relaxation_with(&s, opts));
            match outcome {
                Ok(f) => EntityFit {
                    entity: tr.entity_id.clone(),
                    theta: f.theta,
                    fit: Some(f),
                    error: None,
                },
                Err(e) => EntityFit {
                    entity: tr.entity_id.clone(),
                    theta,
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSummary {
    pub theta: f64,
    pub p_threshold: f64,
    pub fits_mu: Vec<EntityFit>,
    pub fits_kappa: Vec<EntityFit>,
    pub tau_mu: Option<TauAggregate>,
    pub tau_kappa: Option<TauAggregate>,
    /// `(alpha, lambda)` when both aggregates exist and are ordered.
    pub inferred: Option<(f64, f64)>,
}

/// Project at `theta` and `theta + 90`, fit, screen, aggregate, and invert the
/// time constants.
pub fn relaxation_pipeline(trajs: &[Trajectory], theta: f64, p_threshold: f64, opts: &FitOptions) -> RelaxationSummary {
    let fits_mu = fit_along(trajs, theta, opts);
    let fits_kappa = fit_along(trajs, theta + 90.0, opts);
    let collect = |v: &[EntityFit]| v.iter().filter_map(|f| f.fit.clone()).collect::<Vec<_>>();
    let tau_mu = screen_and_aggregate(&collect(&fits_mu), p_threshold).ok();
    let tau_kappa = screen_and_aggregate(&collect(&fits_kappa), p_threshold).ok();
    let inferred = match (tau_mu, tau_kappa) {
        (Some(m), Some(k)) => infer_alpha_lambda(m.mean_tau, k.mean_tau).ok(),
        _ => None,
    };
    RelaxationSummary {
        theta,
        p_threshold,
        fits_mu,
        fits_kappa,
        tau_mu,
        tau_kappa,
        inferred,
    }
}
