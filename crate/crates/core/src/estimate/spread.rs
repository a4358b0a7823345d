//! Shape of the cross-section of entity averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::alpha_from_variance_ratio;
use crate::panel::EntityAverages;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatio {
    pub ratio: f64,
    /// `None` when `ratio < 1`, which no stable coupling can produce.
    pub alpha: Option<f64>,
    pub n: usize,
}

fn sample_var(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    v.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

fn require_entities(avgs: &EntityAverages) -> Result<()> {
    if avgs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need >= 3 entities (have {})",
            avgs.len()
        )));
    }
    Ok(())
}

/// `var(mu) / var(kappa)` across entities and the coupling it implies.
pub fn empirical_variance_ratio(avgs: &EntityAverages) -> Result<VarianceRatio> {
    require_entities(avgs)?;
    let var_mu = sample_var(avgs.rows.iter().map(|a| a.mu()));
    let var_kappa = sample_var(avgs.rows.iter().map(|a| a.kappa()));
    if var_kappa <= 0.0 {
        return Err(Error::ZeroVariance("kappa across entities".into()));
    }
    let ratio = var_mu / var_kappa;
    let alpha = if ratio >= 1.0 {
        alpha_from_variance_ratio(ratio).ok()
    } else {
        None
    };
    Ok(VarianceRatio {
        ratio,
        alpha,
        n: avgs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pca2 {
    /// Direction of the leading axis in degrees, within [0, 180).
    pub principal_angle: f64,
    pub variance_share: f64,
    /// The share is too close to one half for the angle to mean anything.
    pub isotropic: bool,
    pub n: usize,
}

/// Principal axes of the 2x2 sample covariance of `(e, i)`.
///
/// The angle is flagged as unconstrained when the share falls below
/// `0.5 + 2 / sqrt(n)`.
pub fn pca2(avgs: &EntityAverages) -> Result<Pca2> {
    require_entities(avgs)?;
    let n = avgs.len();
    let (me, mi) = avgs
        .rows
        .iter()
        .fold((0.0, 0.0), |(a, b), r| (a + r.e_mean, b + r.i_mean));
    let (me, mi) = (me / n as f64, mi / n as f64);
    let (mut see, mut sii, mut sei) = (0.0, 0.0, 0.0);
    for r in &avgs.rows {
        let (de, di) = (r.e_mean - me, r.i_mean - mi);
        see += de * de;
        sii += di * di;
        sei += de * di;
    }
    let trace = see + sii;
    if trace <= 0.0 {
        return Err(Error::ZeroVariance("all entity averages coincide".into()));
    }
    let half_gap = (0.25 * (see - sii).powi(2) + sei * sei).sqrt();
    let l1 = 0.5 * trace + half_gap;
    let principal_angle = (0.5 * (2.0 * sei).atan2(see - sii).to_degrees()).rem_euclid(180.0);
    let variance_share = (l1 / trace).min(1.0);
    Ok(Pca2 {
        principal_angle,
        variance_share,
        isotropic: variance_share < 0.5 + 2.0 / (n as f64).sqrt(),
        n,
    })
}
