//! Tally of sound relaxation fits against projection angle, summarised by a
//! least-squares parabola.
//!
//! The tally at `theta` adds the sound fits at `theta` and `theta + 90`, so it
//! repeats with period 90 degrees. When the grid spans a whole period the
//! parabola is fitted on the 90-degree window centred on the smoothed peak;
//! otherwise it is fitted over the grid as given.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::aggregate::fit_along;
use super::ols::lstsq;
use super::relax::FitOptions;
use crate::error::{Error, Result};
use crate::simulate::Trajectory;
use crate::stats::nested_f_test;

const PERIOD: f64 = 90.0;
const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularScan {
    pub thetas: Vec<f64>,
    pub counts: Vec<usize>,
    /// Abscissae actually used for the parabola, in degrees.
    pub window_thetas: Vec<f64>,
    pub window_counts: Vec<usize>,
    /// `count ~ a theta^2 + b theta + c` over the window.
    pub parabola: (f64, f64, f64),
    pub theta_star: f64,
    pub fit_p_value: f64,
    /// False when the best parabola opens upward; `theta_star` is then the
    /// better window endpoint rather than a vertex.
    pub concave: bool,
    pub periodic: bool,
}

impl AngularScan {
    /// Fitted parabola at `theta`, mapped into the fitting window first.
    pub fn parabola_at(&self, theta: f64) -> f64 {
        let x = if self.periodic {
            let lo = self.window_thetas[0];
            lo + (theta - lo).rem_euclid(PERIOD)
        } else {
            theta
        };
        let (a, b, c) = self.parabola;
        a * x * x + b * x + c
    }
}

/// Number of sound fits per grid angle, conjugate direction included.
pub fn sound_counts(trajs: &[Trajectory], thetas: &[f64], p_threshold: f64, opts: &FitOptions) -> Vec<usize> {
    let count = |theta: f64| {
        fit_along(trajs, theta, opts)
            .iter()
            .filter(|f| f.fit.as_ref().is_some_and(|r| r.is_sound(p_threshold)))
            .count()
    };
    thetas.iter().map(|&t| count(t) + count(t + PERIOD)).collect()
}

pub fn angular_scan(trajs: &[Trajectory], thetas: &[f64], p_threshold: f64) -> Result<AngularScan> {
    angular_scan_with(trajs, thetas, p_threshold, &FitOptions::default())
}

pub fn angular_scan_with(
    trajs: &[Trajectory],
    thetas: &[f64],
    p_threshold: f64,
    opts: &FitOptions,
) -> Result<AngularScan> {
    if trajs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "angular scan needs >= 2 trajectories (have {})",
            trajs.len()
        )));
    }
    if thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams("non-finite angle in scan grid".into()));
    }
    let counts = sound_counts(trajs, thetas, p_threshold, opts);
    summarise(thetas, &counts)
}

/// Fits the parabola to an existing tally.
pub fn summarise(thetas: &[f64], counts: &[usize]) -> Result<AngularScan> {
    if thetas.len() != counts.len() {
        return Err(Error::InvalidParams("grid and counts differ in length".into()));
    }
    let lo = thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if thetas.is_empty() || hi - lo < ANGLE_TOL {
        return Err(Error::DegenerateScan("grid holds a single angle".into()));
    }
    if counts.iter().all(|c| *c == counts[0]) {
        return Err(Error::DegenerateScan(format!("every count equals {}", counts[0])));
    }

    let (window_thetas, window_counts, periodic) = match periodic_residues(thetas, counts) {
        Some((res, cnt)) => {
            let (w, c) = centred_window(&res, &cnt);
            (w, c, true)
        }
        None => {
            let mut pairs: Vec<(f64, usize)> = thetas.iter().copied().zip(counts.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            (
                pairs.iter().map(|p| p.0).collect(),
                pairs.iter().map(|p| p.1).collect(),
                false,
            )
        }
    };
    let distinct = window_thetas.windows(2).filter(|w| w[1] - w[0] > ANGLE_TOL).count() + 1;
    if distinct < 3 || window_thetas.len() < 4 {
        return Err(Error::DegenerateScan(format!(
            "{distinct} distinct angles cannot support a parabola test"
        )));
    }

    // fit in coordinates centred on the window for conditioning
    let n = window_thetas.len();
    let w_lo = window_thetas[0];
    let w_hi = window_thetas[n - 1];
    let centre = 0.5 * (w_lo + w_hi);
    let x = DMatrix::from_fn(n, 3, |r, c| (window_thetas[r] - centre).powi(c as i32));
    let y = DVector::from_iterator(n, window_counts.iter().map(|c| *c as f64));
    let (beta, _) = lstsq(&x, &y)?;
    let rss_full = (&y - &x * &beta).norm_squared();
    let mean = y.mean();
    let rss_null: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let fit_p_value = nested_f_test(rss_null, rss_full, 1, 3, n);

    let (c0, c1, c2) = (beta[0], beta[1], beta[2]);
    let value = |d: f64| c0 + c1 * d + c2 * d * d;
    let concave = c2 < 0.0;
    let (d_lo, d_hi) = (w_lo - centre, w_hi - centre);
    let d_star = if concave {
        (-c1 / (2.0 * c2)).clamp(d_lo, d_hi)
    } else if value(d_lo) >= value(d_hi) {
        d_lo
    } else {
        d_hi
    };
    let mut theta_star = centre + d_star;
    if periodic {
        theta_star = theta_star.rem_euclid(PERIOD);
        if PERIOD - theta_star < ANGLE_TOL {
            theta_star = 0.0;
        }
    }
    let parabola = (c2, c1 - 2.0 * c2 * centre, c0 - c1 * centre + c2 * centre * centre);

    Ok(AngularScan {
        thetas: thetas.to_vec(),
        counts: counts.to_vec(),
        window_thetas,
        window_counts,
        parabola,
        theta_star,
        fit_p_value,
        concave,
        periodic,
    })
}

/// Distinct residues mod 90 with their counts, when the grid is a regular
/// lattice covering the full period.
fn periodic_residues(thetas: &[f64], counts: &[usize]) -> Option<(Vec<f64>, Vec<usize>)> {
    let mut res: Vec<(f64, usize)> = Vec::new();
    for (t, c) in thetas.iter().zip(counts) {
        let mut r = t.rem_euclid(PERIOD);
        if PERIOD - r < ANGLE_TOL {
            r = 0.0;
        }
        if !res.iter().any(|(q, _)| (q - r).abs() < ANGLE_TOL) {
            res.push((r, *c));
        }
    }
    if res.len() < 3 {
        return None;
    }
    res.sort_by(|a, b| a.0.total_cmp(&b.0));
    let step = PERIOD / res.len() as f64;
    let regular = res
        .iter()
        .enumerate()
        .all(|(k, (r, _))| (r - res[0].0 - k as f64 * step).abs() < 1e-6);
    regular.then(|| (res.iter().map(|p| p.0).collect(), res.iter().map(|p| p.1).collect()))
}

/// Angles unwrapped into the closed 90-degree window centred on the peak of
/// the 3-point circular moving sum. The point at the lower edge is repeated at
/// the upper edge so the window is symmetric.
fn centred_window(res: &[f64], cnt: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let m = res.len();
    let smooth: Vec<usize> = (0..m)
        .map(|k| cnt[(k + m - 1) % m] + cnt[k] + cnt[(k + 1) % m])
        .collect();
    let peak = (0..m).fold(0, |best, k| if smooth[k] > smooth[best] { k } else { best });
    let centre = res[peak];
    let half = PERIOD / 2.0;

    let mut pts: Vec<(f64, usize)> = res
        .iter()
        .zip(cnt)
        .map(|(r, c)| {
            let mut d = (r - centre + half).rem_euclid(PERIOD) - half;
            if d > half - ANGLE_TOL {
                d -= PERIOD;
            }
            (centre + d, *c)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if (pts[0].0 - (centre - half)).abs() < ANGLE_TOL {
        pts.push((centre + half, pts[0].1));
    }
    (pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())
}
