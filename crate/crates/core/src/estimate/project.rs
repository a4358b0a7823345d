use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::Trajectory;

/// Trajectory projected onto the unit vector at angle `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedSeries {
    pub entity: String,
    /// Degrees in [0, 180).
    pub theta: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// `value = e cos(theta) + i sin(theta)`.
///
/// `theta` is reduced to [0, 180); an angle outside that range is projected on
/// the equivalent axis, which flips the sign of the series but not its shape.
pub fn project(traj: &Trajectory, theta: f64) -> Result<ProjectedSeries> {
    if !theta.is_finite() {
        return Err(Error::InvalidParams(format!("theta = {theta} must be finite")));
    }
    let mut theta = theta.rem_euclid(180.0);
    if theta >= 180.0 {
        theta = 0.0;
    }
    let (s, c) = theta.to_radians().sin_cos();
    let (s, c) = (snap(s), snap(c));
    Ok(ProjectedSeries {
        entity: traj.entity_id.clone(),
        theta,
        times: traj.times.clone(),
        values: traj.points.iter().map(|p| p.e * c + p.i * s).collect(),
    })
}

/// Rounds the sin/cos of multiples of 90 degrees to exact 0 and 1.
fn snap(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else if (x.abs() - 1.0).abs() < 1e-15 {
        x.signum()
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhasePoint;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn traj(points: Vec<PhasePoint>) -> Trajectory {
        let times = (0..points.len()).map(|k| k as f64).collect();
        Trajectory::new("X", times, points).unwrap()
    }

    #[test]
    fn axis_and_diagonal_projections() {
        let t = traj(vec![PhasePoint::new(1.0, 2.0), PhasePoint::new(-3.0, 0.5)]);
        assert_eq!(project(&t, 0.0).unwrap().values, vec![1.0, -3.0]);

        let t = traj(vec![PhasePoint::new(1.0, 1.0), PhasePoint::new(1.0, 0.0)]);
        let s = project(&t, 45.0).unwrap();
        assert_abs_diff_eq!(s.values[0], 2f64.sqrt(), epsilon = 1e-15);

        // kappa / sqrt(2) for the point (1, 0)
        let s = project(&t, 135.0).unwrap();
        assert_abs_diff_eq!(s.values[1], -1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn angles_are_reduced() {
        let t = traj(vec![PhasePoint::new(1.0, 0.0), PhasePoint::new(0.0, 1.0)]);
        let s = project(&t, 180.0).unwrap();
        assert_eq!(s.theta, 0.0);
        assert!(project(&t, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_linear(
            a in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..8),
            theta in 0.0f64..180.0,
        ) {
            let pa: Vec<PhasePoint> = a.iter().map(|(e, i)| PhasePoint::new(*e, *i)).collect();
            let pb: Vec<PhasePoint> = a.iter().map(|(e, i)| PhasePoint::new(i - 1.0, e * 0.5)).collect();
            let sum: Vec<PhasePoint> = pa.iter().zip(&pb).map(|(x, y)| *x + *y).collect();
            let (sa, sb, ss) = (
                project(&traj(pa), theta).unwrap(),
                project(&traj(pb), theta).unwrap(),
                project(&traj(sum), theta).unwrap(),
            );
            for k in 0..ss.values.len() {
                prop_assert!((ss.values[k] - sa.values[k] - sb.values[k]).abs() < 1e-12);
            }
        }
    }
}
