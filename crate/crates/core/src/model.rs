//! Closed-form mathematics of the coupled institutions/economy system
//!
//! ```text
//! dE/dt = lambda (-E + alpha I) + f
//! dI/dt = lambda (alpha E - gamma I) + g
//! ```
//!
//! The coupling on I is rescaled so that both off-diagonal entries share the
//! single coefficient `alpha`; a separate beta never appears.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for linear-solve residuals.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    alpha: f64,
    lambda: f64,
    gamma: f64,
}

impl SystemParams {
    /// Validates `lambda > 0`, `alpha >= 0`, `gamma > 0`. The saddle regime is
    /// representable; operations that need stability check it themselves.
    pub fn new(alpha: f64, lambda: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && lambda.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if alpha < 0.0 {
            return Err(Error::InvalidParams(format!("alpha = {alpha} must be >= 0")));
        }
        if lambda <= 0.0 {
            return Err(Error::InvalidParams(format!("lambda = {lambda} must be > 0")));
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidParams(format!("gamma = {gamma} must be > 0")));
        }
        Ok(Self { alpha, lambda, gamma })
    }

    /// Equal dissipation on both variables.
    pub fn symmetric(alpha: f64, lambda: f64) -> Result<Self> {
        Self::new(alpha, lambda, 1.0)
    }

    /// Like [`SystemParams::new`] but additionally rejects anything outside the
    /// stable regime.
    pub fn stable(alpha: f64, lambda: f64, gamma: f64) -> Result<Self> {
        let p = Self::new(alpha, lambda, gamma)?;
        p.require_stable()?;
        Ok(p)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn regime(&self) -> Regime {
        stability_classify(self)
    }

    pub fn require_stable(&self) -> Result<()> {
        match self.regime() {
            Regime::StableNode => Ok(()),
            Regime::Marginal => Err(Error::Singular(self.alpha * self.alpha)),
            Regime::Saddle => Err(Error::Unstable {
                alpha_sq: self.alpha * self.alpha,
                gamma: self.gamma,
            }),
        }
    }

    /// Entries of the (symmetric) system matrix `lambda [[-1, alpha], [alpha, -gamma]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let l = self.lambda;
        [[-l, l * self.alpha], [l * self.alpha, -l * self.gamma]]
    }
}

/// Per-polity constant forcing on E and I, in 1/year.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ForcingTerms {
    pub f: f64,
    pub g: f64,
}

impl ForcingTerms {
    pub fn new(f: f64, g: f64) -> Self {
        Self { f, g }
    }

    pub fn zero() -> Self {
        Self::default()
    }
}

/// A polity's state: economic performance `e` and institutions `i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub e: f64,
    pub i: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { e: 0.0, i: 0.0 };

    pub fn new(e: f64, i: f64) -> Self {
        Self { e, i }
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.i.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.e.hypot(self.i)
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.e - other.e).hypot(self.i - other.i)
    }

    pub fn eigen(&self) -> EigenCoords {
        to_eigen(*self)
    }
}

impl std::ops::Add for PhasePoint {
    type Output = PhasePoint;
    fn add(self, rhs: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.e + rhs.e, self.i + rhs.i)
    }
}

impl std::ops::Sub for PhasePoint {
    type Output = PhasePoint;
    fn sub(self, rhs: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.e - rhs.e, self.i - rhs.i)
    }
}

impl std::ops::Mul<f64> for PhasePoint {
    type Output = PhasePoint;
    fn mul(self, k: f64) -> PhasePoint {
        PhasePoint::new(self.e * k, self.i * k)
    }
}

/// Diagonal coordinates: `mu = i + e`, `kappa = i - e`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenCoords {
    pub mu: f64,
    pub kappa: f64,
}

pub fn to_eigen(p: PhasePoint) -> EigenCoords {
    EigenCoords {
        mu: p.i + p.e,
        kappa: p.i - p.e,
    }
}

pub fn from_eigen(c: EigenCoords) -> PhasePoint {
    PhasePoint {
        e: (c.mu - c.kappa) / 2.0,
        i: (c.mu + c.kappa) / 2.0,
    }
}

/// Eigenstructure of a stable system. The `mu` mode is the slow one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    pub eigenvalue_mu: f64,
    pub eigenvalue_kappa: f64,
    pub tau_mu: f64,
    pub tau_kappa: f64,
    /// Direction of the slow eigenvector in the (E, I) plane, degrees in [0, 180).
    pub axis_angle: f64,
    /// Both eigenvalues coincide; `axis_angle` is reported as 45 by convention.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub e0: f64,
    pub i0: f64,
    pub mu0: f64,
    pub kappa0: f64,
}

impl FixedPoint {
    pub fn point(&self) -> PhasePoint {
        PhasePoint::new(self.e0, self.i0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    StableNode,
    Saddle,
    Marginal,
}

/// Time constants of the equal-dissipation system:
/// `tau_mu = 1/(lambda (1 - alpha))`, `tau_kappa = 1/(lambda (1 + alpha))`.
pub fn time_constants(params: &SystemParams) -> Result<(f64, f64)> {
    if params.gamma != 1.0 {
        return Err(Error::InvalidParams(format!(
            "time_constants requires gamma = 1 (got {}); use eigen_general",
            params.gamma
        )));
    }
    if params.alpha >= 1.0 {
        return Err(Error::Unstable {
            alpha_sq: params.alpha * params.alpha,
            gamma: params.gamma,
        });
    }
    let l = params.lambda;
    Ok((1.0 / (l * (1.0 - params.alpha)), 1.0 / (l * (1.0 + params.alpha))))
}

pub fn eigen_general(params: &SystemParams) -> Result<EigenSolution> {
    params.require_stable()?;
    let (a, l, g) = (params.alpha, params.lambda, params.gamma);
    let disc = ((1.0 - g).powi(2) + 4.0 * a * a).sqrt();
    let slow = 0.5 * l * (-(1.0 + g) + disc);
    let fast = 0.5 * l * (-(1.0 + g) - disc);

    let degenerate = disc == 0.0;
    let axis_angle = if degenerate {
        45.0
    } else {
        slow_axis_angle(&params.matrix(), slow)
    };

    Ok(EigenSolution {
        eigenvalue_mu: slow,
        eigenvalue_kappa: fast,
        tau_mu: -1.0 / slow,
        tau_kappa: -1.0 / fast,
        axis_angle,
        degenerate,
    })
}

/// Angle of the eigenvector of symmetric `m` for eigenvalue `nu`, taken from
/// whichever row of `m - nu I` is better conditioned.
fn slow_axis_angle(m: &[[f64; 2]; 2], nu: f64) -> f64 {
    // Row 1: (m00 - nu) x + m01 y = 0 -> (m01, nu - m00)
    // Row 2: m10 x + (m11 - nu) y = 0 -> (nu - m11, m10)
    let v1 = (m[0][1], nu - m[0][0]);
    let v2 = (nu - m[1][1], m[1][0]);
    let (x, y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
    let deg = y.atan2(x).to_degrees();
    let deg = deg.rem_euclid(180.0);
    if deg >= 180.0 - 1e-12 {
        0.0
    } else {
        deg
    }
}

/// Equilibrium of the forced system, from the 2x2 linear solve.
///
/// `kappa0` carries the sign produced by the solve, `(g - f) / (lambda (1 + alpha))`
/// when `gamma = 1`.
pub fn fixed_point(params: &SystemParams, forcing: &ForcingTerms) -> Result<FixedPoint> {
    params.require_stable()?;
    let m = params.matrix();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < f64::EPSILON * params.lambda * params.lambda {
        return Err(Error::Singular(params.alpha * params.alpha));
    }
    let (r0, r1) = (-forcing.f, -forcing.g);
    let e0 = (m[1][1] * r0 - m[0][1] * r1) / det;
    let i0 = (m[0][0] * r1 - m[1][0] * r0) / det;
    let c = to_eigen(PhasePoint::new(e0, i0));
    Ok(FixedPoint {
        e0,
        i0,
        mu0: c.mu,
        kappa0: c.kappa,
    })
}

/// `((1 + alpha) / (1 - alpha))^2`, the predicted ratio of equilibrium
/// variances along mu and kappa.
pub fn variance_ratio(alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!(
            "variance_ratio requires 0 <= alpha < 1 (got {alpha})"
        )));
    }
    Ok(((1.0 + alpha) / (1.0 - alpha)).powi(2))
}

pub fn alpha_from_variance_ratio(r: f64) -> Result<f64> {
    if !r.is_finite() || r < 1.0 {
        return Err(Error::InvalidParams(format!(
            "variance ratio {r} < 1: mu and kappa axes look swapped"
        )));
    }
    let s = r.sqrt();
    Ok((s - 1.0) / (s + 1.0))
}

/// Inverts the time-constant relations: returns `(alpha, lambda)`.
pub fn infer_alpha_lambda(tau_mu: f64, tau_kappa: f64) -> Result<(f64, f64)> {
    if !(tau_kappa > 0.0 && tau_mu.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "time constants must be positive and finite (tau_mu = {tau_mu}, tau_kappa = {tau_kappa})"
        )));
    }
    if tau_mu < tau_kappa {
        return Err(Error::InvalidParams(format!(
            "tau_mu = {tau_mu} < tau_kappa = {tau_kappa}"
        )));
    }
    let rho = tau_mu / tau_kappa;
    let alpha = (rho - 1.0) / (rho + 1.0);
    let lambda = 0.5 * (1.0 / tau_mu + 1.0 / tau_kappa);
    Ok((alpha, lambda))
}

pub fn stability_classify(params: &SystemParams) -> Regime {
    classify_raw(params.alpha, params.lambda, params.gamma)
}

/// Classification that also accepts the undamped limit `lambda = 0` (or
/// `gamma = 0`), where any positive coupling yields a saddle.
pub fn classify_raw(alpha: f64, lambda: f64, gamma: f64) -> Regime {
    if lambda == 0.0 {
        return if alpha != 0.0 { Regime::Saddle } else { Regime::Marginal };
    }
    let a2 = alpha * alpha;
    if a2 < gamma {
        Regime::StableNode
    } else if a2 > gamma {
        Regime::Saddle
    } else {
        Regime::Marginal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(a: f64, l: f64, g: f64) -> SystemParams {
        SystemParams::new(a, l, g).unwrap()
    }

    /// Independent brute-force 2x2 eigensolver: power iteration on a shifted
    /// matrix for the dominant (slow) eigenpair.
    fn power_iteration(m: [[f64; 2]; 2]) -> (f64, f64, f64) {
        let shift = m[0][0].abs() + m[0][1].abs() + m[1][0].abs() + m[1][1].abs();
        let b = [[m[0][0] + shift, m[0][1]], [m[1][0], m[1][1] + shift]];
        let (mut x, mut y) = (1.0f64, 0.3f64);
        for _ in 0..5000 {
            let nx = b[0][0] * x + b[0][1] * y;
            let ny = b[1][0] * x + b[1][1] * y;
            let n = nx.hypot(ny);
            x = nx / n;
            y = ny / n;
        }
        let rq = x * (m[0][0] * x + m[0][1] * y) + y * (m[1][0] * x + m[1][1] * y);
        let trace = m[0][0] + m[1][1];
        let ang = y.atan2(x).to_degrees().rem_euclid(180.0);
        (rq, trace - rq, ang)
    }

    #[test]
    fn eigen_coordinates() {
        let c = to_eigen(PhasePoint::new(0.0, 0.0));
        assert_eq!((c.mu, c.kappa), (0.0, 0.0));
        let c = to_eigen(PhasePoint::new(1.0, 1.0));
        assert_eq!((c.mu, c.kappa), (2.0, 0.0));
        let c = to_eigen(PhasePoint::new(1.0, 0.0));
        assert_eq!((c.mu, c.kappa), (1.0, -1.0));

        assert_eq!(
            from_eigen(EigenCoords { mu: 2.0, kappa: 0.0 }),
            PhasePoint::new(1.0, 1.0)
        );
        assert_eq!(from_eigen(EigenCoords { mu: 0.0, kappa: 0.0 }), PhasePoint::ORIGIN);
        assert_eq!(
            from_eigen(EigenCoords { mu: 1.0, kappa: -1.0 }),
            PhasePoint::new(1.0, 0.0)
        );
    }

    #[test]
    fn time_constant_examples() {
        let (tm, tk) = time_constants(&p(0.5, 0.2, 1.0)).unwrap();
        assert_abs_diff_eq!(tm, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tk, 10.0 / 3.0, epsilon = 1e-12);

        let (tm, tk) = time_constants(&p(0.0, 0.2, 1.0)).unwrap();
        assert_abs_diff_eq!(tm, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tk, 5.0, epsilon = 1e-12);

        // 1/(0.2*0.1) and 1/(0.2*1.9)
        let (tm, tk) = time_constants(&p(0.9, 0.2, 1.0)).unwrap();
        assert_abs_diff_eq!(tm, 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(tk, 2.631_578_947_368_421, epsilon = 1e-9);
    }

    #[test]
    fn time_constants_reject_unstable_and_gamma() {
        assert!(matches!(time_constants(&p(1.0, 0.2, 1.0)), Err(Error::Unstable { .. })));
        assert!(time_constants(&p(0.5, 0.2, 2.0)).is_err());
    }

    #[test]
    fn eigen_general_examples() {
        let s = eigen_general(&p(0.5, 0.2, 1.0)).unwrap();
        assert_abs_diff_eq!(s.tau_mu, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.tau_kappa, 10.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.axis_angle, 45.0, epsilon = 1e-12);
        assert!(!s.degenerate);

        let s = eigen_general(&p(0.0, 1.0, 1.0)).unwrap();
        assert_eq!((s.eigenvalue_mu, s.eigenvalue_kappa), (-1.0, -1.0));
        assert!(s.degenerate);
        assert_eq!(s.axis_angle, 45.0);

        let params = p(0.5, 0.2, 2.0);
        let s = eigen_general(&params).unwrap();
        let (slow, fast, ang) = power_iteration(params.matrix());
        assert_abs_diff_eq!(s.eigenvalue_mu, slow, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalue_kappa, fast, epsilon = 1e-12);
        assert_abs_diff_eq!(s.axis_angle, ang, epsilon = 1e-6);
        // frozen from the oracle: tan(22.5 deg) = sqrt(2) - 1
        assert_abs_diff_eq!(s.axis_angle, 22.5, epsilon = 1e-9);
    }

    #[test]
    fn eigen_general_axis_for_uncoupled_anisotropic() {
        // gamma < 1: I is damped less, the slow axis is I (90 deg)
        let s = eigen_general(&p(0.0, 0.3, 0.5)).unwrap();
        assert_abs_diff_eq!(s.axis_angle, 90.0, epsilon = 1e-12);
        let s = eigen_general(&p(0.0, 0.3, 2.0)).unwrap();
        assert_abs_diff_eq!(s.axis_angle, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_general_rejects_saddle() {
        assert!(matches!(eigen_general(&p(1.5, 0.2, 1.0)), Err(Error::Unstable { .. })));
    }

    #[test]
    fn eigen_general_matches_time_constants_on_grid() {
        for ai in 0..=19 {
            let a = 0.05 * ai as f64;
            for li in 0..=20 {
                let l = 0.01 + li as f64 * (0.99 / 20.0);
                let params = p(a, l, 1.0);
                let (tm, tk) = time_constants(&params).unwrap();
                let s = eigen_general(&params).unwrap();
                assert!((s.tau_mu - tm).abs() <= 1e-12 * tm.max(1.0), "a={a} l={l}");
                assert!((s.tau_kappa - tk).abs() <= 1e-12 * tk.max(1.0), "a={a} l={l}");
                assert_abs_diff_eq!(s.axis_angle, 45.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fixed_point_examples() {
        let fp = fixed_point(&p(0.5, 0.2, 1.0), &ForcingTerms::zero()).unwrap();
        assert_eq!((fp.e0, fp.i0), (0.0, 0.0));

        let fp = fixed_point(&p(0.5, 0.2, 1.0), &ForcingTerms::new(0.1, 0.1)).unwrap();
        assert_abs_diff_eq!(fp.mu0, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fp.kappa0, 0.0, epsilon = 1e-12);

        let fp = fixed_point(&p(0.5, 0.2, 1.0), &ForcingTerms::new(0.1, 0.0)).unwrap();
        assert_abs_diff_eq!(fp.mu0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fp.kappa0.abs(), 1.0 / 3.0, epsilon = 1e-12);
        // sign from the solve: (g - f) / (lambda (1 + alpha))
        assert!(fp.kappa0 < 0.0);
    }

    #[test]
    fn fixed_point_errors() {
        let f = ForcingTerms::new(0.1, 0.2);
        assert!(matches!(fixed_point(&p(1.0, 0.2, 1.0), &f), Err(Error::Singular(_))));
        assert!(matches!(
            fixed_point(&p(2.0, 0.2, 1.0), &f),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn variance_ratio_examples() {
        assert_abs_diff_eq!(variance_ratio(0.5).unwrap(), 9.0, epsilon = 1e-12);
        assert_eq!(variance_ratio(0.0).unwrap(), 1.0);
        // (1.26/0.74)^2
        assert_abs_diff_eq!(variance_ratio(0.26).unwrap(), 2.899_196_493_791_088, epsilon = 1e-12);
        assert!(variance_ratio(1.0).is_err());

        assert_abs_diff_eq!(alpha_from_variance_ratio(8.2).unwrap(), 0.482, epsilon = 1e-3);
        assert_eq!(alpha_from_variance_ratio(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(alpha_from_variance_ratio(9.0).unwrap(), 0.5, epsilon = 1e-12);
        assert!(alpha_from_variance_ratio(0.9).is_err());
    }

    #[test]
    fn infer_alpha_lambda_examples() {
        let (a, l) = infer_alpha_lambda(10.5, 6.1).unwrap();
        assert_abs_diff_eq!(a, 0.265, epsilon = 1e-3);
        assert_abs_diff_eq!(l, 0.1296, epsilon = 5e-4);

        let (a, l) = infer_alpha_lambda(5.0, 5.0).unwrap();
        assert_eq!(a, 0.0);
        assert_abs_diff_eq!(l, 0.2, epsilon = 1e-15);

        let (a, l) = infer_alpha_lambda(10.0, 10.0 / 3.0).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(l, 0.2, epsilon = 1e-12);

        assert!(infer_alpha_lambda(3.0, 6.0).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(stability_classify(&p(0.5, 0.2, 1.0)), Regime::StableNode);
        assert_eq!(classify_raw(0.5, 0.0, 0.0), Regime::Saddle);
        assert_eq!(stability_classify(&p(1.0, 0.2, 1.0)), Regime::Marginal);
        assert_eq!(stability_classify(&p(1.2, 0.2, 1.0)), Regime::Saddle);
    }

    #[test]
    fn monotone_in_alpha() {
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..99 {
            let taus = time_constants(&p(k as f64 / 100.0, 0.2, 1.0)).unwrap();
            if let Some((pm, pk)) = prev {
                assert!(taus.0 > pm);
                assert!(taus.1 < pk);
            }
            prev = Some(taus);
        }
    }

    #[test]
    fn constructor_validation() {
        assert!(SystemParams::new(-0.1, 0.2, 1.0).is_err());
        assert!(SystemParams::new(0.1, 0.0, 1.0).is_err());
        assert!(SystemParams::new(0.1, 0.2, 0.0).is_err());
        assert!(SystemParams::new(f64::NAN, 0.2, 1.0).is_err());
        assert!(SystemParams::stable(1.2, 0.2, 1.0).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn eigen_round_trip(e in -1e6f64..1e6, i in -1e6f64..1e6) {
                let back = from_eigen(to_eigen(PhasePoint::new(e, i)));
                let scale = e.abs().max(i.abs()).max(1.0);
                prop_assert!((back.e - e).abs() <= ALGEBRAIC_TOL * scale);
                prop_assert!((back.i - i).abs() <= ALGEBRAIC_TOL * scale);
            }

            #[test]
            fn alpha_lambda_round_trip(a in 0.0f64..0.95, l in 0.01f64..1.0) {
                let params = SystemParams::symmetric(a, l).unwrap();
                let (tm, tk) = time_constants(&params).unwrap();
                let (a2, l2) = infer_alpha_lambda(tm, tk).unwrap();
                prop_assert!((a2 - a).abs() < 1e-10);
                prop_assert!((l2 - l).abs() < 1e-10);
            }

            #[test]
            fn variance_ratio_round_trip(a in 0.0f64..0.99) {
                let back = alpha_from_variance_ratio(variance_ratio(a).unwrap()).unwrap();
                prop_assert!((back - a).abs() < ALGEBRAIC_TOL);
            }
        }
    }
}
