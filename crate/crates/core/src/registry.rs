//! Name-keyed registries for the interchangeable pieces of the simulator:
//! vector fields (which dynamical system) and steppers (which integrator).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{fixed_point, ForcingTerms, PhasePoint, SystemParams};

/// A planar autonomous vector field.
pub trait VectorField: Send + Sync {
    fn name(&self) -> &'static str;

    /// `(dE/dt, dI/dt)` at `p`, returned as a point.
    fn derivative(&self, p: PhasePoint) -> PhasePoint;

    /// The attracting equilibrium, if the system has one.
    fn attractor(&self) -> Option<PhasePoint>;

    /// The equilibrium regardless of stability (the saddle point for
    /// unconstrained dynamics).
    fn equilibrium(&self) -> Option<PhasePoint>;

    /// Exact propagation by `dt`, when a closed form exists.
    fn propagate_exact(&self, _p: PhasePoint, _dt: f64) -> Option<PhasePoint> {
        None
    }
}

/// Settings a vector field can be built from.
#[derive(Debug, Clone, Copy)]
pub struct FieldConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub forcing: ForcingTerms,
}

/// Damped system with drag `lambda` and relative dissipation `gamma`.
#[derive(Debug, Clone, Copy)]
pub struct StableSystem {
    pub params: SystemParams,
    pub forcing: ForcingTerms,
}

impl StableSystem {
    pub fn new(params: SystemParams, forcing: ForcingTerms) -> Self {
        Self { params, forcing }
    }
}

impl VectorField for StableSystem {
    fn name(&self) -> &'static str {
        "stable"
    }

    fn derivative(&self, p: PhasePoint) -> PhasePoint {
        crate::simulate::derivative(&self.params, &self.forcing, p)
    }

    fn attractor(&self) -> Option<PhasePoint> {
        fixed_point(&self.params, &self.forcing).ok().map(|fp| fp.point())
    }

    fn equilibrium(&self) -> Option<PhasePoint> {
        // Saddle regime still has a (repelling) equilibrium; solve directly.
        let m = self.params.matrix();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 {
            return None;
        }
        let (r0, r1) = (-self.forcing.f, -self.forcing.g);
        Some(PhasePoint::new(
            (m[1][1] * r0 - m[0][1] * r1) / det,
            (m[0][0] * r1 - m[1][0] * r0) / det,
        ))
    }

    fn propagate_exact(&self, p: PhasePoint, dt: f64) -> Option<PhasePoint> {
        crate::simulate::propagate_closed_form(&self.params, &self.forcing, p, dt).ok()
    }
}

/// Coupled growth with no drag: `dE/dt = alpha I + f`, `dI/dt = alpha E + g`.
#[derive(Debug, Clone, Copy)]
pub struct UnconstrainedSystem {
    pub alpha: f64,
    pub forcing: ForcingTerms,
}

impl UnconstrainedSystem {
    pub fn new(alpha: f64, forcing: ForcingTerms) -> Self {
        Self { alpha, forcing }
    }
}

impl VectorField for UnconstrainedSystem {
    fn name(&self) -> &'static str {
        "unconstrained"
    }

    fn derivative(&self, p: PhasePoint) -> PhasePoint {
        crate::simulate::derivative_unconstrained(self.alpha, &self.forcing, p)
    }

    fn attractor(&self) -> Option<PhasePoint> {
        None
    }

    fn equilibrium(&self) -> Option<PhasePoint> {
        if self.alpha == 0.0 {
            return None;
        }
        // adding zero turns -0.0 into 0.0 for unforced systems
        Some(PhasePoint::new(
            -self.forcing.g / self.alpha + 0.0,
            -self.forcing.f / self.alpha + 0.0,
        ))
    }
}

/// One step of a fixed-step integrator.
pub trait Stepper: Send + Sync {
    fn name(&self) -> &'static str;
    fn step(&self, field: &dyn VectorField, p: PhasePoint, h: f64) -> PhasePoint;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euler;

impl Stepper for Euler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn step(&self, field: &dyn VectorField, p: PhasePoint, h: f64) -> PhasePoint {
        p + field.derivative(p) * h
    }
}

/// Classical fourth-order Runge-Kutta.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rk4;

impl Stepper for Rk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn step(&self, field: &dyn VectorField, p: PhasePoint, h: f64) -> PhasePoint {
        let k1 = field.derivative(p);
        let k2 = field.derivative(p + k1 * (0.5 * h));
        let k3 = field.derivative(p + k2 * (0.5 * h));
        let k4 = field.derivative(p + k3 * h);
        p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }
}

type FieldFactory = fn(&FieldConfig) -> Result<Box<dyn VectorField>>;
type StepperFactory = fn() -> Box<dyn Stepper>;

/// Registry of named constructors.
pub struct Registry<F> {
    kind: &'static str,
    entries: BTreeMap<&'static str, F>,
}

impl<F: Copy> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: F) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn lookup(&self, name: &str) -> Result<F> {
        self.entries.get(name).copied().ok_or_else(|| Error::UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }
}

pub type FieldRegistry = Registry<FieldFactory>;
pub type StepperRegistry = Registry<StepperFactory>;

fn build_stable(cfg: &FieldConfig) -> Result<Box<dyn VectorField>> {
    let params = SystemParams::stable(cfg.alpha, cfg.lambda, cfg.gamma)?;
    Ok(Box::new(StableSystem::new(params, cfg.forcing)))
}

fn build_unconstrained(cfg: &FieldConfig) -> Result<Box<dyn VectorField>> {
    if !(cfg.alpha.is_finite() && cfg.alpha >= 0.0) {
        return Err(Error::InvalidParams(format!("alpha = {} must be >= 0", cfg.alpha)));
    }
    Ok(Box::new(UnconstrainedSystem::new(cfg.alpha, cfg.forcing)))
}

impl FieldRegistry {
    /// `stable` and `unconstrained`.
    pub fn builtin() -> Self {
        let mut r = Registry::new("system");
        r.register("stable", build_stable as FieldFactory)
            .register("unconstrained", build_unconstrained as FieldFactory);
        r
    }

    pub fn build(&self, name: &str, cfg: &FieldConfig) -> Result<Box<dyn VectorField>> {
        (self.lookup(name)?)(cfg)
    }
}

impl StepperRegistry {
    /// `euler` and `rk4`.
    pub fn builtin() -> Self {
        let mut r = Registry::new("integrator");
        r.register("euler", (|| Box::new(Euler) as Box<dyn Stepper>) as StepperFactory)
            .register("rk4", (|| Box::new(Rk4) as Box<dyn Stepper>) as StepperFactory);
        r
    }

    pub fn build(&self, name: &str) -> Result<Box<dyn Stepper>> {
        Ok((self.lookup(name)?)())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alpha: f64) -> FieldConfig {
        FieldConfig {
            alpha,
            lambda: 0.2,
            gamma: 1.0,
            forcing: ForcingTerms::zero(),
        }
    }

    #[test]
    fn lookup_by_name() {
        let fields = FieldRegistry::builtin();
        assert_eq!(fields.names(), vec!["stable", "unconstrained"]);
        assert_eq!(fields.build("stable", &cfg(0.5)).unwrap().name(), "stable");
        assert_eq!(
            fields.build("unconstrained", &cfg(0.5)).unwrap().name(),
            "unconstrained"
        );

        let steppers = StepperRegistry::builtin();
        assert_eq!(steppers.build("rk4").unwrap().name(), "rk4");
        assert_eq!(steppers.build("euler").unwrap().name(), "euler");
    }

    #[test]
    fn unknown_name_lists_known() {
        let err = StepperRegistry::builtin().build("leapfrog").err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("leapfrog") && msg.contains("rk4"), "{msg}");
    }

    #[test]
    fn stable_factory_validates() {
        let fields = FieldRegistry::builtin();
        assert!(matches!(fields.build("stable", &cfg(1.5)), Err(Error::Unstable { .. })));
        // no stability requirement without drag
        assert!(fields.build("unconstrained", &cfg(1.5)).is_ok());
    }

    #[test]
    fn saddle_point_location() {
        let sys = UnconstrainedSystem::new(0.5, ForcingTerms::new(0.1, -0.2));
        let eq = sys.equilibrium().unwrap();
        assert!(sys.derivative(eq).norm() < 1e-15);
        assert!(sys.attractor().is_none());
    }
}
