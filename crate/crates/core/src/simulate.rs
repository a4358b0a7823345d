//! Propagation of the stable and unconstrained systems, streamline fields, and
//! the seeded synthetic-panel generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    eigen_general, fixed_point, from_eigen, to_eigen, EigenCoords, ForcingTerms, PhasePoint, SystemParams,
};
use crate::panel::PanelTable;
use crate::registry::{Rk4, Stepper, VectorField};

pub const DEFAULT_RK4_STEP: f64 = 0.05;
pub const DEFAULT_MAX_STEPS: usize = 100_000;
pub const DEFAULT_ARRIVAL_TOL: f64 = 1e-3;

pub fn derivative(params: &SystemParams, forcing: &ForcingTerms, p: PhasePoint) -> PhasePoint {
    let (a, l, g) = (params.alpha(), params.lambda(), params.gamma());
    PhasePoint::new(l * (-p.e + a * p.i) + forcing.f, l * (a * p.e - g * p.i) + forcing.g)
}

pub fn derivative_unconstrained(alpha: f64, forcing: &ForcingTerms, p: PhasePoint) -> PhasePoint {
    PhasePoint::new(alpha * p.i + forcing.f, alpha * p.e + forcing.g)
}

/// Exact solution of the linear system after `dt` years.
pub fn propagate_closed_form(
    params: &SystemParams,
    forcing: &ForcingTerms,
    p0: PhasePoint,
    dt: f64,
) -> Result<PhasePoint> {
    let sol = eigen_general(params)?;
    let fp = fixed_point(params, forcing)?;
    if dt == 0.0 {
        return Ok(p0);
    }
    let decay_mu = (-dt / sol.tau_mu).exp();
    let decay_kappa = (-dt / sol.tau_kappa).exp();

    if params.gamma() == 1.0 {
        let c = to_eigen(p0);
        return Ok(from_eigen(EigenCoords {
            mu: fp.mu0 + (c.mu - fp.mu0) * decay_mu,
            kappa: fp.kappa0 + (c.kappa - fp.kappa0) * decay_kappa,
        }));
    }

    let phi = sol.axis_angle.to_radians();
    let (s, c) = phi.sin_cos();
    let d = p0 - fp.point();
    let slow = d.e * c + d.i * s;
    let fast = -d.e * s + d.i * c;
    let (slow, fast) = (slow * decay_mu, fast * decay_kappa);
    Ok(PhasePoint::new(
        fp.e0 + slow * c - fast * s,
        fp.i0 + slow * s + fast * c,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub entity_id: String,
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
}

impl Trajectory {
    pub fn new(entity_id: impl Into<String>, times: Vec<f64>, points: Vec<PhasePoint>) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::InvalidParams(format!(
                "trajectory has {} times but {} points",
                times.len(),
                points.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InsufficientData("trajectory needs at least 2 points".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParams("trajectory contains non-finite points".into()));
        }
        Ok(Self {
            entity_id: entity_id.into(),
            times,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> PhasePoint {
        *self.points.last().expect("trajectory is never empty")
    }
}

/// Fixed-step integration over `[0, dt_total]`. The final step is shortened
/// so the trajectory ends exactly at `dt_total`.
pub fn integrate(
    field: &dyn VectorField,
    stepper: &dyn Stepper,
    p0: PhasePoint,
    dt_total: f64,
    step: f64,
) -> Result<Trajectory> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParams(format!("step = {step} must be > 0")));
    }
    if !(dt_total > 0.0 && dt_total.is_finite()) {
        return Err(Error::InvalidParams(format!("duration = {dt_total} must be > 0")));
    }
    let n = ((dt_total / step) - 1e-9).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    times.push(0.0);
    points.push(p0);
    let mut p = p0;
    for k in 1..=n {
        let t_prev = (k - 1) as f64 * step;
        let t = if k == n { dt_total } else { k as f64 * step };
        p = stepper.step(field, p, t - t_prev);
        if !p.is_finite() {
            return Err(Error::Divergence { t });
        }
        times.push(t);
        points.push(p);
    }
    Trajectory::new("", times, points)
}

pub fn integrate_rk4(field: &dyn VectorField, p0: PhasePoint, dt_total: f64, step: f64) -> Result<Trajectory> {
    integrate(field, &Rk4, p0, dt_total, step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub e_min: f64,
    pub e_max: f64,
    pub i_min: f64,
    pub i_max: f64,
}

impl Bounds {
    pub fn new(e_min: f64, e_max: f64, i_min: f64, i_max: f64) -> Result<Self> {
        let ok = [e_min, e_max, i_min, i_max].iter().all(|v| v.is_finite()) && e_max > e_min && i_max > i_min;
        if !ok {
            return Err(Error::InvalidParams(format!(
                "invalid bounds e[{e_min}, {e_max}] i[{i_min}, {i_max}]"
            )));
        }
        Ok(Self {
            e_min,
            e_max,
            i_min,
            i_max,
        })
    }

    /// Square box of half-width `r` around `c`.
    pub fn around(c: PhasePoint, r: f64) -> Result<Self> {
        Self::new(c.e - r, c.e + r, c.i - r, c.i + r)
    }

    pub fn contains(&self, p: PhasePoint) -> bool {
        p.e >= self.e_min && p.e <= self.e_max && p.i >= self.i_min && p.i <= self.i_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamGrid {
    pub bounds: Bounds,
    pub n_e: usize,
    pub n_i: usize,
}

impl StreamGrid {
    /// Seeds at cell centres of an `n_e` x `n_i` grid.
    pub fn seeds(&self) -> Vec<PhasePoint> {
        let b = &self.bounds;
        let de = (b.e_max - b.e_min) / self.n_e as f64;
        let di = (b.i_max - b.i_min) / self.n_i as f64;
        let mut out = Vec::with_capacity(self.n_e * self.n_i);
        for r in 0..self.n_i {
            for c in 0..self.n_e {
                out.push(PhasePoint::new(
                    b.e_min + (c as f64 + 0.5) * de,
                    b.i_min + (r as f64 + 0.5) * di,
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamOptions {
    pub step: f64,
    pub max_steps: usize,
    pub arrival_tol: f64,
}

impl Default for StreamOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_RK4_STEP,
            max_steps: DEFAULT_MAX_STEPS,
            arrival_tol: DEFAULT_ARRIVAL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Arrived,
    ExitedBounds,
    MaxSteps,
    Diverged,
    /// The step length fell below `1e-12`: the line sits on an equilibrium
    /// that is not an attractor.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Streamline {
    pub id: usize,
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub termination: Termination,
}

impl Streamline {
    pub fn terminus(&self) -> PhasePoint {
        *self.points.last().expect("streamline has its seed")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamlineField {
    pub system: String,
    pub bounds: Bounds,
    /// Equilibrium drawn as a marker (attractor or saddle point).
    pub equilibrium: Option<PhasePoint>,
    pub lines: Vec<Streamline>,
}

/// Traces one streamline forward from `seed` with RK4.
pub fn trace(
    field: &dyn VectorField,
    seed: PhasePoint,
    bounds: &Bounds,
    opts: &StreamOptions,
    id: usize,
) -> Streamline {
    let target = field.attractor();
    let arrived = |p: PhasePoint| target.is_some_and(|fp| p.distance(&fp) <= opts.arrival_tol);

    let mut times = vec![0.0];
    let mut points = vec![seed];
    let mut termination = Termination::MaxSteps;
    if arrived(seed) {
        termination = Termination::Arrived;
    } else if !bounds.contains(seed) {
        termination = Termination::ExitedBounds;
    } else {
        let mut p = seed;
        for k in 1..=opts.max_steps {
            let next = Rk4.step(field, p, opts.step);
            if !next.is_finite() {
                termination = Termination::Diverged;
                break;
            }
            let moved = next.distance(&p);
            p = next;
            times.push(k as f64 * opts.step);
            points.push(p);
            if arrived(p) {
                termination = Termination::Arrived;
                break;
            }
            if !bounds.contains(p) {
                termination = Termination::ExitedBounds;
                break;
            }
            if moved < 1e-12 {
                termination = Termination::Stalled;
                break;
            }
        }
    }
    Streamline {
        id,
        times,
        points,
        termination,
    }
}

pub fn streamlines(field: &dyn VectorField, grid: &StreamGrid, opts: &StreamOptions) -> StreamlineField {
    let lines = grid
        .seeds()
        .into_iter()
        .enumerate()
        .map(|(id, seed)| trace(field, seed, &grid.bounds, opts, id))
        .collect();
    StreamlineField {
        system: field.name().to_string(),
        bounds: grid.bounds,
        equilibrium: field.equilibrium(),
        lines,
    }
}

/// Additive white noise on both derivatives, standard deviation `sigma`
/// per square-root year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma = {sigma} must be >= 0")));
        }
        Ok(Self { sigma, seed })
    }

    pub fn silent() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMember {
    pub id: String,
    pub params: SystemParams,
    pub forcing: ForcingTerms,
    pub start: PhasePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelSimOptions {
    pub start_year: i32,
    /// Euler-Maruyama sub-steps per recorded year.
    pub steps_per_year: u32,
}

impl Default for PanelSimOptions {
    fn default() -> Self {
        Self {
            start_year: 1996,
            steps_per_year: 4,
        }
    }
}

/// The generator behind all synthetic noise. Each entity draws from its own
/// ChaCha8 stream (`stream = entity index`) keyed by the run seed, so output
/// does not depend on evaluation order.
pub fn entity_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Euler-Maruyama simulation recording one observation per year, starting
/// with the initial state. Returns the E panel and the I panel.
pub fn simulate_panel(
    cohort: &[CohortMember],
    years: usize,
    noise: &NoiseSpec,
    opts: &PanelSimOptions,
) -> Result<(PanelTable, PanelTable)> {
    if years < 2 {
        return Err(Error::InvalidParams(format!("years = {years} must be >= 2")));
    }
    if opts.steps_per_year == 0 {
        return Err(Error::InvalidParams("steps_per_year must be >= 1".into()));
    }
    let h = 1.0 / opts.steps_per_year as f64;
    let kick = noise.sigma * h.sqrt();
    let mut e_panel = PanelTable::new();
    let mut i_panel = PanelTable::new();

    for (idx, member) in cohort.iter().enumerate() {
        let mut rng = entity_rng(noise.seed, idx as u64);
        let mut p = member.start;
        for y in 0..years {
            let year = opts.start_year + y as i32;
            e_panel.insert(&member.id, year, p.e)?;
            i_panel.insert(&member.id, year, p.i)?;
            if y + 1 == years {
                break;
            }
            for _ in 0..opts.steps_per_year {
                let d = derivative(&member.params, &member.forcing, p);
                let (ne, ni): (f64, f64) = if noise.sigma > 0.0 {
                    (rng.sample(StandardNormal), rng.sample(StandardNormal))
                } else {
                    (0.0, 0.0)
                };
                p = PhasePoint::new(p.e + d.e * h + kick * ne, p.i + d.i * h + kick * ni);
            }
            if !p.is_finite() {
                return Err(Error::Divergence { t: (y + 1) as f64 });
            }
        }
    }
    Ok((e_panel, i_panel))
}

/// Recipe for a random cohort sharing one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub entities: usize,
    pub params: SystemParams,
    /// Standard deviation of the independent draws of `f` and `g`.
    pub forcing_sd: f64,
    /// Standard deviation of each component of the initial offset from the
    /// entity's fixed point.
    pub displacement_sd: f64,
    pub seed: u64,
}

/// Three-letter upper-case code for entity `k` (AAA, AAB, ...).
pub fn entity_code(k: usize) -> String {
    let letters = [(k / 676) % 26, (k / 26) % 26, k % 26];
    letters.iter().map(|&d| (b'A' + d as u8) as char).collect()
}

const COHORT_STREAM: u64 = 1 << 63;

pub fn synthetic_cohort(spec: &CohortSpec) -> Result<Vec<CohortMember>> {
    if spec.entities == 0 || spec.entities > 26 * 26 * 26 {
        return Err(Error::InvalidParams(format!(
            "entities = {} must be in 1..=17576",
            spec.entities
        )));
    }
    spec.params.require_stable()?;
    let mut rng = entity_rng(spec.seed, COHORT_STREAM);
    let mut out = Vec::with_capacity(spec.entities);
    for k in 0..spec.entities {
        let f = spec.forcing_sd * rng.sample::<f64, _>(StandardNormal);
        let g = spec.forcing_sd * rng.sample::<f64, _>(StandardNormal);
        let forcing = ForcingTerms::new(f, g);
        let fp = fixed_point(&spec.params, &forcing)?;
        let de = spec.displacement_sd * rng.sample::<f64, _>(StandardNormal);
        let di = spec.displacement_sd * rng.sample::<f64, _>(StandardNormal);
        out.push(CohortMember {
            id: entity_code(k),
            params: spec.params,
            forcing,
            start: PhasePoint::new(fp.e0 + de, fp.i0 + di),
        });
    }
    Ok(out)
}
