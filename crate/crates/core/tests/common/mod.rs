#![allow(dead_code)]

use std::path::PathBuf;

use instdyn::panel::join_panels;
use instdyn::simulate::{simulate_panel, synthetic_cohort, CohortSpec, NoiseSpec, PanelSimOptions, Trajectory};
use instdyn::SystemParams;

/// Cohort used by the recovery and scan checks: 200 entities, alpha 0.5,
/// lambda 0.2, sigma 0.03, 21 years, random forcing and displaced starts.
pub fn recovery_cohort(gamma: f64, seed: u64) -> Vec<Trajectory> {
    cohort(0.5, 0.2, gamma, 200, 0.03, seed)
}

pub fn cohort(alpha: f64, lambda: f64, gamma: f64, entities: usize, sigma: f64, seed: u64) -> Vec<Trajectory> {
    let spec = CohortSpec {
        entities,
        params: SystemParams::stable(alpha, lambda, gamma).unwrap(),
        forcing_sd: 0.1,
        displacement_sd: 1.0,
        seed,
    };
    let members = synthetic_cohort(&spec).unwrap();
    let noise = NoiseSpec::new(sigma, seed).unwrap();
    let (e, i) = simulate_panel(&members, 21, &noise, &PanelSimOptions::default()).unwrap();
    join_panels(&e, &i).unwrap().trajectories(5)
}

/// Runs `f` over `seeds` on scoped threads, preserving order.
pub fn par_map<T: Send>(seeds: std::ops::Range<u64>, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let seeds: Vec<u64> = seeds.collect();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(seeds.len().max(1));
    let chunk = seeds.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                s.spawn(move || part.iter().map(|&k| f(k)).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    })
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}
