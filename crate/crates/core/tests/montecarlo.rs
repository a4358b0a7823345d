//! Seeded Monte Carlo checks of the estimators against known generators.

mod common;

use instdyn::estimate::{
    empirical_variance_ratio, fit_along, ols, pca2, sound_counts, summarise, FitOptions, FitResult,
};
use instdyn::model::{ForcingTerms, PhasePoint};
use instdyn::panel::{join_panels, EntityAverages};
use instdyn::persistence::{estimate_delta, perturbed_matrix, DeltaWeighting};
use instdyn::simulate::{entity_rng, simulate_panel, CohortMember, NoiseSpec, PanelSimOptions};
use instdyn::SystemParams;
use rand::Rng;
use rand_distr::StandardNormal;

use common::{cohort, par_map};

/// One entity relaxing from `start` towards the origin, fitted at `theta`.
fn single_entity_fit(start: PhasePoint, sigma: f64, seed: u64, theta: f64) -> Option<FitResult> {
    let member = CohortMember {
        id: "AAA".into(),
        params: SystemParams::stable(0.5, 0.2, 1.0).unwrap(),
        forcing: ForcingTerms::zero(),
        start,
    };
    let noise = NoiseSpec::new(sigma, seed).unwrap();
    let (e, i) = simulate_panel(&[member], 21, &noise, &PanelSimOptions::default()).unwrap();
    let trajs = join_panels(&e, &i).unwrap().trajectories(5);
    fit_along(&trajs, theta, &FitOptions::default()).pop()?.fit
}

#[test]
fn noise_free_mu_projection_decays_at_ten_years() {
    let fit = single_entity_fit(PhasePoint::new(1.3, -0.4), 0.0, 0, 45.0).unwrap();
    assert!((fit.tau - 10.0).abs() <= 0.5, "tau {}", fit.tau);
}

#[test]
fn noisy_fit_recovers_tau_within_20_percent_for_80_of_100_seeds() {
    let hits = par_map(0..100, |seed| {
        single_entity_fit(PhasePoint::new(3.0, 3.0), 0.05, seed, 45.0).is_some_and(|f| (f.tau - 10.0).abs() <= 2.0)
    });
    let n = hits.iter().filter(|h| **h).count();
    assert!(n >= 80, "{n}/100 within 20%");
}

#[test]
fn delta_interval_covers_truth_in_95_of_100_seeds() {
    let years: Vec<i32> = (1996..=2016).collect();
    let covered = (11..=110)
        .filter(|&seed| {
            let m = perturbed_matrix(0.00135, &years, 20, 0.01, seed);
            let d = estimate_delta(&m, DeltaWeighting::Unweighted).unwrap();
            (d.delta - 0.00135).abs() <= 2.0 * d.stderr
        })
        .count();
    assert!(covered >= 95, "{covered}/100 covered");
}

/// Fixed points with axis standard deviations 3 along mu and 1 along kappa.
fn anisotropic_cloud(n: usize, seed: u64) -> EntityAverages {
    let mut rng = entity_rng(seed, 0);
    let pts: Vec<(String, PhasePoint)> = (0..n)
        .map(|k| {
            let mu = 3.0 * rng.sample::<f64, _>(StandardNormal);
            let kappa: f64 = rng.sample(StandardNormal);
            (format!("E{k}"), PhasePoint::new((mu - kappa) / 2.0, (mu + kappa) / 2.0))
        })
        .collect();
    EntityAverages::from_points(pts.iter().map(|(id, p)| (id.as_str(), *p)))
}

#[test]
fn variance_ratio_of_anisotropic_cloud_is_nine() {
    let r = empirical_variance_ratio(&anisotropic_cloud(1000, 21)).unwrap();
    assert!((r.ratio - 9.0).abs() <= 0.8, "ratio {}", r.ratio);
    assert!((r.alpha.unwrap() - 0.5).abs() <= 0.03);
}

#[test]
fn pca_of_anisotropic_cloud_points_along_mu() {
    let p = pca2(&anisotropic_cloud(1000, 22)).unwrap();
    assert!((p.principal_angle - 45.0).abs() <= 3.0, "angle {}", p.principal_angle);
    assert!((p.variance_share - 0.9).abs() <= 0.02, "share {}", p.variance_share);
    assert!(!p.isotropic);
}

#[test]
fn isotropic_cloud_has_unit_ratio() {
    let mut rng = entity_rng(23, 0);
    let pts: Vec<(String, PhasePoint)> = (0..1000)
        .map(|k| {
            (
                format!("E{k}"),
                PhasePoint::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
            )
        })
        .collect();
    let avgs = EntityAverages::from_points(pts.iter().map(|(id, p)| (id.as_str(), *p)));
    let r = empirical_variance_ratio(&avgs).unwrap();
    assert!((r.ratio - 1.0).abs() < 0.2, "ratio {}", r.ratio);
    assert!(r.alpha.unwrap_or(0.0) < 0.1);
    assert!(pca2(&avgs).unwrap().isotropic);
}

#[test]
fn pooled_50_entity_scan_peaks_near_45() {
    let grid: Vec<f64> = (0..=18).map(|k| 5.0 * k as f64).collect();
    let opts = FitOptions::default();
    let per_seed = par_map(0..20, |seed| {
        sound_counts(&cohort(0.5, 0.2, 1.0, 50, 0.03, seed), &grid, 0.1, &opts)
    });
    let mut total = vec![0usize; grid.len()];
    for counts in per_seed {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let scan = summarise(&grid, &total).unwrap();
    assert!((scan.theta_star - 45.0).abs() <= 10.0, "theta* {}", scan.theta_star);
}

#[test]
fn regression_coefficients_within_two_stderr_at_nominal_rate() {
    let draws = 200;
    let mut inside = [0usize; 2];
    for seed in 0..draws {
        let mut rng = entity_rng(seed, 0);
        let mut z = || rng.sample::<f64, _>(StandardNormal);
        let t: Vec<f64> = (0..20).map(|_| 10.0 + 4.0 * z()).collect();
        let h: Vec<f64> = (0..20).map(|_| (0.6 + 0.4 * z()).abs()).collect();
        let mu: Vec<f64> = t
            .iter()
            .zip(&h)
            .map(|(t, h)| 0.4 - 0.15 * t - 1.5 * h + 0.1 * z())
            .collect();
        let fit = ols(&mu, &[("t".into(), t), ("h".into(), h)], true).unwrap();
        for (k, truth) in [-0.15, -1.5].into_iter().enumerate() {
            let c = &fit.coefficients[k];
            inside[k] += usize::from((c.estimate - truth).abs() <= 2.0 * c.std_error);
        }
    }
    // nominal coverage with 17 residual degrees of freedom is about 94%
    for (k, n) in inside.iter().enumerate() {
        assert!(*n as f64 >= 0.9 * draws as f64, "coefficient {k}: {n}/{draws}");
    }
}
