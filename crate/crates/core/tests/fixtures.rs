//! Checks against the shipped files under `fixtures/`, each compared with an
//! independent recomputation.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};

use approx::assert_abs_diff_eq;
use instdyn::estimate::regress_mu_kappa;
use instdyn::panel::{
    composite_index, join_panels, load_averages, load_entity_table, load_panel, standardize_by_year, time_average,
    write_panel, PanelSchema, PanelTable,
};
use instdyn::persistence::{estimate_delta, persistence_matrix, DeltaWeighting};
use instdyn::simulate::{simulate_panel, synthetic_cohort, CohortMember, CohortSpec, NoiseSpec, PanelSimOptions};
use instdyn::{fixed_point, SystemParams};
use nalgebra::{DMatrix, DVector};

use common::fixture;

fn panel(name: &str) -> PanelTable {
    load_panel(File::open(fixture(name)).unwrap(), &PanelSchema::default()).unwrap()
}

/// Plain split-on-comma reader, kept apart from the library's csv path.
fn raw_rows(name: &str) -> BTreeMap<(String, i32), f64> {
    let text = fs::read_to_string(fixture(name)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "entity,year,value");
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            ((f[0].to_string(), f[1].parse().unwrap()), f[2].parse().unwrap())
        })
        .collect()
}

fn wgi_panels() -> Vec<PanelTable> {
    (1..=5).map(|k| panel(&format!("wgi_{k}.csv"))).collect()
}

#[test]
fn hdi_fixture_has_420_rows() {
    let p = panel("hdi_fixture.csv");
    assert_eq!(p.len(), 420);
    assert_eq!(p.entities().len(), 20);
    assert_eq!(p.years(), (1996..=2016).collect::<Vec<_>>());
}

#[test]
fn hdi_fixture_regenerates_from_seed_7() {
    let cohort = synthetic_cohort(&CohortSpec {
        entities: 20,
        params: SystemParams::stable(0.5, 0.2, 1.0).unwrap(),
        forcing_sd: 0.1,
        displacement_sd: 1.0,
        seed: 7,
    })
    .unwrap();
    let (e, _) = simulate_panel(
        &cohort,
        21,
        &NoiseSpec::new(0.03, 7).unwrap(),
        &PanelSimOptions::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_panel(&mut buf, &e, &PanelSchema::default()).unwrap();
    assert_eq!(buf, fs::read(fixture("hdi_fixture.csv")).unwrap());
}

#[test]
fn standardized_fixture_moments_by_recomputation() {
    let raw = panel("hdi_fixture.csv");
    let z = standardize_by_year(&raw).unwrap();
    for year in raw.years() {
        let vals: Vec<f64> = z.cross_section(year).values().copied().collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 1e-12, "year {year}: mean {mean}");
        assert!((var - 1.0).abs() < 1e-12, "year {year}: var {var}");

        let before = raw.cross_section(year);
        let after = z.cross_section(year);
        let mut by_raw: Vec<&str> = before.keys().copied().collect();
        by_raw.sort_by(|a, b| before[a].total_cmp(&before[b]));
        let mut by_z: Vec<&str> = after.keys().copied().collect();
        by_z.sort_by(|a, b| after[a].total_cmp(&after[b]));
        assert_eq!(by_raw, by_z, "ranking changed in {year}");
    }
}

#[test]
fn composite_matches_hand_means_on_spot_rows() {
    let comp = composite_index(&wgi_panels(), None).unwrap();
    let raws: Vec<_> = (1..=5).map(|k| raw_rows(&format!("wgi_{k}.csv"))).collect();
    let spots = [
        ("AAA", 1996),
        ("AAB", 1998),
        ("AAD", 2000),
        ("AAE", 2002),
        ("AAG", 2005),
        ("AAJ", 2008),
        ("AAL", 2011),
        ("AAO", 2013),
        ("AAR", 2015),
        ("AAT", 2016),
    ];
    for (entity, year) in spots {
        let key = (entity.to_string(), year);
        let hand = raws.iter().map(|r| r[&key]).sum::<f64>() / 5.0;
        assert_abs_diff_eq!(comp.get(entity, year).unwrap(), hand, epsilon = 1e-12);
    }
    // each gap removes its key from the strict intersection
    assert!(comp.get("AAC", 2004).is_none());
    assert!(comp.get("AAF", 2010).is_none());
    assert_eq!(comp.len(), 20 * 18 - 2);
}

#[test]
fn staggered_join_count_matches_set_intersection() {
    let e = panel("hdi_fixture.csv");
    let i = composite_index(&wgi_panels(), None).unwrap();
    let ek: BTreeSet<(String, i32)> = raw_rows("hdi_fixture.csv").into_keys().collect();
    let ik: BTreeSet<(String, i32)> = i.rows().map(|r| (r.entity.to_string(), r.year)).collect();
    let expected = ek.intersection(&ik).count();
    let j = join_panels(&e, &i).unwrap();
    assert_eq!(j.len(), expected);
    assert_eq!(join_panels(&i, &e).unwrap().len(), expected);
    assert!(expected < e.len().min(i.len()) + 1);
}

#[test]
fn time_average_matches_recomputation() {
    let e = panel("hdi_fixture.csv");
    let i = composite_index(&wgi_panels(), None).unwrap();
    let avgs = time_average(&join_panels(&e, &i).unwrap());
    assert_eq!(avgs.len(), 20);
    let raw_e = raw_rows("hdi_fixture.csv");
    for a in &avgs.rows {
        let years: Vec<i32> = i
            .rows()
            .filter(|r| r.entity == a.entity && raw_e.contains_key(&(a.entity.clone(), r.year)))
            .map(|r| r.year)
            .collect();
        let n = years.len() as f64;
        let e_mean = years.iter().map(|y| raw_e[&(a.entity.clone(), *y)]).sum::<f64>() / n;
        let i_mean = years.iter().map(|y| i.get(&a.entity, *y).unwrap()).sum::<f64>() / n;
        assert_eq!(a.n_years, years.len());
        assert_abs_diff_eq!(a.e_mean, e_mean, epsilon = 1e-12);
        assert_abs_diff_eq!(a.i_mean, i_mean, epsilon = 1e-12);
    }
}

#[test]
fn fixture_delta_is_small_and_positive() {
    let p = panel("hdi_fixture.csv");
    let m = persistence_matrix(&p, &p.years()).unwrap();
    assert_eq!(m.entries.len(), 210);
    let d = estimate_delta(&m, DeltaWeighting::Unweighted).unwrap();
    assert!(d.delta >= 0.0 && d.delta < 0.1, "delta {}", d.delta);
    assert!(d.stderr >= 0.0);
}

#[test]
fn noise_free_cohort_at_rest_has_unit_persistence() {
    let params = SystemParams::stable(0.5, 0.2, 1.0).unwrap();
    let cohort: Vec<CohortMember> = synthetic_cohort(&CohortSpec {
        entities: 12,
        params,
        forcing_sd: 0.2,
        displacement_sd: 0.0,
        seed: 3,
    })
    .unwrap()
    .into_iter()
    .map(|mut m| {
        m.start = fixed_point(&params, &m.forcing).unwrap().point();
        m
    })
    .collect();
    let (e, _) = simulate_panel(&cohort, 10, &NoiseSpec::silent(), &PanelSimOptions::default()).unwrap();
    let m = persistence_matrix(&e, &e.years()).unwrap();
    for entry in &m.entries {
        assert_abs_diff_eq!(entry.rho, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn regression_fixture_matches_normal_equations() {
    let avgs = load_averages(File::open(fixture("averages_fixture.csv")).unwrap(), b',').unwrap();
    let table = load_entity_table(File::open(fixture("covariates.csv")).unwrap(), b',').unwrap();
    // the row with a blank cell is dropped on load; the extra row has no averages
    assert!(table.row_of("ZZY").is_none());
    assert!(table.row_of("ZZZ").is_some());

    let reg = regress_mu_kappa(&avgs, &table, &["t_star", "h"]).unwrap();
    let ols = &reg.mu_model.ols;
    assert_eq!(ols.n, 20);
    assert!(reg.dropped.is_empty());

    let n = avgs.len();
    let (t, h) = (table.column("t_star").unwrap(), table.column("h").unwrap());
    let x = DMatrix::from_fn(n, 3, |r, c| {
        let row = table.row_of(&avgs.rows[r].entity).unwrap();
        [1.0, t[row], h[row]][c]
    });
    let y = DVector::from_iterator(n, avgs.rows.iter().map(|a| a.mu()));
    let xtx = x.transpose() * &x;
    let beta = xtx.clone().cholesky().unwrap().solve(&(x.transpose() * &y));
    let resid = &y - &x * &beta;
    let s2 = resid.norm_squared() / (n - 3) as f64;
    let cov = xtx.try_inverse().unwrap() * s2;

    let got = [
        ols.intercept.as_ref().unwrap(),
        ols.coefficient("t_star").unwrap(),
        ols.coefficient("h").unwrap(),
    ];
    for (k, c) in got.iter().enumerate() {
        assert_abs_diff_eq!(c.estimate, beta[k], epsilon = 1e-10);
        assert_abs_diff_eq!(c.std_error, cov[(k, k)].sqrt(), epsilon = 1e-10);
    }
    // generator slopes are -0.15 and -1.5
    assert!((ols.coefficient("t_star").unwrap().estimate + 0.15).abs() < 0.05);
    assert!((ols.coefficient("h").unwrap().estimate + 1.5).abs() < 0.3);
}
