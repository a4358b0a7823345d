//! Regenerates the files under `fixtures/`.
//!
//!     cargo run -p instdyn --example make_fixtures -- fixtures

use std::fs::File;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use instdyn::panel::{fmt_f64, write_averages, write_panel, EntityAverage, EntityAverages, PanelSchema, PanelTable};
use instdyn::simulate::{entity_rng, simulate_panel, synthetic_cohort, CohortSpec, NoiseSpec, PanelSimOptions};
use instdyn::SystemParams;

const FIXTURE_SEED: u64 = 7;

fn main() -> instdyn::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let dir = Path::new(&dir);
    std::fs::create_dir_all(dir)?;
    let schema = PanelSchema::default();

    let spec = CohortSpec {
        entities: 20,
        params: SystemParams::stable(0.5, 0.2, 1.0)?,
        forcing_sd: 0.1,
        displacement_sd: 1.0,
        seed: FIXTURE_SEED,
    };
    let cohort = synthetic_cohort(&spec)?;
    let (e, i) = simulate_panel(
        &cohort,
        21,
        &NoiseSpec::new(0.03, FIXTURE_SEED)?,
        &PanelSimOptions::default(),
    )?;
    write_panel(File::create(dir.join("hdi_fixture.csv"))?, &e, &schema)?;

    // five noisy affine copies of the latent I score, biennial before 2002
    let years: Vec<i32> = [1996, 1998, 2000].into_iter().chain(2002..=2016).collect();
    let gaps = [(3, "AAC", 2004), (5, "AAF", 2010)];
    for k in 1..=5usize {
        let mut rng = entity_rng(FIXTURE_SEED, 100 + k as u64);
        let (scale, shift) = (0.8 + 0.1 * k as f64, 0.05 * k as f64 - 0.15);
        let mut p = PanelTable::new();
        for row in i.rows() {
            if !years.contains(&row.year) || gaps.contains(&(k, row.entity, row.year)) {
                continue;
            }
            let z: f64 = rng.sample(StandardNormal);
            let v = shift + scale * row.value + 0.05 * z;
            p.insert(row.entity, row.year, (v * 1e4).round() / 1e4)?;
        }
        write_panel(File::create(dir.join(format!("wgi_{k}.csv")))?, &p, &schema)?;
    }

    // per-entity covariates and averages with mu = 0.4 - 0.15 t - 1.5 h + noise
    let mut rng = entity_rng(FIXTURE_SEED, 200);
    let mut cov = csv::Writer::from_writer(File::create(dir.join("covariates.csv"))?);
    cov.write_record(["entity", "t_star", "h"])?;
    let mut avgs = EntityAverages::default();
    for m in &cohort {
        let t: f64 = 10.0 + 4.0 * rng.sample::<f64, _>(StandardNormal);
        let h: f64 = (0.6 + 0.4 * rng.sample::<f64, _>(StandardNormal)).abs();
        let (t, h) = ((t * 100.0).round() / 100.0, (h * 1000.0).round() / 1000.0);
        let mu = 0.4 - 0.15 * t - 1.5 * h + 0.1 * rng.sample::<f64, _>(StandardNormal);
        let kappa = 0.3 * rng.sample::<f64, _>(StandardNormal);
        cov.write_record([m.id.clone(), fmt_f64(t), fmt_f64(h)])?;
        avgs.rows.push(EntityAverage {
            entity: m.id.clone(),
            e_mean: (mu - kappa) / 2.0,
            i_mean: (mu + kappa) / 2.0,
            n_years: 21,
        });
    }
    // one covariate row with no averages and one with a blank cell
    cov.write_record(["ZZZ", "12.5", "0.4"])?;
    cov.write_record(["ZZY", "", "0.7"])?;
    cov.flush()?;
    write_averages(File::create(dir.join("averages_fixture.csv"))?, &avgs, b',')?;
    Ok(())
}
