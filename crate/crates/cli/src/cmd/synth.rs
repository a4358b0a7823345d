use clap::Args;
use serde_json::json;

use instdyn::model::{eigen_general, SystemParams};
use instdyn::panel::{fmt_f64, join_panels, write_joined, write_panel, PanelSchema};
use instdyn::simulate::{simulate_panel, synthetic_cohort, CohortSpec, NoiseSpec, PanelSimOptions};

use super::Session;
use crate::fail::CliResult;
use crate::Common;

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub entities: Option<usize>,
    #[arg(long)]
    pub years: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Noise per square-root year on each component.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spread of the per-entity forcing terms.
    #[arg(long)]
    pub forcing_sd: Option<f64>,
    /// Spread of the initial offset from each fixed point.
    #[arg(long)]
    pub displacement_sd: Option<f64>,
    /// Start every entity on its fixed point.
    #[arg(long)]
    pub at_fixed_points: bool,
    #[arg(long)]
    pub start_year: Option<i32>,
    #[arg(long)]
    pub steps_per_year: Option<u32>,
}

pub fn run(a: SynthArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let c = &mut s.cfg;
    let entities = c.get("entities", a.entities, 200usize)?;
    let years = c.get("years", a.years, 21usize)?;
    let alpha = c.get("alpha", a.alpha, 0.5)?;
    let lambda = c.get("lambda", a.lambda, 0.2)?;
    let gamma = c.get("gamma", a.gamma, 1.0)?;
    let sigma = c.get("sigma", a.sigma, 0.03)?;
    let seed = c.get("seed", a.seed, 42u64)?;
    let forcing_sd = c.get("forcing-sd", a.forcing_sd, 0.1)?;
    let displacement_sd = c.get("displacement-sd", a.displacement_sd, 1.0)?;
    let at_fixed = c.switch("at-fixed-points", a.at_fixed_points)?;
    let start_year = c.get("start-year", a.start_year, 1996)?;
    let steps_per_year = c.get("steps-per-year", a.steps_per_year, 4u32)?;
    let config = s.cfg.finish()?;

    let params = SystemParams::stable(alpha, lambda, gamma)?;
    let spec = CohortSpec {
        entities,
        params,
        forcing_sd,
        displacement_sd: if at_fixed { 0.0 } else { displacement_sd },
        seed,
    };
    let cohort = synthetic_cohort(&spec)?;
    let opts = PanelSimOptions {
        start_year,
        steps_per_year,
    };
    let (e, i) = simulate_panel(&cohort, years, &NoiseSpec::new(sigma, seed)?, &opts)?;
    let joined = join_panels(&e, &i)?;

    let schema = PanelSchema {
        delimiter: s.delimiter,
        ..PanelSchema::default()
    };
    let delim = s.delimiter;
    s.out.write_with("e_panel.csv", |b| Ok(write_panel(b, &e, &schema)?))?;
    s.out.write_with("i_panel.csv", |b| Ok(write_panel(b, &i, &schema)?))?;
    s.out
        .write_with("joined.csv", |b| Ok(write_joined(b, &joined, delim)?))?;
    s.out.write_with("cohort.csv", |b| {
        let mut w = csv::WriterBuilder::new().delimiter(delim).from_writer(b);
        w.write_record(["entity", "f", "g", "e_start", "i_start"])
            .map_err(instdyn::Error::from)?;
        for m in &cohort {
            w.write_record([
                m.id.clone(),
                fmt_f64(m.forcing.f),
                fmt_f64(m.forcing.g),
                fmt_f64(m.start.e),
                fmt_f64(m.start.i),
            ])
            .map_err(instdyn::Error::from)?;
        }
        w.flush()?;
        Ok(())
    })?;

    let eig = eigen_general(&params)?;
    let truth = json!({
        "tau_slow": eig.tau_mu,
        "tau_fast": eig.tau_kappa,
        "slow_axis_angle": eig.axis_angle,
        "rows": e.len(),
    });
    s.out.manifest("synth", &config, truth)
}
