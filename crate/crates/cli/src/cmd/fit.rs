use clap::Args;
use serde_json::json;

use instdyn::estimate::{angular_scan_with, relaxation_pipeline, FitOptions, DEFAULT_P_THRESHOLD};
use instdyn::model::infer_alpha_lambda;
use instdyn::render::{scan_svg, write_fits_csv, write_scan_csv};

use super::{load_input, parse_list, PanelInput, Session};
use crate::config::Resolver;
use crate::fail::{CliError, CliResult};
use crate::Common;

/// Fit settings shared by `fit` and `scan`.
#[derive(Args, Debug, Clone)]
pub struct FitSettings {
    #[arg(long)]
    pub p_threshold: Option<f64>,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Entities with fewer years are skipped.
    #[arg(long)]
    pub min_years: Option<usize>,
}

struct Resolved {
    p_threshold: f64,
    opts: FitOptions,
    min_years: usize,
}

fn resolve(c: &mut Resolver, f: &FitSettings) -> CliResult<Resolved> {
    let d = FitOptions::default();
    let r = Resolved {
        p_threshold: c.get("p-threshold", f.p_threshold, DEFAULT_P_THRESHOLD)?,
        opts: FitOptions {
            tau_min: c.get("tau-min", f.tau_min, d.tau_min)?,
            tau_max: c.get("tau-max", f.tau_max, d.tau_max)?,
            max_iter: c.get("max-iter", f.max_iter, d.max_iter)?,
        },
        min_years: c.get("min-years", f.min_years, 5usize)?,
    };
    if !(r.opts.tau_min > 0.0 && r.opts.tau_max > r.opts.tau_min) {
        return Err(CliError::input("need 0 < tau-min < tau-max"));
    }
    if !(0.0..=1.0).contains(&r.p_threshold) {
        return Err(CliError::input("p-threshold must lie in [0, 1]"));
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: PanelInput,
    #[command(flatten)]
    pub fit: FitSettings,
    /// Projection angle of the first axis in degrees; the second is +90.
    #[arg(long)]
    pub theta: Option<f64>,
}

pub fn run_fit(a: FitArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let joined = load_input(&mut s, &a.input)?;
    let r = resolve(&mut s.cfg, &a.fit)?;
    let theta = s.cfg.get("theta", a.theta, 45.0)?;
    let config = s.cfg.finish()?;

    let trajs = joined.trajectories(r.min_years);
    if trajs.is_empty() {
        return Err(CliError::input(format!("no entity has >= {} years", r.min_years)));
    }
    let summary = relaxation_pipeline(&trajs, theta, r.p_threshold, &r.opts);
    let all: Vec<_> = summary.fits_mu.iter().chain(&summary.fits_kappa).cloned().collect();
    s.out.write_with("fits.csv", |b| Ok(write_fits_csv(b, &all)?))?;

    let aggregate = json!({
        "theta": theta,
        "p_threshold": r.p_threshold,
        "trajectories": trajs.len(),
        "tau_mu": summary.tau_mu,
        "tau_kappa": summary.tau_kappa,
        "mean_tau_mu": summary.tau_mu.map(|t| t.mean_tau),
        "mean_tau_kappa": summary.tau_kappa.map(|t| t.mean_tau),
        "alpha": summary.inferred.map(|p| p.0),
        "lambda": summary.inferred.map(|p| p.1),
    });
    s.out.write_json("aggregate.json", &aggregate)?;
    s.out.manifest("fit", &config, aggregate)?;

    match (summary.tau_mu, summary.tau_kappa) {
        (None, _) | (_, None) => Err(CliError::estimation(format!(
            "no sound fits survived at p < {} on {}",
            r.p_threshold,
            if summary.tau_mu.is_none() {
                "the first axis"
            } else {
                "the second axis"
            }
        ))),
        _ => Ok(()),
    }
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: PanelInput,
    #[command(flatten)]
    pub fit: FitSettings,
    #[arg(long)]
    pub theta_min: Option<f64>,
    #[arg(long)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub theta_step: Option<f64>,
    /// Explicit comma-separated grid; overrides min/max/step.
    #[arg(long)]
    pub thetas: Option<String>,
}

pub fn run_scan(a: ScanArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let joined = load_input(&mut s, &a.input)?;
    let r = resolve(&mut s.cfg, &a.fit)?;
    let lo = s.cfg.get("theta-min", a.theta_min, 0.0)?;
    let hi = s.cfg.get("theta-max", a.theta_max, 90.0)?;
    let step = s.cfg.get("theta-step", a.theta_step, 5.0)?;
    let explicit = s.cfg.opt("thetas", a.thetas)?;
    let config = s.cfg.finish()?;

    let grid: Vec<f64> = match explicit {
        Some(list) => parse_list("thetas", &list)?,
        None => {
            if !(step > 0.0) || hi < lo {
                return Err(CliError::input("need theta-step > 0 and theta-max >= theta-min"));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| lo + step * k as f64).collect()
        }
    };
    let trajs = joined.trajectories(r.min_years);
    let scan = angular_scan_with(&trajs, &grid, r.p_threshold, &r.opts)?;

    s.out.write_with("scan.csv", |b| Ok(write_scan_csv(b, &scan)?))?;
    s.out.write_json("scan.json", &scan)?;
    s.out.write_str("scan.svg", &scan_svg(&scan))?;
    let extra = json!({
        "theta_star": scan.theta_star,
        "fit_p_value": scan.fit_p_value,
        "concave": scan.concave,
    });
    s.out.manifest("scan", &config, extra)
}

#[derive(Args, Debug)]
pub struct InferArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub tau_mu: Option<f64>,
    #[arg(long)]
    pub tau_kappa: Option<f64>,
    /// Read the means from a `fit` aggregate file instead.
    #[arg(long)]
    pub aggregate: Option<String>,
}

pub fn run_infer(a: InferArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let tau_mu = s.cfg.opt("tau-mu", a.tau_mu)?;
    let tau_kappa = s.cfg.opt("tau-kappa", a.tau_kappa)?;
    let aggregate = s.cfg.opt("aggregate", a.aggregate)?;
    let config = s.cfg.finish()?;

    let (tm, tk) = match (tau_mu, tau_kappa, aggregate) {
        (Some(m), Some(k), None) => (m, k),
        (None, None, Some(path)) => {
            let v: serde_json::Value = serde_json::from_reader(crate::out::open_input(&path)?)
                .map_err(|e| CliError::input(format!("{path}: {e}")))?;
            let field = |k: &str| {
                v[k].as_f64()
                    .ok_or_else(|| CliError::input(format!("{path}: missing numeric '{k}'")))
            };
            (field("mean_tau_mu")?, field("mean_tau_kappa")?)
        }
        _ => return Err(CliError::input("give --tau-mu and --tau-kappa, or --aggregate")),
    };
    let (alpha, lambda) = infer_alpha_lambda(tm, tk)?;
    let result = json!({ "tau_mu": tm, "tau_kappa": tk, "alpha": alpha, "lambda": lambda });
    println!("{}", serde_json::to_string(&result)?);
    s.out.write_json("infer.json", &result)?;
    s.out.manifest("infer", &config, result)
}
