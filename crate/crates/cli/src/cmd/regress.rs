use clap::Args;
use serde_json::json;

use instdyn::estimate::{empirical_variance_ratio, pca2, quadratic_term_check, regress_mu_kappa, Response};
use instdyn::panel::{load_averages, load_entity_table};

use super::{parse_list, Session};
use crate::fail::{CliError, CliResult};
use crate::out::open_input;
use crate::Common;

#[derive(Args, Debug)]
pub struct SpreadArgs {
    #[command(flatten)]
    pub common: Common,
    /// Entity averages (entity, e_mean, i_mean[, n_years]).
    #[arg(long)]
    pub averages: Option<String>,
}

pub fn run_spread(a: SpreadArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let path = s
        .cfg
        .opt("averages", a.averages)?
        .ok_or_else(|| CliError::input("--averages is required"))?;
    let config = s.cfg.finish()?;
    let avgs = load_averages(open_input(&path)?, s.delimiter).map_err(|e| CliError::from(e).context(&path))?;
    let result = json!({
        "variance_ratio": empirical_variance_ratio(&avgs)?,
        "pca": pca2(&avgs)?,
    });
    s.out.write_json("spread.json", &result)?;
    s.out.manifest("spread", &config, result)
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub averages: Option<String>,
    /// Per-entity covariates: an `entity` column plus numeric columns.
    #[arg(long)]
    pub covariates: Option<String>,
    /// Comma-separated covariate columns; all of them by default.
    #[arg(long)]
    pub columns: Option<String>,
    /// Covariate whose square is tested for an added quadratic term.
    #[arg(long)]
    pub quadratic: Option<String>,
    /// Response of the quadratic check: mu or kappa.
    #[arg(long)]
    pub response: Option<String>,
}

pub fn run_regress(a: RegressArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let avg_path = s
        .cfg
        .opt("averages", a.averages)?
        .ok_or_else(|| CliError::input("--averages is required"))?;
    let cov_path = s
        .cfg
        .opt("covariates", a.covariates)?
        .ok_or_else(|| CliError::input("--covariates is required"))?;
    let columns = s.cfg.opt("columns", a.columns)?;
    let quadratic = s.cfg.opt("quadratic", a.quadratic)?;
    let response = s.cfg.get("response", a.response, "mu".to_string())?;
    let config = s.cfg.finish()?;
    let response = match response.as_str() {
        "mu" => Response::Mu,
        "kappa" => Response::Kappa,
        other => return Err(CliError::input(format!("unknown response '{other}' (mu, kappa)"))),
    };

    let avgs = load_averages(open_input(&avg_path)?, s.delimiter).map_err(|e| CliError::from(e).context(&avg_path))?;
    let table =
        load_entity_table(open_input(&cov_path)?, s.delimiter).map_err(|e| CliError::from(e).context(&cov_path))?;
    let names: Vec<String> = match columns {
        Some(list) => parse_list("columns", &list)?,
        None => table.names.clone(),
    };
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let fit = regress_mu_kappa(&avgs, &table, &refs)?;
    let quad = quadratic
        .map(|q| quadratic_term_check(&avgs, &table, &q, response))
        .transpose()?;

    let result = json!({
        "mu_model": fit.mu_model,
        "kappa_model": fit.kappa_model,
        "dropped_entities": fit.dropped,
        "quadratic_check": quad,
    });
    s.out.write_json("regress.json", &result)?;
    s.out.manifest("regress", &config, json!({ "n": fit.mu_model.ols.n }))
}
