use clap::Args;
use serde_json::json;

use instdyn::panel::load_panel;
use instdyn::persistence::{
    erosions, estimate_delta, histogram, persistence_matrix, write_histogram_csv, write_matrix_csv, DeltaReport,
    DeltaWeighting,
};

use super::{parse_list, Session};
use crate::fail::{CliError, CliResult};
use crate::out::open_input;
use crate::Common;

#[derive(Args, Debug)]
pub struct PersistenceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Long-form panel (entity, year, value).
    #[arg(long)]
    pub panel: Option<String>,
    #[arg(long)]
    pub value_column: Option<String>,
    /// Comma-separated observation years; all years in the panel by default.
    #[arg(long)]
    pub years: Option<String>,
    /// unweighted, by-count or by-lag.
    #[arg(long)]
    pub weighting: Option<String>,
    /// Bins of the erosion histogram.
    #[arg(long)]
    pub bins: Option<usize>,
}

fn weighting(name: &str) -> CliResult<DeltaWeighting> {
    match name {
        "unweighted" => Ok(DeltaWeighting::Unweighted),
        "by-count" => Ok(DeltaWeighting::ByCount),
        "by-lag" => Ok(DeltaWeighting::ByLag),
        other => Err(CliError::input(format!(
            "unknown weighting '{other}' (unweighted, by-count, by-lag)"
        ))),
    }
}

pub fn run(a: PersistenceArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let path = s
        .cfg
        .opt("panel", a.panel)?
        .ok_or_else(|| CliError::input("--panel is required"))?;
    let column = s.cfg.get("value-column", a.value_column, "value".to_string())?;
    let years = s.cfg.opt("years", a.years)?;
    let w_name = s.cfg.get("weighting", a.weighting, "unweighted".to_string())?;
    let bins = s.cfg.get("bins", a.bins, 20usize)?;
    let config = s.cfg.finish()?;
    let w = weighting(&w_name)?;

    let panel = load_panel(open_input(&path)?, &s.schema(&column)).map_err(|e| CliError::from(e).context(&path))?;
    let years = match years {
        Some(list) => parse_list::<i32>("years", &list)?,
        None => panel.years(),
    };
    let matrix = persistence_matrix(&panel, &years)?;
    let delta = estimate_delta(&matrix, w)?;
    let report = DeltaReport::from(&delta);
    let bins = histogram(&erosions(&matrix), bins.max(1));

    s.out
        .write_with("persistence_matrix.csv", |b| Ok(write_matrix_csv(b, &matrix)?))?;
    s.out
        .write_with("erosion_histogram.csv", |b| Ok(write_histogram_csv(b, &bins)?))?;
    s.out.write_json("delta.json", &report)?;
    let extra = json!({
        "delta": report,
        "entries": matrix.entries.len(),
        "failed_pairs": matrix.failed_pairs,
    });
    s.out.manifest("persistence", &config, extra)
}
