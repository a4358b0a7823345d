use clap::Args;
use serde_json::json;

use instdyn::panel::{
    composite_index, join_panels, load_panel, standardize_by_year, time_average, write_averages, write_joined,
    write_panel, PanelTable,
};
use instdyn::render::{trajectories_svg, write_trajectories_csv};

use super::{parse_list, Session};
use crate::fail::{CliError, CliResult};
use crate::out::open_input;
use crate::Common;

#[derive(Args, Debug)]
pub struct PrepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Long-form panel for the economic score.
    #[arg(long)]
    pub e_panel: Option<String>,
    /// Institutional indicator panels; more than one are averaged into a
    /// composite (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub i_panel: Vec<String>,
    #[arg(long)]
    pub value_column: Option<String>,
    /// Composite weights in the order of the indicator panels.
    #[arg(long)]
    pub weights: Option<String>,
    /// Use the raw values instead of per-year z-scores.
    #[arg(long)]
    pub no_standardize: bool,
    /// Also draw the joined trajectories as SVG.
    #[arg(long)]
    pub svg: bool,
}

pub fn run(a: PrepArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let e_path = s
        .cfg
        .opt("e-panel", a.e_panel)?
        .ok_or_else(|| CliError::input("--e-panel is required"))?;
    let i_flag = (!a.i_panel.is_empty()).then(|| a.i_panel.join(","));
    let i_list = s
        .cfg
        .opt("i-panel", i_flag)?
        .ok_or_else(|| CliError::input("at least one --i-panel is required"))?;
    let column = s.cfg.get("value-column", a.value_column, "value".to_string())?;
    let weights = s.cfg.opt("weights", a.weights)?;
    let raw = s.cfg.switch("no-standardize", a.no_standardize)?;
    let svg = s.cfg.switch("svg", a.svg)?;
    let config = s.cfg.finish()?;

    let schema = s.schema(&column);
    let load = |path: &str| -> CliResult<PanelTable> {
        let p = load_panel(open_input(path)?, &schema).map_err(|e| CliError::from(e).context(path))?;
        if raw {
            Ok(p)
        } else {
            standardize_by_year(&p).map_err(|e| CliError::from(e).context(path))
        }
    };
    let e = load(&e_path)?;
    let indicators: Vec<PanelTable> = parse_list::<String>("i-panel", &i_list)?
        .iter()
        .map(|p| load(p))
        .collect::<CliResult<_>>()?;
    let weights = weights.map(|w| parse_list::<f64>("weights", &w)).transpose()?;
    let i = composite_index(&indicators, weights.as_deref())?;
    let joined = join_panels(&e, &i)?;
    let avgs = time_average(&joined);

    let out_schema = instdyn::PanelSchema {
        delimiter: s.delimiter,
        ..Default::default()
    };
    let delim = s.delimiter;
    s.out
        .write_with("e_prepared.csv", |b| Ok(write_panel(b, &e, &out_schema)?))?;
    s.out
        .write_with("i_composite.csv", |b| Ok(write_panel(b, &i, &out_schema)?))?;
    s.out
        .write_with("joined.csv", |b| Ok(write_joined(b, &joined, delim)?))?;
    s.out
        .write_with("averages.csv", |b| Ok(write_averages(b, &avgs, delim)?))?;
    if svg {
        let trajs = joined.trajectories(2);
        s.out
            .write_with("trajectories.csv", |b| Ok(write_trajectories_csv(b, &trajs)?))?;
        let drawing = trajectories_svg("joined trajectories", &trajs)?;
        s.out.write_str("trajectories.svg", &drawing)?;
    }
    let counts = json!({
        "joined_rows": joined.len(),
        "entities": joined.entity_count(),
        "composite_rows": i.len(),
    });
    s.out.manifest("prep", &config, counts)
}
