use clap::Args;
use serde_json::json;

use instdyn::model::{ForcingTerms, PhasePoint};
use instdyn::registry::{FieldConfig, FieldRegistry};
use instdyn::render::{streamlines_svg, write_streamlines_csv};
use instdyn::simulate::{streamlines, Bounds, StreamGrid, StreamOptions, Termination};

use super::{parse_list, Session};
use crate::fail::{CliError, CliResult};
use crate::Common;

#[derive(Args, Debug)]
pub struct StreamArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub f: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    /// Vector field by registry name (stable, unconstrained).
    #[arg(long)]
    pub field: Option<String>,
    /// Shorthand for `--field unconstrained`.
    #[arg(long)]
    pub unconstrained: bool,
    /// Seeds per side of the grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Half-width of the plotted box around the equilibrium.
    #[arg(long)]
    pub extent: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Comma-separated subset of csv, svg, json.
    #[arg(long)]
    pub format: Option<String>,
}

pub fn run(a: StreamArgs) -> CliResult<()> {
    let mut s = Session::start(&a.common)?;
    let c = &mut s.cfg;
    let alpha = c.get("alpha", a.alpha, 0.5)?;
    let lambda = c.get("lambda", a.lambda, 0.2)?;
    let gamma = c.get("gamma", a.gamma, 1.0)?;
    let f = c.get("f", a.f, 0.0)?;
    let g = c.get("g", a.g, 0.0)?;
    let unconstrained = c.switch("unconstrained", a.unconstrained)?;
    let default_field = if unconstrained { "unconstrained" } else { "stable" };
    let field_name = c.get("field", a.field, default_field.to_string())?;
    let n = c.get("grid", a.grid, 12usize)?;
    let extent = c.get("extent", a.extent, 2.0)?;
    let defaults = StreamOptions::default();
    let step = c.get("step", a.step, defaults.step)?;
    let max_steps = c.get("max-steps", a.max_steps, defaults.max_steps)?;
    let formats = c.get("format", a.format, "csv,svg".to_string())?;
    let config = s.cfg.finish()?;
    let formats: Vec<String> = parse_list("format", &formats)?;
    if let Some(bad) = formats.iter().find(|f| !["csv", "svg", "json"].contains(&f.as_str())) {
        return Err(CliError::input(format!("unknown format '{bad}' (csv, svg, json)")));
    }
    if n == 0 || !(extent > 0.0) || !(step > 0.0) {
        return Err(CliError::input("grid, extent and step must be positive"));
    }

    let cfg = FieldConfig {
        alpha,
        lambda,
        gamma,
        forcing: ForcingTerms::new(f, g),
    };
    let field = FieldRegistry::builtin().build(&field_name, &cfg)?;
    let centre = field.equilibrium().unwrap_or(PhasePoint::new(0.0, 0.0));
    let grid = StreamGrid {
        bounds: Bounds::around(centre, extent)?,
        n_e: n,
        n_i: n,
    };
    let opts = StreamOptions {
        step,
        max_steps,
        ..defaults
    };
    let result = streamlines(field.as_ref(), &grid, &opts);

    if formats.iter().any(|f| f == "csv") {
        s.out
            .write_with("streamlines.csv", |b| Ok(write_streamlines_csv(b, &result)?))?;
    }
    if formats.iter().any(|f| f == "svg") {
        s.out.write_str("streamlines.svg", &streamlines_svg(&result))?;
    }
    if formats.iter().any(|f| f == "json") {
        s.out.write_json("streamlines.json", &result)?;
    }
    let tally = |t: Termination| result.lines.iter().filter(|l| l.termination == t).count();
    let summary = json!({
        "field": result.system,
        "equilibrium": result.equilibrium,
        "lines": result.lines.len(),
        "arrived": tally(Termination::Arrived),
        "exited_bounds": tally(Termination::ExitedBounds),
        "max_steps": tally(Termination::MaxSteps),
        "diverged": tally(Termination::Diverged),
        "stalled": tally(Termination::Stalled),
    });
    s.out.manifest("streamlines", &config, summary)
}
