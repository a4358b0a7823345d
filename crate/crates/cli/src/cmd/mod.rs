pub mod fit;
pub mod persistence;
pub mod prep;
pub mod regress;
pub mod streamlines;
pub mod synth;

use instdyn::panel::{join_panels, load_joined, load_panel, JoinedPanel, PanelSchema};

use crate::config::Resolver;
use crate::fail::{CliError, CliResult};
use crate::out::{open_input, OutDir};
use crate::Common;

/// Config resolver, output directory and delimiter for one invocation.
pub struct Session {
    pub cfg: Resolver,
    pub out: OutDir,
    pub delimiter: u8,
}

impl Session {
    pub fn start(common: &Common) -> CliResult<Self> {
        let mut cfg = Resolver::load(common.config.as_deref())?;
        let out = cfg.get("out", common.out.clone(), ".".to_string())?;
        let tab = cfg.switch("tab", common.tab)?;
        Ok(Self {
            cfg,
            out: OutDir::create(&out)?,
            delimiter: if tab { b'\t' } else { b',' },
        })
    }

    pub fn schema(&self, value_column: &str) -> PanelSchema {
        PanelSchema {
            delimiter: self.delimiter,
            ..PanelSchema::with_value(value_column)
        }
    }
}

/// Where the joined (e, i) panel comes from.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct PanelInput {
    /// Joined panel with columns entity, year, e, i.
    #[arg(long)]
    pub joined: Option<String>,
    /// Long-form E panel (entity, year, value).
    #[arg(long)]
    pub e_panel: Option<String>,
    /// Long-form I panel (entity, year, value).
    #[arg(long)]
    pub i_panel: Option<String>,
    /// Value column of the long-form panels.
    #[arg(long)]
    pub value_column: Option<String>,
}

pub fn load_input(s: &mut Session, input: &PanelInput) -> CliResult<JoinedPanel> {
    let joined = s.cfg.opt("joined", input.joined.clone())?;
    let e_path = s.cfg.opt("e-panel", input.e_panel.clone())?;
    let i_path = s.cfg.opt("i-panel", input.i_panel.clone())?;
    let column = s
        .cfg
        .get("value-column", input.value_column.clone(), "value".to_string())?;
    match (joined, e_path, i_path) {
        (Some(j), None, None) => {
            Ok(load_joined(open_input(&j)?, s.delimiter).map_err(|e| CliError::from(e).context(&j))?)
        }
        (None, Some(e), Some(i)) => {
            let schema = s.schema(&column);
            let ep = load_panel(open_input(&e)?, &schema).map_err(|err| CliError::from(err).context(&e))?;
            let ip = load_panel(open_input(&i)?, &schema).map_err(|err| CliError::from(err).context(&i))?;
            Ok(join_panels(&ep, &ip)?)
        }
        _ => Err(CliError::input("give either --joined or both --e-panel and --i-panel")),
    }
}

pub fn parse_list<T: std::str::FromStr>(key: &str, raw: &str) -> CliResult<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::input(format!("{key}: cannot parse '{s}'")))
        })
        .collect()
}
