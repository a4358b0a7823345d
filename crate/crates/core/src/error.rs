use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("parameters are not in the stable regime: alpha^2 = {alpha_sq} must be < gamma = {gamma}")]
    Unstable { alpha_sq: f64, gamma: f64 },

    #[error("singular system: alpha^2 equals gamma ({0})")]
    Singular(f64),

    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate key ({entity}, {year})")]
    DuplicateKey { entity: String, year: i32 },

    #[error("empty table")]
    EmptyTable,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("join produced no rows")]
    EmptyJoin,

    #[error("fit did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("no fits survived screening at p < {0}")]
    EmptySurvivors(f64),

    #[error("degenerate scan: {0}")]
    DegenerateScan(String),

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure comes from estimation rather than input validation or I/O.
    pub fn is_estimation_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_) | Error::EmptySurvivors(_) | Error::RankDeficient | Error::Divergence { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
