use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: missing column '{0}'")]
    MissingColumn(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unmapped formation '{0}': add it to the formation mapping file")]
    UnmappedFormation(String),

    #[error("team '{team}' has no fixtures in season '{season}' ({league})")]
    TeamNotInSeason {
        team: String,
        season: String,
        league: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate treatment column for cell ({main},{rival}): constant in every training split")]
    DegenerateColumn { main: usize, rival: usize },

    #[error("rank-deficient final-stage design; near-collinear cells: {0}")]
    RankDeficient(String),

    #[error("no home-perspective rows in the input")]
    NoHomeRows,

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-parsable code, used by the CLI as an error prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io(_) => "E_IO",
            Error::Csv(_) => "E_CSV",
            Error::MissingColumn(_) => "E_SCHEMA",
            Error::Config(_) => "E_CONFIG",
            Error::UnmappedFormation(_) => "E_UNMAPPED_FORMATION",
            Error::TeamNotInSeason { .. } => "E_TEAM_NOT_IN_SEASON",
            Error::InvalidParameter(_) => "E_PARAM",
            Error::DimensionMismatch(_) => "E_DIM",
            Error::DegenerateColumn { .. } => "E_DEGENERATE_COLUMN",
            Error::RankDeficient(_) => "E_RANK",
            Error::NoHomeRows => "E_NO_HOME_ROWS",
            Error::Data(_) => "E_DATA",
        }
    }
}
