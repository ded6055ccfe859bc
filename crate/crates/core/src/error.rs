use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: rejected record: {msg}")]
    RejectedRecord { line: usize, msg: String },

    #[error("input contains no edge records")]
    NoRecords,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot t={t} has no edges")]
    EmptySnapshot { t: i64 },

    #[error("node index {index} out of range for a universe of {n_nodes} nodes")]
    NodeIndex { index: usize, n_nodes: usize },

    #[error("incompatible inputs: {left} nodes vs {right} nodes")]
    Incompatible { left: usize, right: usize },

    #[error("time index {t} out of range: {reason}")]
    TimeOutOfRange { t: i64, reason: String },

    #[error("invalid edge distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate null distribution for {statistic}: {reason}")]
    DegenerateNull { statistic: String, reason: String },

    #[error("{0}")]
    Unsupported(String),

    #[error("nothing to attribute: statistic is zero at t={t}")]
    NothingToAttribute { t: i64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the CLI: 2 config, 3 data, 4 numeric degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::TimeOutOfRange { .. }
            | Error::InvalidSpec(_)
            | Error::Unsupported(_) => 2,
            Error::Parse { .. }
            | Error::RejectedRecord { .. }
            | Error::NoRecords
            | Error::EmptySnapshot { .. }
            | Error::NodeIndex { .. }
            | Error::Incompatible { .. }
            | Error::InvalidDistribution(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 3,
            Error::DegenerateNull { .. } | Error::NothingToAttribute { .. } => 4,
        }
    }
}
