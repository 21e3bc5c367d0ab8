//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Rank-deficient design; carries the first column whose diagonal entry
    /// fell below the rank tolerance.
    #[error("singular design matrix at column {0}")]
    SingularDesign(usize),

    #[error("degenerate degrees of freedom: n = {n} <= p = {p}")]
    DegenerateDof { n: usize, p: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("did not converge within {0} iterations")]
    NotConverged(usize),

    #[error("timed out waiting for node {node} in round {round}")]
    PeerTimeout { node: u32, round: u32 },

    #[error("codec error at byte {offset}: {what}")]
    Codec { offset: usize, what: String },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("parse error at row {row}, column '{col}': {what}")]
    Parse { row: usize, col: String, what: String },

    #[error("empty file: {0}")]
    EmptyFile(String),

    #[error("unknown level '{value}' at row {row}, column '{col}'")]
    UnknownLevel { row: usize, col: String, value: String },

    #[error("invalid partition: {n_nodes} nodes for {n_rows} rows")]
    InvalidPartition { n_rows: usize, n_nodes: usize },

    #[error("coefficient name mismatch: {0}")]
    NameMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code class for the CLI: 2 usage/config, 3 data,
    /// 4 numerical, 5 network.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::MissingColumn(_)
            | Error::Parse { .. }
            | Error::EmptyFile(_)
            | Error::UnknownLevel { .. }
            | Error::InvalidPartition { .. }
            | Error::NameMismatch(_)
            | Error::Io(_)
            | Error::Csv(_) => 3,
            Error::Shape(_)
            | Error::EmptyInput(_)
            | Error::SingularDesign(_)
            | Error::DegenerateDof { .. }
            | Error::Domain(_)
            | Error::NotConverged(_) => 4,
            Error::PeerTimeout { .. } | Error::Codec { .. } => 5,
        }
    }
}
