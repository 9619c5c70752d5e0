use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("stratification infeasible: {0}")]
    StratificationInfeasible(String),

    #[error("validation split infeasible for client {client_id}: {reason}")]
    ValidationInfeasible { client_id: u32, reason: String },

    #[error("rebalance infeasible: {0}")]
    RebalanceInfeasible(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("AUC undefined: {0}")]
    AucUndefined(String),

    #[error("threshold undefined: {0}")]
    ThresholdUndefined(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("no information: {0}")]
    NoInformation(String),

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("threshold grid mismatch: {0}")]
    GridMismatch(String),

    #[error("comparison plan error: {0}")]
    Plan(String),

    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("client {client_id}: {source}")]
    Client {
        client_id: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub fn client(client_id: u32, source: Error) -> Self {
        Error::Client {
            client_id,
            source: Box::new(source),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad configuration or malformed inputs, as
    /// opposed to failures that happen while an experiment is running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidConfig(_)
            | Error::InvalidInput(_)
            | Error::StratificationInfeasible(_)
            | Error::ValidationInfeasible { .. }
            | Error::RebalanceInfeasible(_)
            | Error::Parse { .. }
            | Error::Shape { .. }
            | Error::GridMismatch(_)
            | Error::Plan(_)
            | Error::MissingArtifact(_) => true,
            Error::Client { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
