use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node {0} has no neighbours")]
    IsolatedNode(usize),

    #[error("invalid edge probability {p} at ({i}, {j})")]
    InvalidProbability { i: usize, j: usize, p: f64 },

    #[error("isolated nodes remained after {attempts} sampling attempts")]
    IsolationRetriesExceeded { attempts: usize },

    #[error("invalid graph specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    EigConvergenceFailure { iterations: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("process is not stationary: |alpha| + |theta| = {0} >= 1")]
    NotStationary(f64),

    #[error("Lyapunov iteration did not converge after {0} iterations")]
    LyapunovNonconvergence(usize),

    #[error("stationary covariance is not positive definite")]
    CholeskyFailure,

    #[error("design matrix is rank deficient in columns {0:?}")]
    RankDeficient(Vec<usize>),

    #[error("not enough observations: {obs} rows for {params} parameters")]
    InsufficientData { obs: usize, params: usize },

    #[error("reference quantity has zero norm")]
    ZeroDenominator,

    #[error("no rows to summarize{0}")]
    EmptyGroup(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IsolatedNode(_) => "isolated_node",
            Error::InvalidProbability { .. } => "invalid_probability",
            Error::IsolationRetriesExceeded { .. } => "isolation_retries_exceeded",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::EigConvergenceFailure { .. } => "eig_convergence_failure",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NotStationary(_) => "not_stationary",
            Error::LyapunovNonconvergence(_) => "lyapunov_nonconvergence",
            Error::CholeskyFailure => "cholesky_failure",
            Error::RankDeficient(_) => "rank_deficient",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::ZeroDenominator => "zero_denominator",
            Error::EmptyGroup(_) => "empty_group",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigConvergenceFailure { .. }
                | Error::LyapunovNonconvergence(_)
                | Error::CholeskyFailure
                | Error::RankDeficient(_)
                | Error::IsolationRetriesExceeded { .. }
                | Error::NotStationary(_)
                | Error::ZeroDenominator
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
