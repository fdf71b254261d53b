use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mixture: {}", .0.join("; "))]
    InvalidMixture(Vec<String>),

    #[error("infeasible measure: {0}")]
    InfeasibleMeasure(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("no convergence after {iterations} iterations (objective {objective:.12e}, projected gradient norm {grad_norm:.3e})")]
    NoConvergence {
        iterations: usize,
        objective: f64,
        grad_norm: f64,
        last: Box<crate::measure::GridMeasure>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
