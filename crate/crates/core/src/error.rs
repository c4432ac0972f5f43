use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("composite dimension {dim} exceeds the guard of {guard}")]
    DimGuardExceeded { dim: usize, guard: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("not a probability distribution: {0}")]
    BadDistribution(String),

    #[error("code has no messages")]
    EmptyCode,

    #[error("all states have zero trace")]
    AllZero,

    #[error("rank deficient: numerical rank {rank}")]
    RankDeficient { rank: usize },

    #[error("pipeline failed at stage `{stage}`: {source}")]
    PipelineFailure {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("could only place {found} of {target} subsets after {attempts} attempts")]
    TargetUnreachable {
        target: usize,
        found: usize,
        attempts: usize,
    },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("phase search exhausted for message {message} after {trials} trials")]
    PhaseSearchExhausted { message: usize, trials: usize },

    #[error("lambda1 + lambda2 = {sum} >= 1 is the trivial regime")]
    TrivialRegime { sum: f64 },

    #[error("state {index} has rank {rank}, more than the purifying dimension {limit}")]
    RankTooHigh {
        index: usize,
        rank: usize,
        limit: usize,
    },

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn at_stage(self, stage: &str) -> Error {
        Error::PipelineFailure {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Whether the error stems from numerics rather than inputs or configuration.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotHermitian { .. }
            | Error::NotPsd { .. }
            | Error::AllZero
            | Error::RankDeficient { .. }
            | Error::PhaseSearchExhausted { .. }
            | Error::TargetUnreachable { .. } => true,
            Error::PipelineFailure { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
