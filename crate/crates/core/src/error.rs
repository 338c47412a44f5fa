use thiserror::Error;

/// Errors raised by the operator algebra, constructors and certifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate system label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown system label `{0}`")]
    UnknownLabel(String),

    #[error("system `{0}` must have dimension >= 1")]
    ZeroDimension(String),

    #[error("requested order is not a permutation of the operator's systems")]
    NotPermutation,

    #[error("dimension mismatch on `{label}`: expected {expected}, found {found}")]
    DimensionMismatch {
        label: String,
        expected: usize,
        found: usize,
    },

    #[error("matrix side {found} does not match the product of system dimensions {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("operator side {0} exceeds the dense limit of {max}", max = crate::tensor::MAX_SIDE)]
    TooLarge(usize),

    #[error("operators act on different systems")]
    LabelMismatch,

    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (||U^dagger U - I||_max = {0:e})")]
    NotUnitary(f64),

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("trace deviates from 1 by {0:e}")]
    TraceDeviation(f64),

    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("environment dimension {dim} is smaller than the rank {rank}")]
    InsufficientEnvironment { rank: usize, dim: usize },

    #[error("link requires at least one shared system")]
    NoSharedSystems,

    #[error("invalid label partition: {0}")]
    BadPartition(String),

    #[error("missing party label `{0}`")]
    MissingPartyLabel(String),

    #[error("hypotheses not satisfied: {0}")]
    HypothesisFailed(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
