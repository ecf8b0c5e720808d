use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// parse/schema problems exit 1, undefined orbits exit 2, resource
/// bounds exit 3, and invariant violations (always a bug) exit 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ambient mismatch: {0}")]
    AmbientMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero element has no factorization")]
    ZeroInput,
    #[error("factorization bound exceeded: {0}")]
    FactorBound(String),
    #[error("resource bound exceeded: {0}")]
    ResourceBound(String),
    #[error("orbit undefined at step {step}: {reason}")]
    UndefinedOrbit { step: u64, reason: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error at position {position}: expected {expected}, found {found}")]
    Parse {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("operation inapplicable here: {0}")]
    Inapplicable(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
