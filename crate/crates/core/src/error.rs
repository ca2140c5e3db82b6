use thiserror::Error;

/// Failures surfaced by the algebra, factorization and kernel routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular factorization: bottom-right pivot {pivot:e} is below 1e-14")]
    SingularFactorization { pivot: f64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("pair (m={source_m} -> m={target_m}) does not occur in p- tensor the source")]
    NotAdmissible { source_m: usize, target_m: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate probe: {0}")]
    DegenerateTest(String),

    #[error("singular lambda: {}", .witnesses.join("; "))]
    SingularLambda { witnesses: Vec<String> },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("kernel expansion has off-diagonal coefficient of size {0:e}")]
    NonDiagonalExpansion(f64),

    #[error("indefinite gram: eigenvalue {eigenvalue:e} at level {level}")]
    IndefiniteGram { eigenvalue: f64, level: usize },

    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),

    #[error("spec parse error at line {line}, column {column}: {message}")]
    SpecParse { line: usize, column: usize, message: String },

    #[error("invalid spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;
