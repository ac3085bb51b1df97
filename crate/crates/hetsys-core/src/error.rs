
/// Errors raised by the invariant-form engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degree {degree} exceeds the dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },

    #[error("expected a form of degree {expected}, got degree {found}")]
    Degree { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid complex structure: {0}")]
    ComplexStructure(String),

    #[error("not positive: {0}")]
    NotPositive(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: node doubling changed the result by {0:.3e}")]
    Quadrature(f64),

    #[error("inconsistent linear system (residual {0:.3e})")]
    Inconsistent(f64),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;
