use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("syntax error at offset {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown function `{name}` at offset {position}")]
    UnknownFunction { name: String, position: usize },
    #[error("division by an expression that normalizes to zero")]
    DivisionByZero,
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("circular substitution of `{0}`")]
    CircularSubstitution(String),
    #[error("`{0}` appears non-polynomially")]
    NotPolynomial(String),
    #[error("substitution did not reach a fixpoint within {0} passes")]
    FixpointLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("series orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("order {next} exceeds the declared series order {max}")]
    OrderOverflow { next: usize, max: usize },
    #[error("`{0}` is not a declared dependent variable")]
    UnknownDependent(String),
    #[error("series has no constant term to invert")]
    NotInvertible,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LieError {
    #[error("jet symbol `{0}` is at the configured depth and cannot be differentiated")]
    JetDepthExceeded(String),
    #[error("prolongation order {0} exceeds the supported maximum {1}")]
    UnsupportedOrder(usize, usize),
    #[error("equation {0} is not affine in its leading derivative `{1}`")]
    NotAffine(usize, String),
    #[error("leading derivatives are not triangular: {0}")]
    InconsistentChoice(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("case {0} needs a nonzero b")]
    InvalidCaseParams(String),
    #[error("unknown solution family `{0}`")]
    UnknownFamily(String),
    #[error("profile extraction failed for {family}: {reason}")]
    ExtractionFailure { family: String, reason: String },
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("no binding for `{0}`")]
    MissingBinding(String),
    #[error("numeric singularity evaluating `{0}`")]
    NumericSingularity(String),
    #[error("sample region violates the singular locus: {0}")]
    SingularRegion(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl From<LieError> for NumericError {
    fn from(e: LieError) -> Self {
        NumericError::Model(e.into())
    }
}

impl From<SeriesError> for NumericError {
    fn from(e: SeriesError) -> Self {
        NumericError::Model(e.into())
    }
}

/// Problems with a deck or command line; these map to exit code 2.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid deck: {0}")]
    Parse(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl From<LieError> for ConfigError {
    fn from(e: LieError) -> Self {
        ConfigError::Model(e.into())
    }
}
