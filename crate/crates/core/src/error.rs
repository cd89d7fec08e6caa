use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("inconsistent system: relative residual {0:e} of the least-norm solution")]
    InconsistentSystem(f64),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("bad covariance: {0}")]
    BadCovariance(String),
    #[error("adaptive sampling needs the current factor as context")]
    MissingContext,
    #[error("operation requires a discrete sampling")]
    NotDiscrete,
    #[error("sketched system is singular for outcome {0}")]
    SingularSketch(usize),
    #[error("all outcome traces vanish")]
    ZeroTrace,
    #[error("matrix does not have full column rank")]
    RankDeficient,
    #[error("concatenated sketch is not invertible")]
    SingularConcatenation,
    #[error("rate {0} outside [0, 1)")]
    RhoOutOfRange(f64),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("bad selection: {0}")]
    BadSelection(String),
    #[error("sketch does not have full column rank")]
    RankDeficientSketch,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("bad probabilities: {0}")]
    BadProbabilities(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported MatrixMarket field or format: {0}")]
    UnsupportedField(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("iteration {iter}: {source}")]
    AtIteration { iter: usize, source: Box<Error> },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn dims(
    op: &str,
    expected: impl std::fmt::Display,
    found: impl std::fmt::Display,
) -> Error {
    Error::DimensionMismatch(format!("{op}: expected {expected}, found {found}"))
}
