use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical pipelines.
///
/// Variants split into input-validation problems and numerical aborts;
/// [`Error::is_numerical`] tells them apart (the CLI maps them to different
/// exit codes).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("braid generator index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("eigenvalue {value} sits on the branch cut of the normalized logarithm")]
    BranchCut { value: String },
    #[error("solution space is nonzero but contains no invertible element (intertwiner, not conjugator)")]
    IntertwinerNotConjugator,
    #[error("input matrices do not commute (defect {defect:e})")]
    NotCommuting { defect: f64 },
    #[error("truncation degree {given} too small, raise degree to at least {required}")]
    RaiseDegree { required: usize, given: usize },
    #[error("germ is not reduced: {0}")]
    NotReduced(String),
    #[error("ill-conditioned: {0}")]
    Conditioning(String),
    #[error("degenerate configuration: {what} at {location}")]
    Degeneracy { what: String, location: String },
    #[error("step size underflow at s = {at}")]
    StepUnderflow { at: f64 },
    #[error("inconsistent rational data: {0}")]
    Inconsistent(String),
    #[error("json: {0}")]
    Json(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for aborts caused by numerics (conditioning, degeneracy, ...)
    /// rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::BranchCut { .. }
                | Error::IntertwinerNotConjugator
                | Error::Conditioning(_)
                | Error::Degeneracy { .. }
                | Error::StepUnderflow { .. }
                | Error::Inconsistent(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
