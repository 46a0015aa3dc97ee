use thiserror::Error;

/// Every failure mode of the toolkit. Variants map onto CLI exit codes via
/// [`Error::exit_code`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("inner series is not a germ at 0 (c0 = {0:e})")]
    InnerNotGerm(f64),
    #[error("series is not invertible: linear coefficient vanishes")]
    NotInvertible,
    #[error("field must vanish to order >= 2 (lowest order found: {0})")]
    BadOrder(usize),
    #[error("truncation orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("germ is not normalized: {0}")]
    WrongNormalization(String),
    #[error("truncation order {have} too low, need at least {need}")]
    OrderTooLow { have: usize, need: usize },
    #[error("singular linear solve at order {0}")]
    SingularSolve(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("limit polygon is not regular (defect {0:e})")]
    NotRegular(f64),
    #[error("roots lie outside the disc of radius {0}")]
    RootsOutside(f64),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("model time has a pole at the origin")]
    OriginPole,
    #[error("point {0} lies outside the evaluation domain")]
    OutsideDomain(String),
    #[error("Newton inversion failed: {0}")]
    NewtonFailed(String),
    #[error("composition is not univalent near 0: {0}")]
    NotUnivalent(String),
    #[error("half-plane orientation does not match the requested chart")]
    BranchMismatch,
    #[error("path crosses slit [0, {0}]")]
    BranchCut(String),
    #[error("evaluation regions do not overlap: {0}")]
    NoOverlap(String),
    #[error("integration step failure: {0}")]
    StepFailure(String),
    #[error("integration left the domain: {0}")]
    OffDomain(String),
    #[error("polynomial fit residual {0:e} exceeds threshold")]
    FitBad(f64),
    #[error("separatrix inequality violated at t = {0}")]
    InequalityViolated(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// 0 is never returned; 1 config, io or malformed input, 2 degenerate
    /// input, 3 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateInput(_) | Error::NotRegular(_) => 2,
            Error::Config(_)
            | Error::Io(_)
            | Error::InnerNotGerm(_)
            | Error::NotInvertible
            | Error::BadOrder(_)
            | Error::OrderMismatch(..)
            | Error::WrongNormalization(_)
            | Error::OrderTooLow { .. }
            | Error::RootsOutside(_) => 1,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
