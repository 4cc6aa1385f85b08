use rug::Complex;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("quadrature did not converge (best error estimate {err_est:.3e})")]
    NonConvergence { err_est: f64 },
    #[error("pole encountered near {location} (integration reached {reached})")]
    PoleEncountered { location: Complex, reached: Complex },
    #[error("step size underflow at s = {at}")]
    StepUnderflow { at: Complex },
    #[error("newton iteration diverged after {iterations} iterations (residual {residual:.3e})")]
    Diverged { iterations: usize, residual: f64 },
    #[error("singular jacobian")]
    SingularJacobian,
    #[error("moment matrix singular at size {k} (certified digits {digits:.1})")]
    Singular { k: usize, digits: f64 },
    #[error("point {0} lies on the branch cut")]
    BranchCut(Complex),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("division by a quantity near zero: {0}")]
    DivisionNearZero(String),
    #[error("series launch failed: {0}")]
    SeriesLaunchFailed(String),
    #[error("assertion failed: {what} at {point}")]
    AssertionFailed { what: String, point: String },
    #[error("evaluation failed: {0}")]
    EvaluationFailed(String),
    #[error("precision cap {cap} reached with {digits:.1} agreeing digits")]
    PrecisionCap { cap: u32, digits: f64 },
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Machine-readable code used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonConvergence { .. } => "NONCONVERGENCE",
            Error::PoleEncountered { .. } => "POLE_ENCOUNTERED",
            Error::StepUnderflow { .. } => "STEP_UNDERFLOW",
            Error::Diverged { .. } => "DIVERGED",
            Error::SingularJacobian => "SINGULAR_JACOBIAN",
            Error::Singular { .. } => "SINGULAR",
            Error::BranchCut(_) => "BRANCH_CUT",
            Error::Domain(_) => "DOMAIN",
            Error::DivisionNearZero(_) => "DIVISION_NEAR_ZERO",
            Error::SeriesLaunchFailed(_) => "SERIES_LAUNCH_FAILED",
            Error::AssertionFailed { .. } => "ASSERTION_FAILED",
            Error::EvaluationFailed(_) => "EVALUATION_FAILED",
            Error::PrecisionCap { .. } => "PRECISION_CAP",
            Error::Usage(_) => "USAGE",
            Error::Io(_) => "IO",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
