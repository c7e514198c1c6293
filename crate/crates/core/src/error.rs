use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficients are not admissible (need f0 != 0, f1 f4 - f3^2 < 0, f2 f3 - f4^2 < 0)")]
    NonAdmissible,
    #[error("arc-length normalization violated: scaled g11 residual {residual:e} exceeds {tol:e}")]
    NotNormalized { residual: f64, tol: f64 },
    #[error("quadratic constraint has no admissible real root")]
    NoAdmissibleRoot,
    #[error("constraint equation degenerates (f1 = 0 and no linear solution)")]
    Degenerate,
    #[error("t = {t} is outside the domain of oracle {name}")]
    OutOfDomain { name: &'static str, t: f64 },
    #[error("h0 vanishes; the singular vector field is undefined")]
    ZeroH0,
    #[error("the initial parameter a must be nonzero")]
    ZeroA,
    #[error("Taylor recurrence is numerically singular at order {order}")]
    SingularRecurrence { order: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("start point violates the constraints: R1 = {r1:e}, R2 = {r2:e}")]
    ConstraintViolatedAtStart { r1: f64, r2: f64 },
    #[error("startup failure: {0}")]
    StartupFailure(Box<Error>),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("trajectory did not terminate at a zero of h0")]
    NoDegeneration,
    #[error("fit window too small: {0}")]
    FitWindowTooSmall(String),
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("unknown oracle {0:?}")]
    UnknownOracle(String),
    #[error("unknown transformation {0:?}")]
    UnknownTau(String),
    #[error("malformed trajectory file: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
