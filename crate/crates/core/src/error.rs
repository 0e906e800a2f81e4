use thiserror::Error;

/// Errors raised by the field, tracer and estimator routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero wave vector has no helical basis")]
    ZeroWaveVector,
    #[error("wave vector ({0}, {1}, {2}) is outside the stored half-space")]
    NotInHalfSpace(i32, i32, i32),
    #[error("grid size {n} aliases stored modes (need at least {required})")]
    Aliasing { n: usize, required: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("field is not a Beltrami eigenfield: {0}")]
    NotBeltrami(String),
    #[error("CFL violation: dt*max|v|*kmax = {0:.3} exceeds 0.5")]
    Cfl(f64),
    #[error("field is not ball-supported")]
    NotBallSupported,
    #[error("support does not fit inside the box: {0}")]
    SupportOutsideBox(String),
    #[error("tube supports overlap")]
    OverlappingSupports,
    #[error("coincident seed points")]
    CoincidentSeeds,
    #[error("fit needs at least {need} usable shells, got {got}")]
    TooFewShells { need: usize, got: usize },
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
