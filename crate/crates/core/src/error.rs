use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by a (near-)zero quaternion (modulus {modulus:e})")]
    DegenerateInput { modulus: f64 },

    #[error("grid mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid extent is not aligned to unit cells: {0}")]
    ExtentNotIntegral(String),

    #[error("point {0:?} is not a sample of the grid")]
    OffGrid([f64; 2]),

    #[error("unknown signal id `{0}`")]
    UnknownSignal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window sample {index} has a nonzero vector part")]
    WindowNotReal { index: usize },

    #[error(
        "signal does not decay fast enough: Wiener tail {tail:e} exceeds {tolerance:e} \
         (increase the extent or the Zak radius)"
    )]
    InsufficientDecay { tail: f64, tolerance: f64 },

    #[error("theta factor {value:e} below threshold {threshold:e} at grid point {index}")]
    NearSingularTheta { value: f64, threshold: f64, index: usize },

    #[error("lattice radius {n_lat} violates Nyquist for Zak grid K = {k} (need n_lat < K/2)")]
    NyquistViolation { n_lat: usize, k: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            other => Error::Format(format!("{other:?}")),
        }
    }
}
