use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Poles on or outside the unit circle. Carries the offending magnitudes.
    #[error("unstable system: pole magnitudes {magnitudes:?} are not strictly inside the unit circle")]
    Unstable { magnitudes: Vec<f64> },

    #[error("near-singular system: {0}")]
    Singular(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("spectrum is not that of a real circulant: {0}")]
    NotRealSpectrum(String),

    #[error("degenerate update: shifted iterate vanished; try a different shift or seed")]
    DegenerateUpdate,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
