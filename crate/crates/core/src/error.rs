use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("xi lies on the unreachable plane (xi, theta0) = 0")]
    UnreachablePlane,
    #[error("xi = 0 has no scattering coordinates")]
    DegenerateXi,
    #[error("Born iteration is not contracting at k = {k} (delta ratios {ratios:?})")]
    NonContraction { k: f64, ratios: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("inversion requires a real-valued potential")]
    ComplexPotential,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
