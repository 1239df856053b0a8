use std::path::PathBuf;

/// Errors raised by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("x = {x} lies outside the curve domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("degenerate curve: endpoints coincide")]
    DegenerateCurve,

    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(&'static str),

    #[error("polylines do not share endpoints (gap {gap:e} mm)")]
    EndpointMismatch { gap: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),

    #[error("instance too large for exhaustive search: {0}")]
    SizeGuard(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("degenerate power piece: x0^d == x1^d")]
    DegeneratePiece,

    #[error("unsupported format version {0:?}")]
    UnsupportedVersion(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("validation error in {field}: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
