use thiserror::Error;

/// Errors produced by the core pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polygon needs at least 3 distinct, non-collinear vertices (got {0})")]
    TooFewVertices(usize),
    #[error("polygon vertex {0} is not finite")]
    NonFiniteVertex(usize),
    #[error("polygon has zero area")]
    DegeneratePolygon,
    #[error("shrink ratio must lie in (0, 1], got {0}")]
    InvalidRatio(f64),
    #[error("raster shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty mask")]
    EmptyMask,
}

pub type Result<T> = std::result::Result<T, Error>;
