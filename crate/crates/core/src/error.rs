use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is numerically zero")]
    ZeroMatrix,
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("columns are not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("cluster partition mismatch: {0}")]
    PartitionMismatch(String),
    #[error("exhaustive search refused: {0}")]
    TooLarge(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("measurement set is empty")]
    EmptyMeasurements,
    #[error("image side {side} does not square to {n} pixels")]
    InvalidImageSide { side: usize, n: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad file format: {0}")]
    Format(String),
}
