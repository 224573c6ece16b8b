use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not invertible: {0}")]
    NotInvertible(String),

    #[error("covariant vanishes at the evaluation point; retry at another point")]
    SingularEvaluation,

    #[error("{op} is only defined for n in {supported}, got n = {n}")]
    UnsupportedDimension { op: &'static str, n: usize, supported: &'static str },

    #[error("tensor is {axis}-slice-singular")]
    SliceSingular { axis: usize },

    #[error("tensor is not in the orbit of the unit diagonal tensor: {0}")]
    NotInOrbit(String),

    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error("slice spectrum is not rational; exact route unavailable")]
    NonRationalSpectrum,

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("field mismatch: {0}")]
    Field(String),

    #[error("parse error: {0}")]
    Parse(String),
}
