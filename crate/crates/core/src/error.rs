use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a type invariant (negative width, energy gap <= 0, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Inputs are individually valid but inconsistent with each other or with
    /// a declared policy (grid mismatch, transform size, empty axis, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// Cube file could not be parsed; `line` is 1-based.
    #[error("cube parse error at line {line}: {message}")]
    CubeParse { line: usize, message: String },
    /// A model was evaluated outside its physical domain.
    #[error("model domain error: {0}")]
    Domain(String),
    /// A solve produced no usable answer (all-zero map, degenerate kinetics, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
