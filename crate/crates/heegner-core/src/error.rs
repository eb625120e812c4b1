//! Error taxonomy shared across the workspace.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Malformed input line in a curve or cache file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Structurally valid input that violates an invariant (point off curve, bad checksum, ...).
    #[error("validation: {0}")]
    Validation(String),
    /// Arguments outside an operation's mathematical domain.
    #[error("domain: {0}")]
    Domain(String),
    /// Requested precision or iteration budget exhausted.
    #[error("precision: {0}")]
    Precision(String),
    /// A complex value could not be identified with an exact rational point.
    #[error("recognition: {0}")]
    Recognition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
