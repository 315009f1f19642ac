//! Error type shared across the crate.

/// Errors reported by validation, parsing, and the algorithms.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input: duplicate names, incomplete preference lists, unknown
    /// houses, missing utilities, and similar contract violations.
    #[error("input error: {0}")]
    Input(String),
    /// A file or text payload could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// A brute-force enumeration would exceed the configured cap.
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    /// The operation is defined but deliberately not supported (for example a
    /// non-alternating picking policy).
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An internal invariant failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
    /// Reading or writing a file failed.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
