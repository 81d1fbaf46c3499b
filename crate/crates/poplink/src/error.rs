//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the linkage pipeline.
///
/// The variants distinguish the failure classes callers handle differently:
/// configuration/validation problems (CLI exit code 2) versus runtime
/// failures (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad parameter values, unknown roles or
    /// attributes, malformed linkage types.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input file does not match the expected schema (e.g. a missing
    /// mandatory column).
    #[error("schema error: {0}")]
    Schema(String),

    /// Cross-reference violation between pipeline artifacts, such as a link
    /// that names a record id absent from the store.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Evaluation cannot proceed (empty gold set, no positives, …).
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
