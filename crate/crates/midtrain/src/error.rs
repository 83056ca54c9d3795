//! Crate error type.
//!
//! Variants are grouped by how the binary maps them to exit codes: anything
//! that stems from user-supplied configuration or malformed input data is
//! a config error (exit 2), I/O failures are exit 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent. `key` names
    /// the offending field as a dotted path.
    #[error("config: {key}: {reason}")]
    Config { key: String, reason: String },

    /// A step or index query fell outside the valid domain.
    #[error("{what} out of range: {value} not in [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: u64,
        min: u64,
        max: u64,
    },

    /// Records were missing a field an operation requires. At most the
    /// first few offending ids are listed.
    #[error("{count} record(s) missing required field `{field}` (e.g. {sample:?})")]
    MissingField {
        field: &'static str,
        count: usize,
        sample: Vec<String>,
    },

    /// Input data was structurally invalid (bad JSON line, empty reference,
    /// degenerate policy, and similar).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An external judge process failed or returned garbage.
    #[error("judge: {0}")]
    Judge(String),

    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code the binary should terminate with for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}
