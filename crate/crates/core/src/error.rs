//! Error type shared by every simulator stage.
//!
//! Variants are grouped by how a front end should react: `Config` and
//! `Parse` mean the inputs were bad, `Io` means the filesystem failed, and
//! the rest mean the simulation itself could not proceed.

use thiserror::Error;

/// Errors produced while loading inputs or running the simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, malformed, or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A data file (beam layout, gain table, rate table) failed to parse.
    #[error("parse error in {path}, line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A geometric precondition was violated (e.g. a beam centre the
    /// satellite cannot see).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A numerical routine failed (singular system, non-positive-definite
    /// matrix, empty input).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Filesystem trouble while reading inputs or writing results.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenient result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a [`Error::Config`] with a formatted message.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Shorthand for a [`Error::Numerical`] with a formatted message.
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
