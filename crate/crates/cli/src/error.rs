//! Process exit codes and the error type that carries them.

use std::fmt;
use std::path::Path;

use iminfector::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FORMAT: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_DEGENERATE: u8 = 5;
const EXIT_OTHER: u8 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    pub fn format(message: impl Into<String>) -> Self {
        CliError { code: EXIT_FORMAT, message: message.into() }
    }

    /// Prefixes the message with the flag or file it concerns.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::MalformedLine { .. }
            | Error::TimeOrderViolation { .. }
            | Error::EmptyCascade { .. }
            | Error::FormatVersionMismatch { .. }
            | Error::CorruptFile(_)
            | Error::EmptyMatrix => EXIT_FORMAT,
            Error::NonFiniteUpdate { .. } => EXIT_NUMERIC,
            Error::DegenerateSplit { .. } | Error::AllZeroNorms => EXIT_DEGENERATE,
            Error::InvalidArgument(_) => EXIT_USAGE,
            Error::Io(_) => EXIT_OTHER,
        };
        CliError { code, message: err.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError { code: EXIT_OTHER, message: err.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Fails with a usage error naming `flag` unless `path` is a readable file.
pub fn require_file(flag: &str, path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{flag}: no such file: {}", path.display())))
    }
}

/// Attaches a flag and path to any error raised while reading an input.
pub fn reading<T>(flag: &str, path: &Path, result: iminfector::Result<T>) -> CliResult<T> {
    result.map_err(|e| CliError::from(e).context(format_args!("{flag} {}", path.display())))
}
