//! Command implementations behind the `effcap` binary.
//!
//! Each command is a plain function from parsed inputs to text outputs so the
//! same code paths can be exercised from tests without spawning a process.

pub mod fit;
pub mod format;
pub mod input;
pub mod pdf_dump;
pub mod sweep;
pub mod validate;

use std::fmt;

/// How a command finished, mapped onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailed,
    Degraded,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ValidationFailed => 1,
            Outcome::Degraded => 2,
        }
    }

    /// The more severe of two outcomes.
    pub fn worst(self, other: Outcome) -> Outcome {
        match (self, other) {
            (Outcome::ValidationFailed, _) | (_, Outcome::ValidationFailed) => {
                Outcome::ValidationFailed
            }
            (Outcome::Degraded, _) | (_, Outcome::Degraded) => Outcome::Degraded,
            _ => Outcome::Success,
        }
    }
}

pub const EXIT_USAGE: i32 = 64;

/// Malformed command-line input or input file; exits with [`EXIT_USAGE`].
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Text produced by a command: the primary payload and an optional sidecar
/// (metadata or report) that goes next to `--out` or to standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub sidecar: Option<String>,
    pub outcome: Outcome,
}
