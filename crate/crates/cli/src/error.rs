use std::fmt;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Usage = 1,
    Validation = 2,
    Runtime = 3,
}

/// A failure tagged with the pipeline stage it came from.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    pub fn validation(stage: &'static str, message: impl fmt::Display) -> CliError {
        CliError { stage, status: ExitStatus::Validation, message: message.to_string() }
    }

    pub fn runtime(stage: &'static str, message: impl fmt::Display) -> CliError {
        CliError { stage, status: ExitStatus::Runtime, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error [{}]: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}
