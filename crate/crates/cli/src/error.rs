use std::fmt;

/// A pipeline failure tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

pub type CliResult<T> = Result<T, StageError>;

pub fn fail<T>(stage: &'static str, message: impl Into<String>) -> CliResult<T> {
    Err(StageError { stage, message: message.into() })
}

pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;

    /// Like [`Stage::stage`], prefixing the message with `what`.
    fn stage_at(self, stage: &'static str, what: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: fmt::Display> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| StageError { stage, message: e.to_string() })
    }

    fn stage_at(self, stage: &'static str, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| StageError { stage, message: format!("{what}: {e}") })
    }
}
