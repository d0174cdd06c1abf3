use std::fmt;
use std::path::Path;

use heatroute_core::evaluation::EvalError;
use heatroute_core::memory::MemoryError;
use heatroute_core::perception::PerceptionError;
use heatroute_core::personas::PersonaError;
use heatroute_core::road_network::NetworkError;
use heatroute_core::simulation::{ErrorKind, SimError};
use heatroute_core::synth::GridError;
use serde::Serialize;

/// Exit-code class of a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    Usage,
    Data,
    Backend,
}

impl Failure {
    pub fn exit_code(self) -> i32 {
        match self {
            Failure::Usage => 1,
            Failure::Data => 2,
            Failure::Backend => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: Failure,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: Failure::Usage,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            kind: Failure::Data,
            message: message.into(),
        }
    }

    pub fn backend(message: impl Into<String>) -> Self {
        CliError {
            kind: Failure::Backend,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::data(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Machine-readable record printed on stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "code": self.exit_code(),
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        CliError::data(format!("network: {e}"))
    }
}

impl From<PersonaError> for CliError {
    fn from(e: PersonaError) -> Self {
        CliError::data(format!("personas: {e}"))
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<MemoryError> for CliError {
    fn from(e: MemoryError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<PerceptionError> for CliError {
    fn from(e: PerceptionError) -> Self {
        match e {
            PerceptionError::BackendTimeout { .. }
            | PerceptionError::Backend(_)
            | PerceptionError::MalformedResponse(_)
            | PerceptionError::MissingApiKey(_) => CliError::backend(e.to_string()),
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e.kind() {
            ErrorKind::Backend => CliError::backend(e.to_string()),
            ErrorKind::Config => CliError::usage(e.to_string()),
            ErrorKind::Data => CliError::data(e.to_string()),
        }
    }
}
