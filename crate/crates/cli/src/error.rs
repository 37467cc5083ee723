use std::path::Path;

use declab::DecError;
use serde_json::json;

pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable input, malformed JSON, unknown keys or invalid parameters.
    Schema { kind: String, message: String },
    Solver(DecError),
}

impl CliError {
    pub fn schema(kind: &str, message: impl Into<String>) -> Self {
        CliError::Schema { kind: kind.to_string(), message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::schema("io", format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => EXIT_SCHEMA,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Schema { kind, message } => (kind.clone(), message.clone()),
            CliError::Solver(e) => (e.kind().to_string(), e.to_string()),
        };
        json!({ "error": kind, "message": message, "exit_code": self.exit_code() })
    }
}

impl From<DecError> for CliError {
    fn from(e: DecError) -> Self {
        if e.is_solver_failure() {
            CliError::Solver(e)
        } else {
            CliError::schema(e.kind(), e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::schema("schema", e.to_string())
    }
}
