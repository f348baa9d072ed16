use std::fmt;

use serde_json::json;
use skyroute_core::analysis::AnalysisError;
use skyroute_core::document::SchemaError;
use skyroute_core::sim::SimError;
use skyroute_core::store::StoreError;
use skyroute_core::ValidationReport;

#[derive(Debug)]
pub enum CliError {
    NotFound(String),
    Validation {
        message: String,
        violations: Vec<String>,
    },
    Pairing(String),
    Io(String),
    Domain(String),
    Schema(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::NotFound(_) => "not_found",
            CliError::Validation { .. } => "validation",
            CliError::Pairing(_) => "pairing",
            CliError::Io(_) => "io",
            CliError::Domain(_) => "domain",
            CliError::Schema(_) => "schema",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotFound(_) => 3,
            CliError::Validation { .. } => 4,
            CliError::Pairing(_) => 5,
            CliError::Io(_) => 6,
            CliError::Domain(_) => 7,
            CliError::Schema(_) => 8,
        }
    }

    /// One-line JSON form written to stderr.
    pub fn to_line(&self) -> String {
        let mut value = json!({ "error": self.code(), "message": self.to_string() });
        if let CliError::Validation { violations, .. } = self {
            value["violations"] = json!(violations);
        }
        value.to_string()
    }

    pub fn validation(report: &ValidationReport) -> Self {
        CliError::Validation {
            message: "route is invalid".into(),
            violations: report.messages(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation {
                message,
                violations,
            } => write!(f, "{message}: {}", violations.join("; ")),
            CliError::NotFound(m)
            | CliError::Pairing(m)
            | CliError::Io(m)
            | CliError::Domain(m)
            | CliError::Schema(m) => f.write_str(m),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::NotFound(_) => CliError::NotFound(e.to_string()),
            StoreError::Validation(report) => CliError::validation(report),
            StoreError::Schema(_) | StoreError::Parse { .. } => CliError::Schema(e.to_string()),
            StoreError::Io { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match &e {
            SimError::Invalid(report) => CliError::validation(report),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Pairing { .. } => CliError::Pairing(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Schema(format!("malformed document: {e}"))
    }
}
