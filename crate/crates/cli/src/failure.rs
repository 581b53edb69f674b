use std::process::ExitCode;

use serde_json::json;
use wavesense::Error;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Error reported as one JSON line on stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: String,
    pub message: String,
    pub details: Vec<String>,
}

impl Failure {
    pub fn validation(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            kind: kind.into(),
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn runtime(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            kind: kind.into(),
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn usage(message: String) -> Self {
        Self::validation("usage", message.trim_end())
    }

    pub fn report(&self) -> ExitCode {
        let mut err = json!({ "kind": self.kind, "message": self.message });
        if !self.details.is_empty() {
            err["details"] = json!(self.details);
        }
        eprintln!("{}", json!({ "error": err, "exit_code": self.code }));
        ExitCode::from(self.code)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut f = if e.is_validation() {
            Self::validation(e.kind(), e.to_string())
        } else {
            Self::runtime(e.kind(), e.to_string())
        };
        if let Error::InvalidScenario(v) = &e {
            f.details = v.iter().map(|v| v.to_string()).collect();
        }
        f
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::runtime("io", e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::runtime("json", e.to_string())
    }
}
