use serde::Serialize;
use serde_json::Value;

use crate::input::{InputDigest, InputError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    InputError,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::InputError => 2,
            Status::Inconclusive => 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorEntry {
    pub kind: String,
    pub message: String,
}

/// Everything a run prints to standard output. Contains no timings, so equal
/// inputs and flags give byte-identical reports.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub status: Status,
    pub checks: Vec<Check>,
    pub errors: Vec<ErrorEntry>,
    pub result: Value,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        RunReport { command, inputs: Vec::new(), status: Status::Pass, checks: Vec::new(), errors: Vec::new(), result: Value::Null }
    }

    pub fn check(&mut self, name: &str, passed: bool, witness: impl FnOnce() -> String) {
        let witness = (!passed).then(witness);
        self.checks.push(Check { name: name.into(), passed, witness });
    }

    pub fn check_witness(&mut self, name: &str, witness: Option<String>) {
        self.checks.push(Check { name: name.into(), passed: witness.is_none(), witness });
    }

    pub fn input_error(&mut self, e: &InputError) {
        let kind = match e {
            InputError::Io { .. } => "io",
            InputError::Syntax { .. } => "parse",
            InputError::Field { .. } => "field",
            InputError::Usage(_) => "usage",
        };
        self.errors.push(ErrorEntry { kind: kind.into(), message: e.to_string() });
        self.status = Status::InputError;
    }

    pub fn library_error(&mut self, e: &qk_core::Error) {
        use qk_core::Error::*;
        let input = matches!(
            e,
            InvalidGroupoid(_) | InvalidAction(_) | InvalidBiAction(_) | InvalidFunctor(_) | QuantaleMismatch(_) | TooLarge(_)
        );
        let debug = format!("{e:?}");
        let kind = debug.split('(').next().unwrap_or("Error").to_string();
        self.errors.push(ErrorEntry { kind, message: e.to_string() });
        self.status = match e {
            Inconclusive(_) => Status::Inconclusive,
            _ if input => Status::InputError,
            _ => Status::Fail,
        };
    }

    /// Settles the status from the checks unless an error already set it.
    pub fn finish(&mut self) {
        if self.errors.is_empty() && self.checks.iter().any(|c| !c.passed) {
            self.status = Status::Fail;
        }
    }

    pub fn summary(&self) -> String {
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        let mut s = format!(
            "{}: {:?}, {} checks, {} failed",
            self.command.get(1).map_or("qk", String::as_str),
            self.status,
            self.checks.len(),
            failed.len()
        );
        for c in failed {
            s.push_str(&format!("\n  FAIL {}: {}", c.name, c.witness.as_deref().unwrap_or("")));
        }
        for e in &self.errors {
            s.push_str(&format!("\n  ERROR {}: {}", e.kind, e.message));
        }
        s
    }
}
