//! Experiment records.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::formats::{parse_json, to_json_string, DiagnosticsJson};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Number of qubits.
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub num_qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_set: Option<String>,
}

/// One computed number with the exactness of the quantity it stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Value {
    pub name: String,
    pub value: f64,
    pub exactness: String,
    /// Name of the entry in `diagnostics` produced by the solve behind this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedDiagnostics {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub diagnostics: DiagnosticsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub parameters: Parameters,
    pub values: Vec<Value>,
    pub checks: Vec<Check>,
    pub diagnostics: Vec<NamedDiagnostics>,
    /// Failures that did not abort the experiment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    /// Only present when timing was requested, so default output is reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl ExperimentRecord {
    pub fn new(experiment: &str, parameters: Parameters) -> Self {
        Self {
            experiment: experiment.to_string(),
            parameters,
            values: Vec::new(),
            checks: Vec::new(),
            diagnostics: Vec::new(),
            errors: Vec::new(),
            wall_time_s: None,
        }
    }

    pub fn value(&mut self, name: &str, value: f64, exactness: &str, source: Option<&str>) {
        self.values.push(Value {
            name: name.to_string(),
            value,
            exactness: exactness.to_string(),
            source: source.map(str::to_string),
        });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.value)
    }

    pub fn all_passed(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// Invariant error carrying this record if any check failed, else a solver error
    /// if any step errored.
    pub fn require_passed(&self) -> CliResult<()> {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        if !failed.is_empty() {
            return Err(CliError::Invariant {
                message: format!("{}: failed checks [{}]", self.experiment, failed.join(", ")),
                record: Some(self.to_json()),
            });
        }
        match self.errors.first() {
            None => Ok(()),
            Some(first) => Err(CliError::Solver(format!(
                "{}: {} step(s) failed, first: {first}",
                self.experiment,
                self.errors.len()
            ))),
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        parse_json(text, "record")
    }
}
