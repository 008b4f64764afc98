//! The JSON envelope every `--json` invocation prints.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Serialize)]
pub struct OutputEnvelope {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub inputs: Value,
    pub results: Value,
    /// Seconds per phase.
    pub timings: BTreeMap<&'static str, f64>,
}

impl OutputEnvelope {
    pub fn new(command: &'static str, inputs: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            inputs,
            results: Value::Null,
            timings: BTreeMap::new(),
        }
    }

    pub fn time(&mut self, phase: &'static str, elapsed: Duration) {
        *self.timings.entry(phase).or_default() += elapsed.as_secs_f64();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }
}
