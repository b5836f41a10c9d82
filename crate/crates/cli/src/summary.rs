//! Machine-readable run summary and CSV output helpers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dnmap_core::linalg::C64;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub value: f64,
    pub rule: Rule,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: BTreeMap<String, Check>,
    pub values: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl Summary {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            passed: true,
            checks: BTreeMap::new(),
            values: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn check(&mut self, key: impl Into<String>, value: f64, rule: Rule, limit: f64) {
        let pass = match rule {
            Rule::AtMost => value <= limit,
            Rule::AtLeast => value >= limit,
        };
        self.passed &= pass;
        self.checks.insert(key.into(), Check { value, rule, limit, pass });
    }

    pub fn value(&mut self, key: impl Into<String>, value: f64) {
        self.values.insert(key.into(), value);
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// Stable key fragment for a Laplace variable.
pub fn tau_key(t: C64) -> String {
    if t.im == 0.0 {
        format!("{}", t.re)
    } else {
        format!("{}{:+}i", t.re, t.im)
    }
}

/// CSV file with a fixed header; records are written as display-formatted numbers.
pub struct Table {
    writer: csv::Writer<std::fs::File>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[String], summary: &mut Summary) -> csv::Result<Self> {
        let mut writer = csv::Writer::from_path(dir.join(name))?;
        writer.write_record(header)?;
        summary.outputs.push(name.to_string());
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> csv::Result<()> {
        self.writer.write_record(fields)
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.writer.flush()
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_combine() {
        let mut s = Summary::new("sweep", 1);
        s.check("a", 1e-12, Rule::AtMost, 1e-10);
        assert!(s.passed);
        s.check("b", 0.0, Rule::AtLeast, 1e-10);
        assert!(!s.passed && !s.checks["b"].pass);
        s.check("c", f64::NAN, Rule::AtMost, 1.0);
        assert!(!s.checks["c"].pass);
    }

    #[test]
    fn tau_keys() {
        assert_eq!(tau_key(C64::new(4.0, 0.0)), "4");
        assert_eq!(tau_key(C64::new(3.0, -1.5)), "3-1.5i");
    }
}
