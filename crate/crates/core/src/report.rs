//! Named residual checks shared by the verification suites and the CLI.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when `value ≤ threshold`.
    AtMost,
    /// Passes when `value ≥ threshold`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        // NaN never passes
        let passed = value <= threshold;
        Self { name: name.into(), value, threshold, bound: Bound::AtMost, degree: None, passed }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        let passed = value >= threshold;
        Self { name: name.into(), value, threshold, bound: Bound::AtLeast, degree: None, passed }
    }

    pub fn with_degree(mut self, n: usize) -> Self {
        self.degree = Some(n);
        self
    }

    pub fn line(&self) -> String {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        let deg = self.degree.map(|n| format!(" (N={n})")).unwrap_or_default();
        let mark = if self.passed { "ok  " } else { "FAIL" };
        // norm bounds like 1 + 1e-8 lose their point in scientific notation
        let thr = if self.threshold.abs() >= 0.5 {
            format!("{:.8}", self.threshold)
        } else {
            format!("{:.1e}", self.threshold)
        };
        format!("{mark} {:<32} {:>12.3e} {op} {thr}{deg}", self.name, self.value)
    }
}

/// Checks for one suite on one instance, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SuiteReport {
    pub fn new(suite: &str, checks: Vec<Check>) -> Self {
        Self { suite: suite.into(), checks, skipped: None, error: None }
    }

    pub fn skipped(suite: &str, reason: impl Into<String>) -> Self {
        Self { suite: suite.into(), checks: vec![], skipped: Some(reason.into()), error: None }
    }

    pub fn failed(suite: &str, error: impl Into<String>) -> Self {
        Self { suite: suite.into(), checks: vec![], skipped: None, error: Some(error.into()) }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
