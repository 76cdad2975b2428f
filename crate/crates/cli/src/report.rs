use std::fmt;

use serde::Serialize;

use crate::config::RunConfig;

/// How a measured value is judged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `|measured - target| ≤ tolerance`.
    Close,
    /// `measured ≤ target + tolerance`.
    AtMost,
    /// `measured ≥ target`, strictly if `tolerance` is zero.
    AtLeast,
    /// Reported only.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub criterion: Criterion,
    /// `None` for report-only entries.
    pub passed: Option<bool>,
}

impl Check {
    fn new(name: &str, measured: f64, target: f64, tolerance: f64, criterion: Criterion) -> Self {
        let passed = match criterion {
            Criterion::Close => Some((measured - target).abs() <= tolerance),
            Criterion::AtMost => Some(measured <= target + tolerance),
            Criterion::AtLeast if tolerance == 0.0 => Some(measured > target),
            Criterion::AtLeast => Some(measured >= target),
            Criterion::Info => None,
        };
        Self { name: name.to_string(), measured, target, tolerance, criterion, passed }
    }

    pub fn close(name: &str, measured: f64, target: f64, tolerance: f64) -> Self {
        Self::new(name, measured, target, tolerance, Criterion::Close)
    }

    /// Passes when `measured ≤ limit`.
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, limit, 0.0, Criterion::AtMost)
    }

    /// Passes when `measured > limit`.
    pub fn above(name: &str, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, limit, 0.0, Criterion::AtLeast)
    }

    pub fn info(name: &str, measured: f64) -> Self {
        Self::new(name, measured, f64::NAN, f64::NAN, Criterion::Info)
    }

    pub fn failed(&self) -> bool {
        self.passed == Some(false)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Self { config, checks: Vec::new(), passed: true }
    }

    pub fn push(&mut self, check: Check) {
        self.passed &= !check.failed();
        self.checks.push(check);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        writeln!(f, "{:<width$}  {:>12}  {:>12}  {:>9}  status", "check", "measured", "target", "tol")?;
        for c in &self.checks {
            let status = match c.passed {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "info",
            };
            let (target, tol) = match c.criterion {
                Criterion::Info => ("-".to_string(), "-".to_string()),
                Criterion::Close => (format!("{:.6e}", c.target), format!("{:.1e}", c.tolerance)),
                Criterion::AtMost => (format!("<= {:.2e}", c.target), "-".to_string()),
                Criterion::AtLeast => (format!("> {:.2e}", c.target), "-".to_string()),
            };
            writeln!(f, "{:<width$}  {:>12.6e}  {:>12}  {:>9}  {status}", c.name, c.measured, target, tol)?;
        }
        let total = self.checks.iter().filter(|c| c.passed.is_some()).count();
        let failed = self.checks.iter().filter(|c| c.failed()).count();
        write!(f, "{} of {total} checks passed", total - failed)
    }
}
