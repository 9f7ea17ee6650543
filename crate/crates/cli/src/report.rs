//! Check records, CSV tables and the human-readable report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Twelve significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => num(*v),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| csv_escape(&c.render())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Whether the measured value must stay below or above its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: String,
    pub digest: String,
    pub measured: f64,
    pub threshold: String,
    pub pass: bool,
    /// Set when the check could not be evaluated as intended.
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub suite: String,
    pub version: &'static str,
    pub seed: u64,
    pub config_digest: String,
    pub config_echo: String,
    pub checks: Vec<CheckRecord>,
    pub tables: Vec<(String, Table)>,
}

pub fn digest(text: &str) -> String {
    let d = Sha256::digest(text.as_bytes());
    d.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl RunReport {
    pub fn new(suite: &str, seed: u64, config_echo: String) -> Self {
        Self {
            suite: suite.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config_digest: digest(&config_echo),
            config_echo,
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, inputs: impl Into<String>, measured: f64, threshold: f64, sense: Sense) {
        let pass = match sense {
            Sense::AtMost => measured <= threshold,
            Sense::AtLeast => measured >= threshold,
        };
        let op = if sense == Sense::AtMost { "<=" } else { ">=" };
        self.push(name.into(), inputs.into(), measured, format!("{op} {}", num(threshold)), pass, None);
    }

    pub fn check_range(&mut self, name: impl Into<String>, inputs: impl Into<String>, measured: Option<f64>, lo: f64, hi: f64) {
        let threshold = format!("in [{}, {}]", num(lo), num(hi));
        match measured {
            Some(v) => self.push(name.into(), inputs.into(), v, threshold, (lo..=hi).contains(&v), None),
            None => self.push(name.into(), inputs.into(), f64::NAN, threshold, false, Some("undefined (residual at the floor)".into())),
        }
    }

    pub fn check_flag(&mut self, name: impl Into<String>, inputs: impl Into<String>, measured: f64, pass: bool, threshold: String, warning: Option<String>) {
        self.push(name.into(), inputs.into(), measured, threshold, pass, warning);
    }

    fn push(&mut self, name: String, inputs: String, measured: f64, threshold: String, pass: bool, warning: Option<String>) {
        let digest = digest(&format!("{}|{}|{}", self.config_digest, name, inputs));
        self.checks.push(CheckRecord { name, inputs, digest, measured, threshold, pass, warning });
    }

    pub fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    pub fn all_pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new(&["check", "inputs", "digest", "measured", "threshold", "pass", "warning"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone().into(),
                c.inputs.clone().into(),
                c.digest.clone().into(),
                c.measured.into(),
                c.threshold.clone().into(),
                c.pass.into(),
                c.warning.clone().unwrap_or_default().into(),
            ]);
        }
        t
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hphi {} suite={} seed={} config={}", self.version, self.suite, self.seed, self.config_digest);
        let _ = writeln!(s, "--- config ---");
        s.push_str(&self.config_echo);
        let _ = writeln!(s, "--- checks ---");
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            let _ = write!(s, "{status} {} [{}] measured={} threshold: {}", c.name, c.inputs, num(c.measured), c.threshold);
            if let Some(w) = &c.warning {
                let _ = write!(s, " warning: {w}");
            }
            s.push('\n');
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(s, "{passed}/{} checks passed", self.checks.len());
        s
    }

    /// Writes `<suite>_<table>.csv` for every table plus `<suite>_checks.csv`.
    pub fn write_csv(&self, dir: &Path) -> CliResult<Vec<String>> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        let mut written = Vec::new();
        let all = self.tables.iter().map(|(n, t)| (n.clone(), t.clone())).chain([("checks".to_string(), self.checks_table())]);
        for (name, t) in all {
            let path = dir.join(format!("{}_{}.csv", self.suite, name));
            fs::write(&path, t.to_csv()).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            written.push(path.display().to_string());
        }
        Ok(written)
    }
}
