//! The report every subcommand emits: a config echo, numeric tables and
//! pass/fail check lines.
//!
//! Reports are byte-identical across runs with the same config and seed:
//! tables and checks are assembled in a fixed order, floats are printed in
//! shortest round-trip form, and wall time goes to stderr rather than into
//! the report.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    /// Resolved configuration, always carrying the seed.
    pub config: serde_json::Value,
    pub rng_algorithm: &'static str,
    pub tables: Vec<Table>,
    pub checks: Vec<CheckLine>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            rng_algorithm: orbit_mcmc::random::RNG_ALGORITHM,
            tables: Vec::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn table(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<f64>>) {
        self.tables.push(Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        });
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.table(name, &["value"], vec![vec![value]]);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(CheckLine {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn check_close(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        let passed = (got - want).abs() <= tol;
        self.check(name, passed, format!("got {got}, want {want} (tol {tol})"));
    }

    pub fn check_at_most(&mut self, name: &str, got: f64, bound: f64) {
        self.check(name, got <= bound, format!("got {got}, bound {bound}"));
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        text
    }

    /// Plot-ready CSV: `.` decimals, `\n` line endings, one `#table` /
    /// `#checks` section header per block.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("#report,{},schema={}\n", self.command, self.schema_version));
        for table in &self.tables {
            out.push_str(&format!("#table,{}\n", table.name));
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        out.push_str("#checks\nname,passed,detail\n");
        for check in &self.checks {
            out.push_str(&format!(
                "{},{},{}\n",
                check.name,
                check.passed,
                check.detail.replace(',', ";")
            ));
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    /// Writes to `out` or stdout and returns the process exit code.
    pub fn emit(&self, out: Option<&Path>, format: Format) -> std::io::Result<i32> {
        let text = self.render(format);
        match out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        for check in &self.checks {
            eprintln!(
                "[{}] {}: {}",
                if check.passed { "pass" } else { "FAIL" },
                check.name,
                check.detail
            );
        }
        Ok(if self.passed { 0 } else { 1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}
