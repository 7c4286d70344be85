use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "==",
        })
    }
}

/// One certified inequality with both sides. Non-finite sides never pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, lhs: f64, relation: Relation, rhs: f64, tol: f64) -> Self {
        let pass = lhs.is_finite()
            && rhs.is_finite()
            && match relation {
                Relation::Le => lhs <= rhs + tol,
                Relation::Ge => lhs >= rhs - tol,
                Relation::Eq => (lhs - rhs).abs() <= tol,
            };
        Self {
            name: name.into(),
            lhs,
            relation,
            rhs,
            tol,
            pass,
        }
    }

    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(name, lhs, Relation::Le, rhs, tol)
    }

    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(name, lhs, Relation::Ge, rhs, tol)
    }

    pub fn eq(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(name, lhs, Relation::Eq, rhs, tol)
    }
}

/// A measured value shown next to a reference it is not certified against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
    pub reference: f64,
}

impl Diagnostic {
    pub fn new(name: impl Into<String>, value: f64, reference: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub diagnostics: Vec<Diagnostic>,
    pub notes: Vec<String>,
}

/// Everything a scenario produces, before anything touches the disk.
#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub summary: Summary,
    /// `(file name, body)` pairs.
    pub csv: Vec<(String, String)>,
}

impl ScenarioOutput {
    pub fn passed(&self) -> bool {
        self.summary.pass
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.summary.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.summary.checks.iter().find(|c| c.name == name)
    }

    pub fn diagnostic(&self, name: &str) -> Option<&Diagnostic> {
        self.summary.diagnostics.iter().find(|d| d.name == name)
    }

    pub fn csv_body(&self, file: &str) -> Option<&str> {
        self.csv.iter().find(|(f, _)| f == file).map(|(_, b)| b.as_str())
    }

    /// Writes `summary.json` and the CSV files into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.csv.len() + 1);
        let summary = dir.join("summary.json");
        fs::write(&summary, serde_json::to_string_pretty(&self.summary)? + "\n")?;
        written.push(summary);
        for (name, body) in &self.csv {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Collects checks, diagnostics and files while a scenario runs.
#[derive(Default)]
pub(crate) struct Recorder {
    pub checks: Vec<Check>,
    pub diagnostics: Vec<Diagnostic>,
    pub notes: Vec<String>,
    pub csv: Vec<(String, String)>,
}

impl Recorder {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn diagnostic(&mut self, name: impl Into<String>, value: f64, reference: f64) {
        self.diagnostics.push(Diagnostic::new(name, value, reference));
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn csv(&mut self, name: impl Into<String>, body: String) {
        self.csv.push((name.into(), body));
    }

    pub fn finish<P: Serialize>(self, scenario: &str, seed: u64, params: &P) -> Result<ScenarioOutput> {
        let pass = self.checks.iter().all(|c| c.pass);
        Ok(ScenarioOutput {
            summary: Summary {
                scenario: scenario.to_string(),
                seed,
                params: serde_json::to_value(params)?,
                pass,
                checks: self.checks,
                diagnostics: self.diagnostics,
                notes: self.notes,
            },
            csv: self.csv,
        })
    }
}
