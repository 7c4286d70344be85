use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// What to run and where to put the reports. Read from TOML:
///
/// ```toml
/// scenario = "tree-gap"
/// seed = 7
/// out = "out/tree"
///
/// [params]
/// radii = [4, 8, 10]
/// ```
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    /// Applies `key=value`. The value is read as a TOML literal when it parses
    /// as one and as a bare string otherwise; dotted keys address nested tables.
    pub fn set_param(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got {assignment:?}")))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(CliError::Config(format!("empty key in {assignment:?}")));
        }
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));

        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().expect("nonempty key");
        let mut table = &mut self.params;
        for part in parts {
            let entry = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("{part} is not a table")))?;
        }
        table.insert(last.to_string(), value);
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&self.scenario))
    }
}

/// Typed view of the parameter table; unknown keys are errors.
pub(crate) fn parse_params<P: DeserializeOwned>(table: &toml::Table) -> Result<P> {
    toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))
}

pub(crate) fn require(cond: bool, message: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(message()))
    }
}

/// Radii must be ascending and leave one layer below the truncation.
pub(crate) fn check_radii(name: &str, radii: &[usize], truncation: usize) -> Result<()> {
    require(!radii.is_empty(), || format!("{name} is empty"))?;
    require(radii.windows(2).all(|w| w[0] < w[1]), || {
        format!("{name} must be strictly ascending")
    })?;
    let top = radii[radii.len() - 1];
    require(top < truncation, || {
        format!("{name} reaches {top}, beyond the truncation {truncation}")
    })
}
