//! JSON scenario files (schema version 1).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use revcurve_core::closeness::OracleConfig;
use revcurve_core::{Agent, AgentModel};
use serde::{Deserialize, Serialize};

use crate::fixtures::Fixture;
use crate::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default = "default_analyses")]
    pub analyses: Vec<Analysis>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Rows per sampled curve in `curves.csv`.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Either `{"fixture": "mhr-fail:n=5"}` or `{"id": ..., "model": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<AgentModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    pub value_points: usize,
    pub budget_points: usize,
    pub quantile_grid: usize,
    pub price_grid: usize,
    pub kappa_max: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        let c = OracleConfig::default();
        OracleSettings {
            value_points: c.value_points,
            budget_points: c.budget_points,
            quantile_grid: c.quantile_grid,
            price_grid: c.price_grid,
            kappa_max: c.kappa_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Curves,
    Ap,
    Ear,
    Closeness,
    Verify,
}

fn default_analyses() -> Vec<Analysis> {
    vec![Analysis::Verify]
}

fn default_betas() -> Vec<f64> {
    OracleConfig::default().betas
}

fn default_grid() -> usize {
    33
}

/// Agents and settings ready to run.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub agents: Vec<Agent>,
    pub fixtures: Vec<Fixture>,
    pub config: OracleConfig,
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Invalid { field: field.into(), message: message.into() }
}

fn in_range(field: &str, v: usize, lo: usize, hi: usize) -> Result<()> {
    if v < lo || v > hi {
        return Err(invalid(field, format!("{v} is outside {lo}..={hi}")));
    }
    Ok(())
}

impl Scenario {
    /// A scenario holding a single fixture reference.
    pub fn from_fixture(reference: &str) -> Scenario {
        Scenario {
            schema: SCHEMA_VERSION,
            name: reference.to_string(),
            agents: vec![AgentEntry { fixture: Some(reference.to_string()), id: None, model: None }],
            oracle: OracleSettings::default(),
            analyses: default_analyses(),
            betas: default_betas(),
            seed: 0,
            grid: default_grid(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid("schema", format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema)));
        }
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.agents.is_empty() {
            return Err(invalid("agents", "at least one agent is required"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            match (&a.fixture, &a.id, &a.model) {
                (Some(_), None, None) | (None, Some(_), Some(_)) => {}
                _ => {
                    return Err(invalid(format!("agents[{i}]"), "give either `fixture` alone or both `id` and `model`"))
                }
            }
        }
        let o = &self.oracle;
        in_range("oracle.value_points", o.value_points, 2, 400)?;
        in_range("oracle.budget_points", o.budget_points, 1, 200)?;
        in_range("oracle.quantile_grid", o.quantile_grid, 8, 1025)?;
        in_range("oracle.price_grid", o.price_grid, 64, 1 << 20)?;
        if !(o.kappa_max.is_finite() && o.kappa_max >= 1.0) {
            return Err(invalid("oracle.kappa_max", format!("must be a finite number >= 1, got {}", o.kappa_max)));
        }
        if self.analyses.is_empty() {
            return Err(invalid("analyses", "at least one analysis is required"));
        }
        if self.betas.is_empty() {
            return Err(invalid("betas", "at least one β is required"));
        }
        if let Some((i, b)) = self.betas.iter().enumerate().find(|(_, b)| !(b.is_finite() && **b >= 1.0)) {
            return Err(invalid(format!("betas[{i}]"), format!("β must be a finite number >= 1, got {b}")));
        }
        in_range("grid", self.grid, 2, 100_000)?;
        Ok(())
    }

    /// Expands fixture references and checks every agent.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let mut agents = Vec::new();
        let mut fixtures = Vec::new();
        for (i, entry) in self.agents.iter().enumerate() {
            if let Some(reference) = &entry.fixture {
                let f = Fixture::parse(reference, self.seed)?;
                agents.extend(f.agents.iter().cloned());
                fixtures.push(f);
            } else {
                let id = entry.id.clone().expect("validated");
                let model = entry.model.clone().expect("validated");
                let agent = Agent::new(id, model).map_err(|e| invalid(format!("agents[{i}]"), e.to_string()))?;
                agents.push(agent);
            }
        }
        let mut seen = HashSet::new();
        if let Some(a) = agents.iter().find(|a| !seen.insert(a.id.clone())) {
            return Err(invalid("agents", format!("duplicate agent id `{}`", a.id)));
        }
        Ok(Resolved { agents, fixtures, config: self.oracle_config() })
    }

    pub fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            value_points: self.oracle.value_points,
            budget_points: self.oracle.budget_points,
            quantile_grid: self.oracle.quantile_grid,
            price_grid: self.oracle.price_grid,
            kappa_max: self.oracle.kappa_max,
            betas: self.betas.clone(),
            ..OracleConfig::default()
        }
    }
}
