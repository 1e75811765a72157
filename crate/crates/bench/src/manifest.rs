//! Suite manifests: named solver configs and the runs to execute.
//!
//! ```toml
//! [configs.fast]
//! mode = "newton_mr"
//! tol_cap = 0.01
//!
//! [[runs]]
//! problem = "toy_sine"
//! n = 50
//! config = "fast"
//! seed = 0
//! repeats = 3
//! ```
//!
//! `newton_mr` and `lbfgs_mr` name the presets unless the manifest
//! redefines them.

use std::collections::BTreeMap;

use minres_npc::config::FlatConfig;
use minres_npc::problems::lookup;
use minres_npc::SolverConfig;
use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub configs: BTreeMap<String, FlatConfig>,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: String,
    pub n: usize,
    pub config: String,
    pub seed: u64,
    #[serde(default = "one")]
    pub repeats: usize,
}

fn one() -> usize {
    1
}

/// One (problem, config, seed, repeat) unit of work.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub problem: String,
    pub n: usize,
    pub config_name: String,
    pub config: SolverConfig,
    pub seed: u64,
    pub repeat: usize,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Manifest(e.to_string()))
    }

    pub fn config(&self, name: &str) -> Result<SolverConfig> {
        match (self.configs.get(name), name) {
            (Some(flat), _) => Ok(flat.resolve()?),
            (None, "newton_mr") => Ok(SolverConfig::newton_mr()),
            (None, "lbfgs_mr") => Ok(SolverConfig::lbfgs_mr()),
            (None, _) => Err(BenchError::UnknownConfig(name.to_string())),
        }
    }

    /// Expands repeats and resolves every name, so a bad manifest fails
    /// before anything runs.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = Vec::new();
        for run in &self.runs {
            let config = self.config(&run.config)?;
            lookup(&run.problem, run.n)?;
            if run.repeats == 0 {
                return Err(BenchError::Manifest(format!(
                    "run {}/{} has zero repeats",
                    run.problem, run.config
                )));
            }
            for repeat in 0..run.repeats {
                cells.push(Cell {
                    problem: run.problem.clone(),
                    n: run.n,
                    config_name: run.config.clone(),
                    config: config.clone(),
                    seed: run.seed,
                    repeat,
                });
            }
        }
        Ok(cells)
    }
}
