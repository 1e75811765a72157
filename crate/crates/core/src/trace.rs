//! Per-iteration records and run summaries produced by the driver.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::operator::Vector;

/// Which direction an outer iteration took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DirectionFlag {
    Sol,
    Npc,
    Gd,
}

impl fmt::Display for DirectionFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DirectionFlag::Sol => "SOL",
            DirectionFlag::Npc => "NPC",
            DirectionFlag::Gd => "GD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    /// `|g| ≤ grad_tol`.
    Converged,
    /// The linesearch fell below its minimum step.
    Stagnated,
    /// The oracle budget ran out.
    Budget,
    /// A non-finite value or gradient turned up.
    Diverged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "CONVERGED",
            Status::Stagnated => "STAGNATED",
            Status::Budget => "BUDGET",
            Status::Diverged => "DIVERGED",
        })
    }
}

/// One outer iteration: the state at `x_k` and the step taken from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    pub f: f64,
    pub gnorm: f64,
    pub flag: DirectionFlag,
    pub lambda: f64,
    pub inner_iters: usize,
    pub theta_k: f64,
    pub zeta_k: f64,
    /// Cumulative weighted oracle calls after the step.
    pub oracles: u64,
    /// Milliseconds since the solve started.
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub problem: String,
    pub config: String,
    pub status: Status,
    pub records: Vec<IterateRecord>,
    /// Final iterate.
    pub x: Vector,
    pub f: f64,
    pub gnorm: f64,
    pub oracles: u64,
    pub time_ms: f64,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Gradient norms at every iterate, final point included.
    pub fn gnorms(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.gnorm)
            .chain(std::iter::once(self.gnorm))
            .collect()
    }

    pub fn count(&self, flag: DirectionFlag) -> usize {
        self.records.iter().filter(|r| r.flag == flag).count()
    }
}
