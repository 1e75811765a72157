//! Performance profiles.
//!
//! For problem `p` and solver `s` with cost `t_{p,s}` the ratio is
//! `r_{p,s} = t_{p,s} / min_s t_{p,s}`, and solver `s` scores
//! `ρ_s(τ) = |{p : r_{p,s} ≤ τ}| / |P|`. Failures cost `∞`, so they never
//! count; a problem every solver failed still counts in `|P|`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use minres_npc::Status;

use crate::error::{BenchError, Result};
use crate::tracefile::TraceFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    /// Final objective value, shifted to `1 + f - f_best` per problem.
    F,
    /// Weighted oracle calls of converged runs.
    Oracles,
    /// Wall-clock time of converged runs.
    Time,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::F => "f",
            Metric::Oracles => "oracles",
            Metric::Time => "time",
        })
    }
}

/// `values[p][s]` is the cost of solver `s` on problem `p`; `∞` marks a failure.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub problems: Vec<String>,
    pub solvers: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Collects one metric per (problem instance, config). Every config must
/// have run every instance exactly once.
pub fn metric_table(traces: &[TraceFile], metric: Metric) -> Result<MetricTable> {
    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    for t in traces {
        let s = &t.summary;
        let converged = s.status == Status::Converged;
        let raw = match metric {
            Metric::F => s.f.unwrap_or(f64::INFINITY),
            Metric::Oracles if converged => s.oracles as f64,
            Metric::Time if converged => s.time_ms,
            _ => f64::INFINITY,
        };
        if cells
            .insert((s.instance(), s.config.clone()), raw)
            .is_some()
        {
            return Err(BenchError::Profile(format!(
                "config `{}` ran `{}` more than once",
                s.config,
                s.instance()
            )));
        }
    }
    let mut problems: Vec<String> = cells.keys().map(|(p, _)| p.clone()).collect();
    let mut solvers: Vec<String> = cells.keys().map(|(_, s)| s.clone()).collect();
    problems.dedup();
    solvers.sort();
    solvers.dedup();

    let mut values = Vec::with_capacity(problems.len());
    for p in &problems {
        let mut row = Vec::with_capacity(solvers.len());
        for s in &solvers {
            let v = cells
                .get(&(p.clone(), s.clone()))
                .ok_or_else(|| BenchError::Profile(format!("config `{s}` has no run on `{p}`")))?;
            row.push(*v);
        }
        if metric == Metric::F {
            let best = row.iter().copied().fold(f64::INFINITY, f64::min);
            for v in &mut row {
                *v = if v.is_finite() {
                    1.0 + (*v - best)
                } else {
                    f64::INFINITY
                };
            }
        }
        values.push(row);
    }
    Ok(MetricTable {
        problems,
        solvers,
        values,
    })
}

/// `fractions[s][i] = ρ_s(taus[i])`; `taus` holds every finite ratio, so
/// the profile is exact as a right-continuous step function.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub solvers: Vec<String>,
    pub taus: Vec<f64>,
    pub fractions: Vec<Vec<f64>>,
}

impl ProfileTable {
    /// `ρ_s(τ)` for any `τ`.
    pub fn fraction(&self, solver: usize, tau: f64) -> f64 {
        let i = self.taus.partition_point(|&t| t <= tau);
        if i == 0 {
            0.0
        } else {
            self.fractions[solver][i - 1]
        }
    }
}

/// Performance ratios `r_{p,s}`.
pub fn ratios(table: &MetricTable) -> Vec<Vec<f64>> {
    table
        .values
        .iter()
        .map(|row| {
            let best = row.iter().copied().fold(f64::INFINITY, f64::min);
            row.iter()
                .map(|&v| {
                    if !v.is_finite() {
                        f64::INFINITY
                    } else if v == best {
                        1.0
                    } else {
                        v / best
                    }
                })
                .collect()
        })
        .collect()
}

pub fn performance_profile(table: &MetricTable) -> ProfileTable {
    let r = ratios(table);
    let mut taus: Vec<f64> = r
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let problems = table.problems.len().max(1) as f64;
    let fractions = (0..table.solvers.len())
        .map(|s| {
            let mut column: Vec<f64> = r.iter().map(|row| row[s]).collect();
            column.sort_by(f64::total_cmp);
            taus.iter()
                .map(|&tau| column.partition_point(|&v| v <= tau) as f64 / problems)
                .collect()
        })
        .collect();
    ProfileTable {
        solvers: table.solvers.clone(),
        taus,
        fractions,
    }
}

/// CSV with header `solver,tau,fraction`, one row per solver and breakpoint.
pub fn write_profile_csv<W: Write>(profile: &ProfileTable, mut w: W) -> io::Result<()> {
    writeln!(w, "solver,tau,fraction")?;
    for (s, name) in profile.solvers.iter().enumerate() {
        for (tau, frac) in profile.taus.iter().zip(&profile.fractions[s]) {
            writeln!(w, "{name},{tau},{frac}")?;
        }
    }
    w.flush()
}
