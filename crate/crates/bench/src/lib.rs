//! Benchmark harness for `minres-npc`: suite manifests, parallel runs,
//! JSON-lines traces, performance profiles, and the invariant
//! suites behind `mrbench check`.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod error;
pub mod manifest;
pub mod profile;
pub mod suite;
pub mod tracefile;

pub use error::{BenchError, Result};
pub use manifest::{Cell, Manifest, RunSpec};
pub use profile::{
    metric_table, performance_profile, write_profile_csv, Metric, MetricTable, ProfileTable,
};
pub use suite::{run_cell, run_suite, CellTrace};
pub use tracefile::{emit_trace, read_trace, read_trace_dir, Summary, TraceFile};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/benchmarking.md")]
mod book {}
