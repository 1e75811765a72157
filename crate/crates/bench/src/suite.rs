//! Executes manifest cells, in parallel when asked to.

use minres_npc::problems::lookup;
use minres_npc::{solve, RunTrace, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{BenchError, Result};
use crate::manifest::{Cell, Manifest};

/// A finished cell with the metadata needed to write and profile it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrace {
    pub problem: String,
    pub n: usize,
    pub config: String,
    pub seed: u64,
    pub repeat: usize,
    pub optimum: Option<f64>,
    pub x0: Vector,
    pub trace: RunTrace,
}

impl CellTrace {
    /// Identifies the problem instance across solvers.
    pub fn instance(&self) -> String {
        instance_key(&self.problem, self.n, self.seed, self.repeat)
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}-n{}-{}-s{}-r{}.jsonl",
            self.problem, self.n, self.config, self.seed, self.repeat
        )
    }
}

pub fn instance_key(problem: &str, n: usize, seed: u64, repeat: usize) -> String {
    format!("{problem}-n{n}-s{seed}-r{repeat}")
}

/// Start-point generator of a cell: the seed picks the key and the repeat
/// index picks the stream, so repeats differ and reruns agree.
pub fn cell_rng(seed: u64, repeat: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repeat as u64);
    rng
}

pub fn run_cell(cell: &Cell) -> Result<CellTrace> {
    let spec = lookup(&cell.problem, cell.n)?;
    let x0 = spec.start_point(&mut cell_rng(cell.seed, cell.repeat));
    let mut trace = solve(&*spec.objective, &x0, &cell.config)?;
    trace.problem = cell.problem.clone();
    trace.config = cell.config_name.clone();
    Ok(CellTrace {
        problem: cell.problem.clone(),
        n: cell.n,
        config: cell.config_name.clone(),
        seed: cell.seed,
        repeat: cell.repeat,
        optimum: spec.optimum,
        x0,
        trace,
    })
}

/// Runs every cell on `jobs` threads (0 lets rayon choose). Results come
/// back in manifest order regardless of scheduling.
pub fn run_suite(manifest: &Manifest, jobs: usize) -> Result<Vec<CellTrace>> {
    let cells = manifest.cells()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Manifest(format!("thread pool: {e}")))?;
    pool.install(|| cells.par_iter().map(run_cell).collect())
}
