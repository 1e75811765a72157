use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mrbench::{
    checks, emit_trace, metric_table, performance_profile, read_trace_dir, run_suite,
    write_profile_csv, Manifest, Metric,
};

#[derive(Parser)]
#[command(
    name = "mrbench",
    version,
    about = "Benchmark harness for MINRES-based Newton and L-BFGS solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a manifest and write one trace file per cell.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Build a performance profile from a directory of traces.
    Profile {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the solver invariant and reproduction suites.
    Check,
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            manifest,
            out,
            jobs,
        } => {
            let text = fs::read_to_string(&manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let manifest = Manifest::parse(&text)?;
            let traces = run_suite(&manifest, jobs)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            println!(
                "{:<40} {:>10} {:>6} {:>8} {:>12} {:>10}",
                "trace", "status", "iters", "oracles", "f", "|g|"
            );
            for ct in &traces {
                let path = emit_trace(ct, &out)?;
                let t = &ct.trace;
                println!(
                    "{:<40} {:>10} {:>6} {:>8} {:>12.4e} {:>10.2e}",
                    path.file_name().unwrap_or_default().to_string_lossy(),
                    t.status.to_string(),
                    t.iterations(),
                    t.oracles,
                    t.f,
                    t.gnorm
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Profile {
            traces,
            metric,
            out,
        } => {
            let files = read_trace_dir(&traces)?;
            anyhow::ensure!(
                !files.is_empty(),
                "no .jsonl traces in {}",
                traces.display()
            );
            let table = metric_table(&files, metric)?;
            let profile = performance_profile(&table);
            let file =
                fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_profile_csv(&profile, BufWriter::new(file))?;
            println!(
                "{} solvers × {} problems, metric {metric}, {} breakpoints -> {}",
                table.solvers.len(),
                table.problems.len(),
                profile.taus.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let reports = checks::run_all();
            for r in &reports {
                println!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            println!(
                "{} of {} suites passed",
                reports.len() - failed,
                reports.len()
            );
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
