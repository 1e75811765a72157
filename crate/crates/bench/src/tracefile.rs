//! Line-delimited JSON traces: one object per outer iteration, then one
//! summary object. Wall-clock values appear only in `time_ms` fields.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use minres_npc::{IterateRecord, Status};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, BenchError, Result};
use crate::suite::{instance_key, CellTrace};

/// Last line of a trace file. Non-finite `f`/`gnorm` are written as null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub problem: String,
    pub n: usize,
    pub config: String,
    pub seed: u64,
    pub repeat: usize,
    pub status: Status,
    pub iterations: usize,
    pub f: Option<f64>,
    pub gnorm: Option<f64>,
    pub oracles: u64,
    pub optimum: Option<f64>,
    pub time_ms: f64,
}

impl Summary {
    pub fn instance(&self) -> String {
        instance_key(&self.problem, self.n, self.seed, self.repeat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub records: Vec<IterateRecord>,
    pub summary: Summary,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Summary(Summary),
    Record(IterateRecord),
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn summary_of(ct: &CellTrace) -> Summary {
    let t = &ct.trace;
    Summary {
        problem: ct.problem.clone(),
        n: ct.n,
        config: ct.config.clone(),
        seed: ct.seed,
        repeat: ct.repeat,
        status: t.status,
        iterations: t.iterations(),
        f: finite(t.f),
        gnorm: finite(t.gnorm),
        oracles: t.oracles,
        optimum: ct.optimum,
        time_ms: t.time_ms,
    }
}

pub fn write_trace<W: Write>(ct: &CellTrace, mut w: W) -> io::Result<()> {
    for record in &ct.trace.records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut w, &summary_of(ct))?;
    w.write_all(b"\n")?;
    w.flush()
}

pub fn trace_to_string(ct: &CellTrace) -> String {
    let mut buf = Vec::new();
    write_trace(ct, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Writes `ct` into `dir` under [`CellTrace::file_name`].
pub fn emit_trace(ct: &CellTrace, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(ct.file_name());
    let file = fs::File::create(&path).map_err(io_error(&path))?;
    write_trace(ct, BufWriter::new(file)).map_err(io_error(&path))?;
    Ok(path)
}

pub fn parse_trace(text: &str, path: &Path) -> Result<TraceFile> {
    let bad = |line: usize, message: String| BenchError::TraceFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut records = Vec::new();
    let mut summary = None;
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        if summary.is_some() {
            return Err(bad(i + 1, "content after the summary line".into()));
        }
        match serde_json::from_str::<Line>(line) {
            Ok(Line::Record(r)) => records.push(r),
            Ok(Line::Summary(s)) => summary = Some(s),
            Err(e) => return Err(bad(i + 1, e.to_string())),
        }
    }
    let summary = summary.ok_or_else(|| bad(0, "missing summary line".into()))?;
    if summary.iterations != records.len() {
        return Err(bad(
            0,
            format!(
                "summary claims {} iterations, file has {}",
                summary.iterations,
                records.len()
            ),
        ));
    }
    Ok(TraceFile { records, summary })
}

pub fn read_trace(path: &Path) -> Result<TraceFile> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    parse_trace(&text, path)
}

/// Every `*.jsonl` file in `dir`, in file-name order.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<TraceFile>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_error(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_trace(p)).collect()
}

/// Drops every `time_ms` field, for comparing traces across runs.
pub fn strip_time_columns(text: &str) -> String {
    text.lines()
        .map(
            |line| match serde_json::from_str::<serde_json::Value>(line) {
                Ok(serde_json::Value::Object(mut map)) => {
                    map.remove("time_ms");
                    serde_json::Value::Object(map).to_string()
                }
                _ => line.to_string(),
            },
        )
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::Manifest;
    use crate::suite::run_suite;

    fn cells() -> Vec<CellTrace> {
        let m = Manifest::parse(
            "[[runs]]\nproblem = \"toy_sine\"\nn = 3\nconfig = \"newton_mr\"\nseed = 1\n\
             [[runs]]\nproblem = \"quadratic\"\nn = 1\nconfig = \"newton_mr\"\nseed = 2\n",
        )
        .unwrap();
        run_suite(&m, 1).unwrap()
    }

    #[test]
    fn round_trip() {
        for ct in cells() {
            let text = trace_to_string(&ct);
            let parsed = parse_trace(&text, Path::new("mem")).unwrap();
            assert_eq!(parsed.records, ct.trace.records);
            assert_eq!(parsed.summary, summary_of(&ct));
            assert_eq!(text.lines().count(), ct.trace.records.len() + 1);
        }
    }

    #[test]
    fn immediate_convergence_is_summary_only() {
        let mut ct = cells().remove(0);
        ct.trace.records.clear();
        let text = trace_to_string(&ct);
        assert_eq!(text.lines().count(), 1);
        let parsed = parse_trace(&text, Path::new("mem")).unwrap();
        assert!(parsed.records.is_empty());
    }

    #[test]
    fn record_fields_are_exact() {
        let ct = cells().remove(0);
        let text = trace_to_string(&ct);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let mut keys: Vec<&str> = first
            .as_object()
            .unwrap()
            .keys()
            .map(|k| k.as_str())
            .collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "f",
                "flag",
                "gnorm",
                "inner_iters",
                "k",
                "lambda",
                "oracles",
                "theta_k",
                "time_ms",
                "zeta_k"
            ]
        );
    }

    #[test]
    fn rejects_malformed_files() {
        let p = Path::new("mem");
        assert!(parse_trace("", p).is_err());
        assert!(parse_trace("{\"k\": 0}\n", p).is_err());
        let ct = cells().remove(0);
        let text = trace_to_string(&ct);
        let doubled = format!("{text}{text}");
        assert!(parse_trace(&doubled, p).is_err());
    }

    #[test]
    fn time_stripping() {
        let stripped = strip_time_columns("{\"a\":1,\"time_ms\":3.5}\n{\"time_ms\":1}");
        assert_eq!(stripped, "{\"a\":1}\n{}");
    }
}
