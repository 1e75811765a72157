//! Invariant and reproduction suites shared by `mrbench check` and the
//! acceptance tests. Each suite returns a [`CheckReport`]; none panics on
//! a failed property.

use std::fmt;
use std::time::Instant;

use minres_npc::fd::dense_hessian;
use minres_npc::hessians::{dense_bfgs_oracle, LbfgsStore, CAUTIOUS_THRESHOLD};
use minres_npc::invariants::DirectionAudit;
use minres_npc::minres::{krylov_lsq_oracle, minres_npc_observed, MinresFlag};
use minres_npc::problems::lookup;
use minres_npc::schedule::{RegularizationRule, ToleranceRule};
use minres_npc::{solve_observed, DirectionFlag, RunTrace, SolverConfig, Status, Vector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::manifest::Manifest;
use crate::profile::{performance_profile, MetricTable};
use crate::suite::{cell_rng, run_suite};
use crate::tracefile::{strip_time_columns, trace_to_string};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark} {}: {}", self.name, self.detail)
    }
}

/// Passes when `failures` is empty; otherwise shows the first few.
fn verdict(name: &'static str, failures: &[String], summary: String) -> CheckReport {
    let detail = if failures.is_empty() {
        summary
    } else {
        let shown: Vec<&str> = failures.iter().take(3).map(String::as_str).collect();
        format!(
            "{summary}; {} failures, e.g. {}",
            failures.len(),
            shown.join(" | ")
        )
    };
    CheckReport {
        name,
        passed: failures.is_empty(),
        detail,
    }
}

pub const SYSTEMS: usize = 200;

/// `n ∈ [2, 8]`; definite systems are `G'G + 0.1 I`, indefinite ones `(G + G')/2`.
pub fn random_system<R: Rng>(rng: &mut R, definite: bool) -> (DMatrix<f64>, Vector) {
    let n = rng.random_range(2..=8);
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let a = if definite {
        g.transpose() * &g + DMatrix::identity(n, n) * 0.1
    } else {
        (&g + g.transpose()) * 0.5
    };
    let b = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
    (a, b)
}

fn mixed_systems(seed: u64) -> Vec<(DMatrix<f64>, Vector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..SYSTEMS)
        .map(|i| random_system(&mut rng, i % 2 == 0))
        .collect()
}

/// Residual norms against the dense Krylov least-squares oracle at every
/// step, relative to `|b|`.
pub fn minres_oracle_equivalence(seed: u64) -> CheckReport {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut compared = 0;
    for (case, (a, b)) in mixed_systems(seed).iter().enumerate() {
        let beta1 = b.norm();
        let mut phis = Vec::new();
        if let Err(e) = minres_npc_observed(a, b, 0.0, 64, |s| {
            if let Some(phi) = s.phi {
                phis.push((s.t, phi));
            }
        }) {
            failures.push(format!("system {case}: {e}"));
            continue;
        }
        for (t, phi) in phis {
            compared += 1;
            match krylov_lsq_oracle(a, b, t) {
                Ok(oracle) if (phi - oracle).abs() <= 1e-8 * beta1 => {}
                Ok(oracle) => {
                    failures.push(format!("system {case} t={t}: φ={phi:e} oracle={oracle:e}"))
                }
                Err(e) => failures.push(format!("system {case} t={t}: oracle failed: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 5.0 {
        failures.push(format!("took {secs:.2}s, limit 5s"));
    }
    verdict(
        "MINRES oracle equivalence",
        &failures,
        format!("{SYSTEMS} systems, {compared} residuals within 1e-8·|b| in {secs:.2}s"),
    )
}

/// NPC certificates on indefinite systems and exact solves on consistent ones.
pub fn npc_certificate_soundness(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let (mut npc, mut sol) = (0, 0);
    for case in 0..SYSTEMS {
        let (a, b) = random_system(&mut rng, false);
        let b2 = b.norm_squared();
        let beta1 = b.norm();
        let out = match minres_npc_observed(&a, &b, 0.0, 64, |_| {}) {
            Ok(out) => out,
            Err(e) => {
                failures.push(format!("system {case}: {e}"));
                continue;
            }
        };
        let d = &out.direction;
        match out.flag {
            MinresFlag::Npc => {
                npc += 1;
                let dad = d.dot(&(&a * d));
                if dad > 1e-10 * b2 {
                    failures.push(format!("system {case}: d'Ad = {dad:e}"));
                }
                if (d.norm() - beta1).abs() > 1e-10 {
                    failures.push(format!(
                        "system {case}: |d| = {} vs |b| = {beta1}",
                        d.norm()
                    ));
                }
                let db = d.dot(&b);
                let expected = beta1 * out.residual.norm();
                if !(db > 0.0) || (db - expected).abs() > 1e-10 * b2 {
                    failures.push(format!(
                        "system {case}: d'b = {db:e}, |b||r| = {expected:e}"
                    ));
                }
            }
            MinresFlag::Sol => {
                sol += 1;
                let res = (&a * d - &b).norm();
                if res > 1e-8 * beta1 {
                    failures.push(format!("system {case}: |Ad - b| = {res:e}"));
                }
            }
            MinresFlag::MaxIter => {
                failures.push(format!("system {case}: no termination within 64 steps"))
            }
        }
    }
    if npc == 0 {
        failures.push("no NPC outcome observed".into());
    }
    verdict(
        "NPC certificate soundness",
        &failures,
        format!("{SYSTEMS} indefinite systems: {npc} NPC certificates, {sol} exact solves"),
    )
}

/// `p_t'b > p_t'Ap_t` along the SOL path and the closed form of `p_1`.
pub fn descent_inequalities(seed: u64) -> CheckReport {
    let mut failures = Vec::new();
    let mut iterates = 0;
    for (case, (a, b)) in mixed_systems(seed).iter().enumerate() {
        let ab = a * b;
        let p1 = b * (b.dot(&ab) / ab.norm_squared());
        let run = minres_npc_observed(a, b, 0.0, 64, |s| {
            let Some(p) = s.iterate else { return };
            iterates += 1;
            let pb = p.dot(b);
            let pap = p.dot(&(a * p));
            if !(pb > pap - 1e-10) {
                failures.push(format!(
                    "system {case} t={}: p'b = {pb:e}, p'Ap = {pap:e}",
                    s.t
                ));
            }
            if s.t == 1 && (p - &p1).norm() > 1e-10 * p1.norm().max(1.0) {
                failures.push(format!(
                    "system {case}: p_1 off closed form by {:e}",
                    (p - &p1).norm()
                ));
            }
        });
        if let Err(e) = run {
            failures.push(format!("system {case}: {e}"));
        }
    }
    verdict(
        "SOL-path descent inequalities",
        &failures,
        format!("{SYSTEMS} systems, {iterates} iterates"),
    )
}

/// One audited solver run.
#[derive(Debug, Clone)]
pub struct AuditedRun {
    pub label: String,
    pub config: SolverConfig,
    pub trace: RunTrace,
    pub audit: DirectionAudit,
}

fn audited(label: String, problem: &str, n: usize, seed: u64, config: SolverConfig) -> AuditedRun {
    let spec = lookup(problem, n).expect("registered problem");
    let x0 = spec.start_point(&mut cell_rng(seed, 0));
    let mut audit = DirectionAudit::new();
    let trace = solve_observed(&*spec.objective, &x0, &config, |r| {
        audit.observe(r, &config)
    })
    .expect("valid solver input");
    AuditedRun {
        label,
        config,
        trace,
        audit,
    }
}

pub const GRID_CAPS: [f64; 2] = [0.01, 0.1];
pub const GRID_EXPONENTS: [f64; 3] = [1.0, 0.5, 0.25];
pub const GRID_FACTORS: [f64; 3] = [1.0, 0.1, 0.01];

/// Toy sine runs over the full `𝖡 × β × ζ` grid with `θ_k = min{𝖡, |g|^β}`
/// and `ζ_k = ζ θ_k`.
pub fn schedule_grid_runs(n: usize) -> Vec<AuditedRun> {
    let mut runs = Vec::new();
    for cap in GRID_CAPS {
        for beta in GRID_EXPONENTS {
            for factor in GRID_FACTORS {
                let mut cfg = SolverConfig::newton_mr();
                cfg.schedule.tolerance = ToleranceRule::power(cap, beta);
                cfg.schedule.regularization = RegularizationRule::Proportional { factor };
                let label = format!("B={cap} beta={beta} zeta={factor}");
                runs.push(audited(label, "toy_sine", n, 0, cfg));
            }
        }
    }
    runs
}

/// `log|g_{k+1}| / log|g_k|` over the last three steps.
pub fn final_order_ratios(trace: &RunTrace) -> Vec<f64> {
    let g = trace.gnorms();
    let tail = &g[g.len().saturating_sub(4)..];
    tail.windows(2).map(|w| w[1].ln() / w[0].ln()).collect()
}

pub fn schedule_grid_check(runs: &[AuditedRun], seconds: f64) -> CheckReport {
    let mut failures = Vec::new();
    let mut worst_ratio = f64::INFINITY;
    for run in runs {
        let t = &run.trace;
        if t.status != Status::Converged || !(t.gnorm <= 1e-10) {
            failures.push(format!(
                "{}: {} with |g| = {:e}",
                run.label, t.status, t.gnorm
            ));
        }
        if t.iterations() > 200 {
            failures.push(format!("{}: {} iterations", run.label, t.iterations()));
        }
        if run.config.schedule.tolerance.exponent == 1.0 {
            let ratios = final_order_ratios(t);
            let g = t.gnorms();
            let tail_below_one = g[g.len().saturating_sub(4)..].iter().all(|&v| v < 1.0);
            if ratios.len() < 3 || !tail_below_one || ratios.iter().any(|&r| !(r >= 1.2)) {
                failures.push(format!("{}: final ratios {ratios:?}", run.label));
            }
            worst_ratio = ratios.iter().copied().fold(worst_ratio, f64::min);
        }
    }
    if seconds >= 60.0 {
        failures.push(format!("took {seconds:.1}s, limit 60s"));
    }
    let iters = runs.iter().map(|r| r.trace.iterations()).max().unwrap_or(0);
    verdict(
        "Local superlinear convergence",
        &failures,
        format!(
            "{} schedules converged in ≤ {iters} iterations, min final ratio {worst_ratio:.2} for β = 1, {seconds:.1}s",
            runs.len()
        ),
    )
}

pub const SADDLE_DIM: usize = 10;

/// Runs from `starts` seeded perturbations of the quartic saddle, with the
/// lowest Hessian eigenvalue at each terminal point.
pub fn saddle_runs(starts: u64) -> Vec<(AuditedRun, f64)> {
    let spec = lookup("quartic_saddle", SADDLE_DIM).expect("registered problem");
    (0..starts)
        .map(|seed| {
            let run = audited(
                format!("seed {seed}"),
                "quartic_saddle",
                SADDLE_DIM,
                seed,
                SolverConfig::newton_mr(),
            );
            let lowest = dense_hessian(&*spec.objective, &run.trace.x)
                .map(|h| h.symmetric_eigenvalues().min())
                .unwrap_or(f64::NAN);
            (run, lowest)
        })
        .collect()
}

pub fn saddle_check(runs: &[(AuditedRun, f64)]) -> CheckReport {
    let mut misses = Vec::new();
    let mut forward = 0;
    for (run, lowest) in runs {
        let t = &run.trace;
        let ok = t.status == Status::Converged && *lowest >= -1e-6 && (t.f + 0.25).abs() <= 1e-8;
        if !ok {
            misses.push(format!(
                "{}: {} f={} λ_min={lowest:e}",
                run.label, t.status, t.f
            ));
        }
        let s = run.config.linesearch.initial;
        if t.records
            .iter()
            .any(|r| r.flag == DirectionFlag::Npc && r.lambda > s)
        {
            forward += 1;
        }
    }
    let good = runs.len() - misses.len();
    let needed = (runs.len() * 99).div_ceil(100);
    let mut failures = Vec::new();
    if good < needed {
        failures.extend(misses.iter().cloned());
    }
    if forward == 0 {
        failures.push("no NPC step grew past the initial trial step".into());
    }
    let mut report = verdict(
        "Saddle avoidance",
        &failures,
        format!(
            "{good}/{} runs reached a minimizer, {forward} took forward NPC steps",
            runs.len()
        ),
    );
    if failures.is_empty() && !misses.is_empty() {
        report
            .detail
            .push_str(&format!("; misses: {}", misses.join(" | ")));
    }
    report
}

pub fn direction_property_check<'a>(runs: impl IntoIterator<Item = &'a AuditedRun>) -> CheckReport {
    let mut failures = Vec::new();
    let (mut steps, mut count) = (0, 0);
    for run in runs {
        count += 1;
        steps += run.audit.checked;
        failures.extend(
            run.audit
                .violations
                .iter()
                .map(|v| format!("{}: {v}", run.label)),
        );
    }
    verdict(
        "SOL/NPC/GD direction properties",
        &failures,
        format!("{steps} steps across {count} runs"),
    )
}

/// Compact L-BFGS against the dense recursive BFGS update, plus the
/// cautious rule.
pub fn lbfgs_equivalence(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut sequences = 0;
    let mut skipped = 0;
    while sequences < 100 {
        let n = rng.random_range(2..=10);
        let pairs = rng.random_range(1..=4);
        let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let m = if sequences % 2 == 0 {
            g.transpose() * &g + DMatrix::identity(n, n) * 0.1
        } else {
            (&g + g.transpose()) * 0.5
        };
        let mut store = LbfgsStore::new(n, 10);
        for _ in 0..pairs {
            let s = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            store.update(&s, &(&m * &s));
        }
        if store.is_empty() || store.is_degenerate() {
            skipped += 1;
            continue;
        }
        let dense = dense_bfgs_oracle(n, store.gamma(), store.pairs());
        let scale = dense.norm();
        for probe in 0..20 {
            let v = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let compact = store.apply(&v).expect("checked non-degenerate");
            let err = (&compact - &dense * &v).norm();
            if err > 1e-8 * scale * v.norm() {
                failures.push(format!(
                    "sequence {sequences} probe {probe}: error {err:e}, |B| = {scale:e}"
                ));
            }
        }
        sequences += 1;
    }

    let mut rejected = 0;
    for case in 0..100 {
        let n = rng.random_range(2..=10);
        let mut store = LbfgsStore::new(n, 10);
        let s0 = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        store.update(&s0, &(&s0 * 2.0));
        let (len, gamma) = (store.len(), store.gamma());
        let s = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let y = match case % 3 {
            0 => Vector::zeros(n),
            1 => &s * 1e-20,
            _ => {
                let z = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                (&z - &s * (z.dot(&s) / s.norm_squared())) * 1e-6
            }
        };
        let below = y.dot(&s).abs() < CAUTIOUS_THRESHOLD * s.norm_squared();
        let accepted = store.update(&s, &y);
        if below {
            rejected += 1;
            if accepted || store.len() != len || store.gamma() != gamma {
                failures.push(format!(
                    "cautious case {case}: pair with |y's| = {:e} was stored",
                    y.dot(&s).abs()
                ));
            }
        } else if !accepted {
            failures.push(format!(
                "cautious case {case}: pair above the threshold was rejected"
            ));
        }
    }
    verdict(
        "L-BFGS compact-form equivalence",
        &failures,
        format!("{sequences} pair sequences × 20 probes ({skipped} degenerate draws redrawn), {rejected} sub-threshold pairs rejected"),
    )
}

/// L-BFGS-MR with the refined curvature test on 100-dimensional Rosenbrock.
pub fn lbfgs_rosenbrock() -> (AuditedRun, CheckReport) {
    let run = audited(
        "rosenbrock n=100".into(),
        "rosenbrock",
        100,
        0,
        SolverConfig::lbfgs_mr(),
    );
    let t = &run.trace;
    let mut failures = Vec::new();
    if t.status != Status::Converged || !(t.gnorm <= 1e-10) {
        failures.push(format!("{} with |g| = {:e}", t.status, t.gnorm));
    }
    if t.oracles > run.config.max_oracles {
        failures.push(format!("{} oracle calls", t.oracles));
    }
    let fs: Vec<f64> = t.records.iter().map(|r| r.f).chain([t.f]).collect();
    if let Some(k) = fs.windows(2).position(|w| !(w[1] < w[0])) {
        failures.push(format!(
            "f not decreasing at iteration {k}: {} -> {}",
            fs[k],
            fs[k + 1]
        ));
    }
    let report = verdict(
        "L-BFGS-MR end-to-end",
        &failures,
        format!(
            "{} in {} iterations, {} oracles, f = {:e}, flags SOL/NPC/GD = {}/{}/{}",
            t.status,
            t.iterations(),
            t.oracles,
            t.f,
            t.count(DirectionFlag::Sol),
            t.count(DirectionFlag::Npc),
            t.count(DirectionFlag::Gd)
        ),
    );
    (run, report)
}

/// `ρ_s(τ)` straight from the definition.
pub fn brute_force_fraction(values: &[Vec<f64>], solver: usize, tau: f64) -> f64 {
    let mut hits = 0;
    for row in values {
        let mut best = f64::INFINITY;
        for &v in row {
            if v < best {
                best = v;
            }
        }
        let v = row[solver];
        if v.is_finite() && v / best <= tau {
            hits += 1;
        }
    }
    hits as f64 / values.len() as f64
}

pub fn profile_correctness(seed: u64) -> CheckReport {
    let mut failures = Vec::new();
    let table = |values: Vec<Vec<f64>>| MetricTable {
        problems: (0..values.len()).map(|i| format!("p{i}")).collect(),
        solvers: (0..values[0].len()).map(|i| format!("s{i}")).collect(),
        values,
    };

    let hand = performance_profile(&table(vec![vec![1.0, 2.0]]));
    let at = |tau| (hand.fraction(0, tau), hand.fraction(1, tau));
    if at(1.0) != (1.0, 0.0) || at(2.0) != (1.0, 1.0) {
        failures.push(format!(
            "hand example: τ=1 {:?}, τ=2 {:?}",
            at(1.0),
            at(2.0)
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..20 {
        let problems = rng.random_range(1..=8);
        let solvers = rng.random_range(2..=4);
        let values: Vec<Vec<f64>> = (0..problems)
            .map(|_| {
                (0..solvers)
                    .map(|_| {
                        if rng.random_bool(0.15) {
                            f64::INFINITY
                        } else {
                            rng.random_range(1..=6) as f64 * 10f64.powi(rng.random_range(0..3))
                        }
                    })
                    .collect()
            })
            .collect();
        let prof = performance_profile(&table(values.clone()));
        let mut taus: Vec<f64> = prof.taus.clone();
        taus.extend((0..10).map(|_| rng.random_range(0.5..700.0)));
        for s in 0..solvers {
            for &tau in &taus {
                let (fast, slow) = (prof.fraction(s, tau), brute_force_fraction(&values, s, tau));
                if fast != slow {
                    failures.push(format!("table {case} solver {s} τ={tau}: {fast} vs {slow}"));
                }
            }
        }
    }
    verdict(
        "Performance-profile correctness",
        &failures,
        "hand example exact, 20 random tables match brute force".into(),
    )
}

pub const DETERMINISM_MANIFEST: &str = r#"
[configs.gridded]
tol_cap = 0.01
tol_exponent = 1.0
reg_rule = "proportional"
reg_factor = 0.1

[[runs]]
problem = "toy_sine"
n = 20
config = "gridded"
seed = 7
repeats = 2

[[runs]]
problem = "quartic_saddle"
n = 10
config = "newton_mr"
seed = 3
repeats = 3

[[runs]]
problem = "rosenbrock"
n = 10
config = "lbfgs_mr"
seed = 1
repeats = 2
"#;

/// Runs a suite serially and in parallel, twice each, and compares the
/// trace files with the time columns removed.
pub fn determinism() -> CheckReport {
    let mut failures = Vec::new();
    let manifest = Manifest::parse(DETERMINISM_MANIFEST).expect("built-in manifest parses");
    let render = |jobs| -> Vec<String> {
        run_suite(&manifest, jobs)
            .expect("built-in manifest runs")
            .iter()
            .map(|ct| strip_time_columns(&trace_to_string(ct)))
            .collect()
    };
    let reference = render(1);
    for (label, jobs) in [
        ("serial rerun", 1),
        ("4 threads", 4),
        ("4 threads rerun", 4),
    ] {
        if render(jobs) != reference {
            failures.push(format!("{label} differs from the first run"));
        }
    }
    let cells = run_suite(&manifest, 1).expect("built-in manifest runs");
    for w in cells.windows(2) {
        if w[0].problem == w[1].problem && w[0].seed == w[1].seed && w[0].x0 == w[1].x0 {
            failures.push(format!("repeats of {} share a start point", w[0].problem));
        }
    }
    verdict(
        "Determinism",
        &failures,
        format!(
            "{} traces byte-identical modulo time_ms across 4 runs",
            reference.len()
        ),
    )
}

/// Every suite, in acceptance order.
pub fn run_all() -> Vec<CheckReport> {
    let mut reports = vec![
        minres_oracle_equivalence(1),
        npc_certificate_soundness(2),
        descent_inequalities(1),
    ];
    let start = Instant::now();
    let grid = schedule_grid_runs(200);
    reports.push(schedule_grid_check(&grid, start.elapsed().as_secs_f64()));
    let saddle = saddle_runs(100);
    reports.push(saddle_check(&saddle));
    reports.push(direction_property_check(
        grid.iter().chain(saddle.iter().map(|(r, _)| r)),
    ));
    reports.push(lbfgs_equivalence(3));
    reports.push(lbfgs_rosenbrock().1);
    reports.push(profile_correctness(4));
    reports.push(determinism());
    reports
}
