//! The outer linesearch loop.
//!
//! Each iteration solves `(B_k + ζ_k I) p = -g_k` with [`minres_npc`] and
//! picks one of three directions:
//!
//! * `SOL`: the inexact solution, if it passes the curvature test;
//! * `NPC`: the non-positive-curvature direction MINRES certified;
//! * `GD`: `-g_k`, whenever the other two are rejected.
//!
//! `SOL` and `GD` steps use Armijo backtracking; `NPC` steps use the
//! forward/backward search, judged against the curvature of the
//! unregularized `B_k`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hessians::{exact_hvp_operator, regularized, LbfgsStore};
use crate::linesearch::{armijo_backtrack, npc_linesearch, LinesearchConfig, Step};
use crate::minres::{minres_npc, MinresFlag, MinresOutcome};
use crate::objective::{Counted, Objective, OracleCosts};
use crate::operator::{SymmetricOperator, Vector};
use crate::schedule::{
    curvature_test_basic, curvature_test_refined, schedule_eval, Candidate, ScheduleParams,
    ScheduleValues, ToleranceRule,
};
use crate::trace::{DirectionFlag, IterateRecord, RunTrace, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianMode {
    /// Hessian-vector products from the objective.
    Exact,
    /// Limited-memory BFGS in compact form.
    Lbfgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureTest {
    /// `p'B̄p ≥ min{𝒜, a_k|g|^α} |p|²` on solutions only.
    Basic,
    /// Scales the solution threshold by `max{|p|², |g|²}` and bounds NPC curvature.
    Refined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub schedule: ScheduleParams,
    pub linesearch: LinesearchConfig,
    pub max_inner: usize,
    pub grad_tol: f64,
    pub max_oracles: u64,
    pub hessian: HessianMode,
    pub lbfgs_memory: usize,
    pub curvature_test: CurvatureTest,
    pub costs: OracleCosts,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::newton_mr()
    }
}

impl SolverConfig {
    /// Exact Hessian, basic curvature test, `θ_k = min{0.1, √|g|}`.
    pub fn newton_mr() -> Self {
        Self {
            schedule: ScheduleParams::default(),
            linesearch: LinesearchConfig::default(),
            max_inner: 1000,
            grad_tol: 1e-10,
            max_oracles: 100_000,
            hessian: HessianMode::Exact,
            lbfgs_memory: 10,
            curvature_test: CurvatureTest::Basic,
            costs: OracleCosts::default(),
        }
    }

    /// L-BFGS, refined curvature test, `θ_k = min{0.1, ln(k+1)√(k|g|)}`.
    pub fn lbfgs_mr() -> Self {
        let mut cfg = Self::newton_mr();
        cfg.schedule.tolerance = ToleranceRule::lbfgs_mr();
        cfg.hessian = HessianMode::Lbfgs;
        cfg.curvature_test = CurvatureTest::Refined;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.linesearch.validate()?;
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidConfig("max_inner must be at least 1".into()));
        }
        if self.hessian == HessianMode::Lbfgs && self.lbfgs_memory == 0 {
            return Err(Error::InvalidConfig(
                "lbfgs_memory must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything the driver knew when it took one step. Handed to the
/// observer of [`solve_observed`] after the linesearch succeeds.
pub struct StepReport<'a> {
    /// Zero-based outer iteration; schedules are evaluated at `k + 1`.
    pub k: usize,
    pub x: &'a Vector,
    pub g: &'a Vector,
    pub direction: &'a Vector,
    pub flag: DirectionFlag,
    /// `None` when MINRES was skipped (degenerate L-BFGS middle block).
    pub minres: Option<&'a MinresOutcome>,
    pub schedule: ScheduleValues,
    /// The unregularized model `B_k`. Applying it does not count oracles.
    pub model: Option<&'a dyn SymmetricOperator>,
    /// `d'B_k d` as the driver computed it, for NPC steps.
    pub npc_curvature: Option<f64>,
    pub step: &'a Step,
}

/// Runs the solver from `x0`.
pub fn solve<O: Objective + ?Sized>(obj: &O, x0: &Vector, cfg: &SolverConfig) -> Result<RunTrace> {
    solve_observed(obj, x0, cfg, |_| {})
}

/// [`solve`], calling `observe` once per accepted step.
///
/// Returns `Err` only for unusable input: an invalid config, a dimension
/// mismatch, a non-finite start, or exact-Hessian mode without a Hessian
/// oracle. Numerical trouble mid-run ends the trace with a status instead.
pub fn solve_observed<O, F>(
    obj: &O,
    x0: &Vector,
    cfg: &SolverConfig,
    mut observe: F,
) -> Result<RunTrace>
where
    O: Objective + ?Sized,
    F: FnMut(&StepReport<'_>),
{
    cfg.validate()?;
    let n = obj.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    if cfg.hessian == HessianMode::Exact && !obj.has_hessian() {
        return Err(Error::NoHessianOracle);
    }

    let start = Instant::now();
    let elapsed = || start.elapsed().as_secs_f64() * 1e3;
    let counted = Counted::with_costs(obj, cfg.costs);
    let mut x = x0.clone();
    let mut f = counted.value(&x);
    if !f.is_finite() || !x.iter().all(|v| v.is_finite()) {
        return Err(Error::ObjectiveNotEvaluable);
    }

    let mut store = match cfg.hessian {
        HessianMode::Lbfgs => Some(LbfgsStore::new(n, cfg.lbfgs_memory)),
        HessianMode::Exact => None,
    };
    let mut previous: Option<(Vector, Vector)> = None;
    let mut records = Vec::new();

    let (status, gnorm) = loop {
        let k = records.len();
        let g = counted.gradient(&x);
        let gnorm = g.norm();
        if !gnorm.is_finite() {
            break (Status::Diverged, gnorm);
        }
        if let (Some(store), Some((s, g_prev))) = (store.as_mut(), previous.take()) {
            store.update(&s, &(&g - g_prev));
        }
        if gnorm <= cfg.grad_tol {
            break (Status::Converged, gnorm);
        }
        if counted.oracle_calls() >= cfg.max_oracles {
            break (Status::Budget, gnorm);
        }

        let sched = schedule_eval(k + 1, gnorm, &cfg.schedule);
        let b = -&g;
        let exact = match cfg.hessian {
            HessianMode::Exact => Some(exact_hvp_operator(&counted, &x)?),
            HessianMode::Lbfgs => None,
        };
        let lbfgs = store.as_ref().and_then(|s| s.operator().ok());
        let solved = match (&exact, &lbfgs) {
            (Some(op), _) => Some(minres_npc(
                &regularized(op, sched.zeta),
                &b,
                sched.theta,
                cfg.max_inner,
            )),
            (None, Some(op)) => Some(minres_npc(
                &regularized(op, sched.zeta),
                &b,
                sched.theta,
                cfg.max_inner,
            )),
            (None, None) => None,
        };
        let outcome = match solved {
            Some(Ok(out)) => Some(out),
            Some(Err(Error::NumericalBreakdown { .. })) => break (Status::Diverged, gnorm),
            Some(Err(e)) => return Err(e),
            None => None,
        };

        let (flag, direction, npc_curvature) =
            choose_direction(outcome.as_ref(), &g, gnorm, &sched, cfg);
        let slope = g.dot(&direction);
        let searched = match flag {
            DirectionFlag::Npc => {
                let curvature = npc_curvature.expect("NPC steps carry their curvature");
                npc_linesearch(
                    &counted,
                    &x,
                    &direction,
                    slope,
                    curvature,
                    f,
                    &cfg.linesearch,
                )
            }
            _ => armijo_backtrack(&counted, &x, &direction, slope, f, &cfg.linesearch),
        };
        let step = match searched {
            Ok(step) => step,
            Err(Error::StepsizeStagnation { .. }) => break (Status::Stagnated, gnorm),
            Err(e) => return Err(e),
        };

        let inner_exact = exact_hvp_operator(counted.inner(), &x).ok();
        let model: Option<&dyn SymmetricOperator> = match (&inner_exact, &lbfgs) {
            (Some(op), _) if cfg.hessian == HessianMode::Exact => Some(op),
            (_, Some(op)) => Some(op),
            _ => None,
        };
        observe(&StepReport {
            k,
            x: &x,
            g: &g,
            direction: &direction,
            flag,
            minres: outcome.as_ref(),
            schedule: sched,
            model,
            npc_curvature,
            step: &step,
        });

        records.push(IterateRecord {
            k,
            f,
            gnorm,
            flag,
            lambda: step.lambda,
            inner_iters: outcome.as_ref().map_or(0, |o| o.inner_iters),
            theta_k: sched.theta,
            zeta_k: sched.zeta,
            oracles: counted.oracle_calls(),
            time_ms: elapsed(),
        });
        let s = step.lambda * direction;
        x += &s;
        f = step.value;
        if store.is_some() {
            previous = Some((s, g));
        }
    };

    Ok(RunTrace {
        problem: String::new(),
        config: String::new(),
        status,
        records,
        x,
        f,
        gnorm,
        oracles: counted.oracle_calls(),
        time_ms: elapsed(),
    })
}

/// Applies the curvature test to the MINRES output. Returns the flag, the
/// direction, and `d'B_k d` for NPC directions.
fn choose_direction(
    outcome: Option<&MinresOutcome>,
    g: &Vector,
    gnorm: f64,
    sched: &ScheduleValues,
    cfg: &SolverConfig,
) -> (DirectionFlag, Vector, Option<f64>) {
    let gd = || (DirectionFlag::Gd, -g, None);
    let Some(out) = outcome else { return gd() };
    let d = &out.direction;
    let d_norm2 = d.norm_squared();
    match out.flag {
        MinresFlag::Sol | MinresFlag::MaxIter => {
            let p_bp = out.curvature_value;
            let pass = match cfg.curvature_test {
                CurvatureTest::Basic => {
                    curvature_test_basic(p_bp, d_norm2, gnorm, sched.a_k, &cfg.schedule)
                }
                CurvatureTest::Refined => curvature_test_refined(
                    Candidate::Solution {
                        p_bp,
                        p_norm2: d_norm2,
                    },
                    gnorm,
                    sched.a_k,
                    &cfg.schedule,
                ),
            };
            if pass && d_norm2 > 0.0 && g.dot(d) < 0.0 {
                (DirectionFlag::Sol, d.clone(), None)
            } else {
                gd()
            }
        }
        MinresFlag::Npc => {
            let d_bd = out.curvature_value - sched.zeta * d_norm2;
            let pass = match cfg.curvature_test {
                CurvatureTest::Basic => true,
                CurvatureTest::Refined => curvature_test_refined(
                    Candidate::NonPositiveCurvature { d_bd, d_norm2 },
                    gnorm,
                    sched.a_k,
                    &cfg.schedule,
                ),
            };
            if pass && d_bd <= 0.0 && g.dot(d) < 0.0 {
                (DirectionFlag::Npc, d.clone(), Some(d_bd))
            } else {
                gd()
            }
        }
    }
}
