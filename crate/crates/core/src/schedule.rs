//! Per-iteration parameter schedules and the curvature tests that gate
//! inexact Newton directions.
//!
//! With `k ≥ 1` the outer iteration count and `ℓ_k = k ln(k+1)²`:
//!
//! * tolerance      `θ_k = min{ℬ, b_k |g_k|^β}`
//! * regularization `ζ_k = min{𝒵, ℓ_k^ζ |g_k|^ζ}` (or `ζ_k = c θ_k`)
//! * curvature      `a_k = ℓ_k^α / 2`, threshold `min{𝒜, a_k |g_k|^α}`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How `b_k` grows with the iteration count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceGrowth {
    /// `b_k = b`.
    Constant,
    /// `b_k = b ln(k+1) √k`.
    LogSqrtK,
}

/// `θ_k = min{cap, b_k |g_k|^exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceRule {
    pub cap: f64,
    pub scale: f64,
    pub exponent: f64,
    pub growth: ToleranceGrowth,
}

impl ToleranceRule {
    /// `min{0.1, √|g|}`.
    pub fn newton_mr() -> Self {
        Self {
            cap: 0.1,
            scale: 1.0,
            exponent: 0.5,
            growth: ToleranceGrowth::Constant,
        }
    }

    /// `min{0.1, ln(k+1) √(k |g|)}`.
    pub fn lbfgs_mr() -> Self {
        Self {
            growth: ToleranceGrowth::LogSqrtK,
            ..Self::newton_mr()
        }
    }

    /// `min{cap, |g|^exponent}`.
    pub fn power(cap: f64, exponent: f64) -> Self {
        Self {
            cap,
            scale: 1.0,
            exponent,
            growth: ToleranceGrowth::Constant,
        }
    }

    pub fn eval(&self, k: usize, gnorm: f64) -> f64 {
        let growth = match self.growth {
            ToleranceGrowth::Constant => 1.0,
            ToleranceGrowth::LogSqrtK => {
                let k = k as f64;
                (k + 1.0).ln() * k.sqrt()
            }
        };
        self.cap
            .min(self.scale * growth * gnorm.powf(self.exponent))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RegularizationRule {
    /// `ζ_k = min{cap, (k ln(k+1)²)^exponent |g|^exponent}`.
    Standard { cap: f64, exponent: f64 },
    /// `ζ_k = factor θ_k`.
    Proportional { factor: f64 },
    /// `ζ_k = 0`.
    Off,
}

impl Default for RegularizationRule {
    fn default() -> Self {
        RegularizationRule::Standard {
            cap: 1e-12,
            exponent: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    /// `𝒜` in the curvature threshold.
    pub curvature_cap: f64,
    /// `α` in the curvature threshold.
    pub curvature_exponent: f64,
    pub tolerance: ToleranceRule,
    pub regularization: RegularizationRule,
    /// `M̄`, the bound on `|d'Bd| / |d|²` for NPC directions in the refined test.
    pub npc_bound: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            curvature_cap: 0.5e-12,
            curvature_exponent: 1.0,
            tolerance: ToleranceRule::newton_mr(),
            regularization: RegularizationRule::default(),
            npc_bound: 1e8,
        }
    }
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.curvature_cap) || !unit(self.curvature_exponent) {
            return Err(Error::InvalidConfig(
                "curvature cap and exponent must lie in (0, 1]".into(),
            ));
        }
        let t = &self.tolerance;
        if !(t.cap >= 0.0 && t.scale > 0.0 && t.exponent > 0.0) {
            return Err(Error::InvalidConfig(format!("bad tolerance rule {t:?}")));
        }
        match self.regularization {
            RegularizationRule::Standard { cap, exponent } => {
                if !(cap > 0.0 && unit(exponent)) {
                    return Err(Error::InvalidConfig(format!(
                        "regularization needs cap > 0 and exponent in (0, 1], got {cap}, {exponent}"
                    )));
                }
            }
            RegularizationRule::Proportional { factor } => {
                if !(factor >= 0.0 && factor.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "regularization factor must be non-negative, got {factor}"
                    )));
                }
            }
            RegularizationRule::Off => {}
        }
        if !(self.npc_bound > 0.0) {
            return Err(Error::InvalidConfig("npc_bound must be positive".into()));
        }
        Ok(())
    }

    /// `min{𝒜, a_k |g|^α}`.
    pub fn curvature_threshold(&self, a_k: f64, gnorm: f64) -> f64 {
        self.curvature_cap
            .min(a_k * gnorm.powf(self.curvature_exponent))
    }
}

/// Scalars for one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleValues {
    pub theta: f64,
    pub zeta: f64,
    pub a_k: f64,
}

/// `k ln(k+1)²`. The shift inside the log keeps the sequence positive at `k = 1`.
pub fn log_growth(k: usize) -> f64 {
    let k = k as f64;
    let l = (k + 1.0).ln();
    k * l * l
}

/// Evaluates the schedules at iteration `k ≥ 1`.
pub fn schedule_eval(k: usize, gnorm: f64, sp: &ScheduleParams) -> ScheduleValues {
    debug_assert!(k >= 1);
    let theta = sp.tolerance.eval(k, gnorm);
    let zeta = match sp.regularization {
        RegularizationRule::Standard { cap, exponent } => {
            cap.min(log_growth(k).powf(exponent) * gnorm.powf(exponent))
        }
        RegularizationRule::Proportional { factor } => factor * theta,
        RegularizationRule::Off => 0.0,
    };
    let a_k = log_growth(k).powf(sp.curvature_exponent) / 2.0;
    ScheduleValues { theta, zeta, a_k }
}

/// `p'B̄p ≥ min{𝒜, a_k |g|^α} |p|²`.
pub fn curvature_test_basic(
    p_bp: f64,
    p_norm2: f64,
    gnorm: f64,
    a_k: f64,
    sp: &ScheduleParams,
) -> bool {
    p_bp >= sp.curvature_threshold(a_k, gnorm) * p_norm2
}

/// Which MINRES output the refined test is judging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Candidate {
    /// An inexact solution `p` with `p'B̄p` and `|p|²`.
    Solution { p_bp: f64, p_norm2: f64 },
    /// An NPC direction `d` with `d'Bd` (unregularized) and `|d|²`.
    NonPositiveCurvature { d_bd: f64, d_norm2: f64 },
}

/// Curvature test for possibly indefinite, unbounded approximations:
/// solutions need `p'B̄p ≥ min{𝒜, a_k|g|^α} max{|p|², |g|²}`, NPC directions
/// need `|d'Bd| < M̄ |d|²`.
pub fn curvature_test_refined(
    candidate: Candidate,
    gnorm: f64,
    a_k: f64,
    sp: &ScheduleParams,
) -> bool {
    match candidate {
        Candidate::Solution { p_bp, p_norm2 } => {
            p_bp >= sp.curvature_threshold(a_k, gnorm) * p_norm2.max(gnorm * gnorm)
        }
        Candidate::NonPositiveCurvature { d_bd, d_norm2 } => d_bd.abs() < sp.npc_bound * d_norm2,
    }
}
