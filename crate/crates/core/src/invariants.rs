//! Runtime checks of the direction properties the convergence theory
//! relies on, fed by the observer hook of [`solve_observed`].
//!
//! For an accepted step `d` at `x_k` with gradient `g`:
//!
//! * SOL: `-d'g > C_k min{𝒜, a_k|g|^α} |g|²` with `C_k = (|B̄| + |B̄|²)⁻¹`,
//!   and `|d| ≤ max{|g|/𝒜, |g|^{1-α}/a_k}`;
//! * NPC: `-d'g > θ_k |g|²`, `|d| = |g|`, and `d'B_k d ≤ -ζ_k |d|²`;
//! * GD: `d = -g` exactly.
//!
//! `|B̄|` is the spectral norm of a dense copy of the model, so the audit is
//! limited to small problems.
//!
//! [`solve_observed`]: crate::driver::solve_observed

use crate::driver::{SolverConfig, StepReport};
use crate::operator::to_dense;
use crate::trace::DirectionFlag;

/// Largest dimension the audit densifies.
pub const MAX_AUDIT_DIM: usize = 50;

/// Slack on the step-length bound.
const LENGTH_SLACK: f64 = 1e-10;
/// Slack on `|d| = |g|` for NPC directions.
const NORM_SLACK: f64 = 1e-10;
/// Slack on the pseudo-negative curvature of NPC directions.
const CURVATURE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Default)]
pub struct DirectionAudit {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl DirectionAudit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Checks one step. Steps without a model (degenerate L-BFGS) or above
    /// [`MAX_AUDIT_DIM`] only get the checks that need no dense matrix.
    pub fn observe(&mut self, r: &StepReport<'_>, cfg: &SolverConfig) {
        self.checked += 1;
        let g = r.g;
        let d = r.direction;
        let gnorm = g.norm();
        let descent = -d.dot(g);
        let v = r.schedule;
        let sp = &cfg.schedule;
        let mut fail = |what: String| {
            self.violations
                .push(format!("k={} {}: {what}", r.k, r.flag))
        };

        let dense = r.model.filter(|m| m.dim() <= MAX_AUDIT_DIM).map(to_dense);

        match r.flag {
            DirectionFlag::Sol => {
                let threshold = sp.curvature_threshold(v.a_k, gnorm);
                if let Some(b) = &dense {
                    let b_norm = spectral_norm(b) + v.zeta;
                    let c_k = 1.0 / (b_norm + b_norm * b_norm);
                    let bound = c_k * threshold * gnorm * gnorm;
                    if !(descent > bound) {
                        fail(format!("-d'g = {descent:e} not above {bound:e}"));
                    }
                }
                let alpha = sp.curvature_exponent;
                let cap = (gnorm / sp.curvature_cap).max(gnorm.powf(1.0 - alpha) / v.a_k);
                if !(d.norm() <= cap + LENGTH_SLACK) {
                    fail(format!("|d| = {:e} exceeds {cap:e}", d.norm()));
                }
            }
            DirectionFlag::Npc => {
                let bound = v.theta * gnorm * gnorm;
                if !(descent > bound) {
                    fail(format!("-d'g = {descent:e} not above θ|g|² = {bound:e}"));
                }
                if !((d.norm() - gnorm).abs() <= NORM_SLACK) {
                    fail(format!("|d| = {:e} but |g| = {gnorm:e}", d.norm()));
                }
                if let Some(b) = &dense {
                    let d_bd = d.dot(&(b * d));
                    let bound = -v.zeta * d.norm_squared() + CURVATURE_SLACK;
                    if !(d_bd <= bound) {
                        fail(format!("d'Bd = {d_bd:e} above {bound:e}"));
                    }
                }
            }
            DirectionFlag::Gd => {
                if d != &(-g) {
                    fail("direction is not -g".into());
                }
            }
        }
    }
}

fn spectral_norm(b: &nalgebra::DMatrix<f64>) -> f64 {
    b.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0, |m, e| m.max(e.abs()))
}
