//! Backtracking Armijo search and the forward/backward search used along
//! non-positive-curvature directions.
//!
//! Along an NPC direction the acceptance test carries an extra
//! `(σ/2) λ² d'Bd` term:
//!
//! ```text
//! f(x + λd) - f(x) ≤ σ λ g'd + (σ/2) λ² d'Bd
//! ```
//!
//! If it holds at the initial step the search grows `λ` by `1/ρ` for as
//! long as it keeps holding, and returns the last step that passed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::operator::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinesearchConfig {
    /// Initial trial step `s`.
    pub initial: f64,
    /// Shrink factor `ρ`.
    pub shrink: f64,
    /// Sufficient-decrease constant `σ`.
    pub sigma: f64,
    /// Backtracking gives up below this step.
    pub min_step: f64,
    /// Cap for the forward search.
    pub max_step: f64,
    /// When the initial Armijo trial predicts a change `s|g'd|` below
    /// `noise_floor · ε · |f(x)|`, the test cannot be judged in floating
    /// point; the trial then passes if `f` does not increase. Zero disables
    /// the guard.
    pub noise_floor: f64,
}

impl Default for LinesearchConfig {
    fn default() -> Self {
        Self {
            initial: 1.0,
            shrink: 0.5,
            sigma: 1e-4,
            min_step: 1e-18,
            max_step: 1e10,
            noise_floor: 16.0,
        }
    }
}

impl LinesearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.shrink > 0.0
            && self.shrink < 1.0
            && self.sigma > 0.0
            && self.sigma < 1.0
            && self.min_step > 0.0
            && self.min_step < self.initial
            && self.initial <= self.max_step
            && self.max_step.is_finite()
            && self.noise_floor >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "bad linesearch parameters: {self:?}"
            )))
        }
    }
}

/// An accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub lambda: f64,
    /// `f(x + λ d)`.
    pub value: f64,
    pub evaluations: usize,
    /// The step grew past the initial trial step.
    pub forward: bool,
    /// The forward search stopped at `max_step` rather than on a failed test.
    pub capped: bool,
}

/// Smallest `j ≥ 0` with `f(x + sρʲ d) - f(x) ≤ σ sρʲ g'd`, subject to the
/// roundoff guard described on [`LinesearchConfig::noise_floor`].
pub fn armijo_backtrack<O: Objective + ?Sized>(
    obj: &O,
    x: &Vector,
    d: &Vector,
    slope: f64,
    f_x: f64,
    cfg: &LinesearchConfig,
) -> Result<Step> {
    if !(slope < 0.0) {
        return Err(Error::NotDescent { slope });
    }
    let noise = cfg.noise_floor * f64::EPSILON * f_x.abs();
    let accept = |lambda: f64, value: f64| {
        value - f_x <= cfg.sigma * lambda * slope
            || (lambda == cfg.initial && lambda * -slope <= noise && value <= f_x)
    };
    backtrack(obj, x, d, cfg, accept)
}

/// Step along an NPC direction `d` with `g'd < 0` and `d'Bd ≤ 0`.
pub fn npc_linesearch<O: Objective + ?Sized>(
    obj: &O,
    x: &Vector,
    d: &Vector,
    slope: f64,
    curvature: f64,
    f_x: f64,
    cfg: &LinesearchConfig,
) -> Result<Step> {
    if !(slope < 0.0) {
        return Err(Error::NotDescent { slope });
    }
    if !(curvature <= 0.0) {
        return Err(Error::PositiveCurvature { curvature });
    }
    let accept = |lambda: f64, value: f64| {
        value - f_x <= cfg.sigma * lambda * slope + 0.5 * cfg.sigma * lambda * lambda * curvature
    };

    let trial = |lambda: f64| obj.value(&(x + d * lambda));
    let first = trial(cfg.initial);
    if !accept(cfg.initial, first) {
        let mut step = backtrack_from(obj, x, d, cfg, cfg.initial * cfg.shrink, &accept)?;
        step.evaluations += 1;
        return Ok(step);
    }

    let mut best = Step {
        lambda: cfg.initial,
        value: first,
        evaluations: 1,
        forward: false,
        capped: false,
    };
    loop {
        let mut next = best.lambda / cfg.shrink;
        let capped = next > cfg.max_step;
        if capped {
            if best.lambda >= cfg.max_step {
                best.capped = true;
                return Ok(best);
            }
            next = cfg.max_step;
        }
        let value = trial(next);
        best.evaluations += 1;
        if !accept(next, value) {
            return Ok(best);
        }
        best.lambda = next;
        best.value = value;
        best.forward = true;
        if capped {
            best.capped = true;
            return Ok(best);
        }
    }
}

fn backtrack<O, F>(
    obj: &O,
    x: &Vector,
    d: &Vector,
    cfg: &LinesearchConfig,
    accept: F,
) -> Result<Step>
where
    O: Objective + ?Sized,
    F: Fn(f64, f64) -> bool,
{
    backtrack_from(obj, x, d, cfg, cfg.initial, &accept)
}

fn backtrack_from<O, F>(
    obj: &O,
    x: &Vector,
    d: &Vector,
    cfg: &LinesearchConfig,
    start: f64,
    accept: &F,
) -> Result<Step>
where
    O: Objective + ?Sized,
    F: Fn(f64, f64) -> bool,
{
    let mut lambda = start;
    let mut evaluations = 0;
    loop {
        if lambda < cfg.min_step {
            return Err(Error::StepsizeStagnation {
                lambda_min: cfg.min_step,
            });
        }
        let value = obj.value(&(x + d * lambda));
        evaluations += 1;
        // NaN fails the comparison and is treated as a rejected trial.
        if accept(lambda, value) {
            return Ok(Step {
                lambda,
                value,
                evaluations,
                forward: false,
                capped: false,
            });
        }
        lambda *= cfg.shrink;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    struct HalfSquare;

    impl Objective for HalfSquare {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &Vector) -> f64 {
            0.5 * x.norm_squared()
        }
        fn gradient(&self, x: &Vector) -> Vector {
            x.clone()
        }
    }

    struct Concave;

    impl Objective for Concave {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &Vector) -> f64 {
            -0.5 * x[0] * x[0]
        }
        fn gradient(&self, x: &Vector) -> Vector {
            -x
        }
    }

    #[test]
    fn unit_step_accepted() {
        let x = dvector![1.0, 0.0];
        let d = dvector![-1.0, 0.0];
        let step =
            armijo_backtrack(&HalfSquare, &x, &d, -1.0, 0.5, &LinesearchConfig::default()).unwrap();
        assert_eq!(step.lambda, 1.0);
        assert_eq!(step.evaluations, 1);
    }

    #[test]
    fn overshoot_is_halved() {
        let x = dvector![1.0, 0.0];
        let d = dvector![-3.0, 0.0];
        let step =
            armijo_backtrack(&HalfSquare, &x, &d, -3.0, 0.5, &LinesearchConfig::default()).unwrap();
        assert_eq!(step.lambda, 0.5);
        assert_eq!(step.evaluations, 2);
    }

    #[test]
    fn ascent_direction_is_rejected() {
        let x = dvector![1.0, 0.0];
        let d = dvector![1.0, 0.0];
        let cfg = LinesearchConfig::default();
        assert!(matches!(
            armijo_backtrack(&HalfSquare, &x, &d, 1.0, 0.5, &cfg),
            Err(Error::NotDescent { .. })
        ));
        assert!(matches!(
            armijo_backtrack(&HalfSquare, &x, &d, 0.0, 0.5, &cfg),
            Err(Error::NotDescent { .. })
        ));
        assert!(matches!(
            npc_linesearch(
                &Concave,
                &dvector![1.0],
                &dvector![1.0],
                -1.0,
                1.0,
                -0.5,
                &cfg
            ),
            Err(Error::PositiveCurvature { .. })
        ));
    }

    #[test]
    fn roundoff_guard_accepts_flat_steps() {
        struct Flat;
        impl Objective for Flat {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _x: &Vector) -> f64 {
                -0.25
            }
            fn gradient(&self, _x: &Vector) -> Vector {
                dvector![1e-10]
            }
        }
        let (x, d) = (dvector![0.0], dvector![-1e-10]);
        let cfg = LinesearchConfig::default();
        let step = armijo_backtrack(&Flat, &x, &d, -1e-20, -0.25, &cfg).unwrap();
        assert_eq!((step.lambda, step.evaluations), (1.0, 1));
        // A resolvable predicted decrease is still enforced.
        assert!(armijo_backtrack(&Flat, &x, &d, -1e-12, -0.25, &cfg).is_err());
        let off = LinesearchConfig {
            noise_floor: 0.0,
            ..cfg
        };
        assert!(matches!(
            armijo_backtrack(&Flat, &x, &d, -1e-20, -0.25, &off),
            Err(Error::StepsizeStagnation { .. })
        ));
    }

    #[test]
    fn stagnation_below_min_step() {
        // Claimed slope is far steeper than the true one, so no step passes.
        let x = dvector![1.0, 0.0];
        let d = dvector![-1.0, 0.0];
        let cfg = LinesearchConfig {
            min_step: 1e-3,
            ..Default::default()
        };
        assert_eq!(
            armijo_backtrack(&HalfSquare, &x, &d, -1e6, 0.5, &cfg),
            Err(Error::StepsizeStagnation { lambda_min: 1e-3 })
        );
    }

    #[test]
    fn concave_quadratic_hits_cap() {
        // f = -x²/2 at x = 0.5 along d = 0.5: g'd = -0.25, d'Bd = -0.25.
        let cfg = LinesearchConfig::default();
        let x = dvector![0.5];
        let d = dvector![0.5];
        let step = npc_linesearch(&Concave, &x, &d, -0.25, -0.25, -0.125, &cfg).unwrap();
        assert_eq!(step.lambda, cfg.max_step);
        assert!(step.capped && step.forward);
        // 1, 2, 4, …, 2^33 and then the cap itself.
        assert_eq!(step.evaluations, 35);
    }

    #[test]
    fn config_validation() {
        assert!(LinesearchConfig::default().validate().is_ok());
        let bad = LinesearchConfig {
            shrink: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LinesearchConfig {
            min_step: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
