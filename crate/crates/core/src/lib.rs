//! Matrix-free nonconvex optimization with MINRES as the inner solver.
//!
//! MINRES runs on the regularized Newton system and doubles as a detector
//! of non-positive curvature: when a residual has `r'Ar ≤ 0` it is returned
//! as a descent direction instead of continuing the solve. [`solve`] wraps
//! that in a linesearch method with exact Hessians or limited-memory BFGS.
//!
//! ```
//! use minres_npc::problems::lookup;
//! use minres_npc::{solve, SolverConfig, Status, Vector};
//!
//! let p = lookup("quartic_saddle", 4).unwrap();
//! let x0 = Vector::from_vec(vec![0.0, 1e-3, 0.0, 0.0]);
//! let trace = solve(&*p.objective, &x0, &SolverConfig::newton_mr()).unwrap();
//! assert_eq!(trace.status, Status::Converged);
//! assert!((trace.f + 0.25).abs() < 1e-12);
//! ```

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod driver;
pub mod error;
pub mod fd;
pub mod hessians;
pub mod invariants;
pub mod linesearch;
pub mod minres;
pub mod objective;
pub mod operator;
pub mod problems;
pub mod schedule;
pub mod trace;

pub use driver::{solve, solve_observed, CurvatureTest, HessianMode, SolverConfig, StepReport};
pub use error::{Error, Result};
pub use objective::{Counted, Objective, OracleCosts};
pub use operator::{SymmetricOperator, Vector};
pub use trace::{DirectionFlag, IterateRecord, RunTrace, Status};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/minres.md")]
    mod minres {}
    #[doc = include_str!("../../../book/src/hessians.md")]
    mod hessians {}
    #[doc = include_str!("../../../book/src/linesearch.md")]
    mod linesearch {}
    #[doc = include_str!("../../../book/src/driver.md")]
    mod driver {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
}
