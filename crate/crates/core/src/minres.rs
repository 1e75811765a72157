//! MINRES with built-in non-positive-curvature detection.
//!
//! The solver runs the Lanczos process on `(A, b)`, maintains a Givens QR
//! factorization of the tridiagonal, and updates the iterate with the usual
//! three-term recurrence. Before each rotation it inspects `c_{t-1} γ_t`,
//! which equals `-r_{t-1}'A r_{t-1} / φ_{t-1}²`. A non-negative value means
//! the previous residual is a non-positive-curvature direction, and because
//! `r'b = |r|²` holds for every MINRES residual, that direction is also a
//! descent direction when `b = -∇f`.
//!
//! No reorthogonalization is performed: only local orthogonality of the
//! Lanczos vectors is maintained, matching classical MINRES.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{all_finite, SymmetricOperator, Vector};

pub mod krylov;

const GRADE_TOL: f64 = 16.0 * f64::EPSILON;

pub use krylov::krylov_lsq_oracle;

/// Why the solver returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MinresFlag {
    /// `φ_t ≤ θ β₁`: the direction is an inexact solution.
    Sol,
    /// The previous residual has non-positive curvature.
    Npc,
    /// Neither test fired within the iteration cap.
    MaxIter,
}

impl fmt::Display for MinresFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MinresFlag::Sol => "SOL",
            MinresFlag::Npc => "NPC",
            MinresFlag::MaxIter => "MAXITER",
        })
    }
}

#[derive(Debug, Clone)]
pub struct MinresOutcome {
    /// `x_t` for SOL/MAXITER; `β₁ r_{t-1} / |r_{t-1}|` for NPC.
    pub direction: Vector,
    /// `r_t = b - A x_t` for SOL/MAXITER; `r_{t-1}` for NPC.
    pub residual: Vector,
    pub flag: MinresFlag,
    pub inner_iters: usize,
    /// `d'Ad` for the returned direction, obtained without an extra product.
    pub curvature_value: f64,
    /// `β₁ = |b|`.
    pub rhs_norm: f64,
    /// Recurrence value `φ` matching `residual`.
    pub residual_norm: f64,
}

/// Per-iteration view of the solver state, handed to an observer.
///
/// `iterate`, `residual` and `phi` are `None` on the iteration where
/// non-positive curvature is detected, since `x_t` is never formed then.
#[derive(Debug)]
pub struct MinresStep<'a> {
    pub t: usize,
    /// `v_t`.
    pub lanczos: &'a Vector,
    pub alpha: f64,
    /// `β_{t+1}`.
    pub beta_next: f64,
    /// `r_{t-1}`.
    pub prev_residual: &'a Vector,
    /// `φ_{t-1}`.
    pub prev_phi: f64,
    /// `c_{t-1} γ_t^(1)`; NPC is declared when this is `≥ 0`.
    pub curvature_product: f64,
    pub iterate: Option<&'a Vector>,
    pub residual: Option<&'a Vector>,
    pub phi: Option<f64>,
}

/// Solves `min |b - A x|` over growing Krylov subspaces, stopping at the
/// first of: non-positive curvature, `φ_t ≤ θ |b|`, or `max_inner` steps.
pub fn minres_npc<A>(a: &A, b: &Vector, theta: f64, max_inner: usize) -> Result<MinresOutcome>
where
    A: SymmetricOperator + ?Sized,
{
    minres_npc_observed(a, b, theta, max_inner, |_| {})
}

/// [`minres_npc`] with a callback invoked once per inner iteration.
pub fn minres_npc_observed<A, F>(
    a: &A,
    b: &Vector,
    theta: f64,
    max_inner: usize,
    mut observe: F,
) -> Result<MinresOutcome>
where
    A: SymmetricOperator + ?Sized,
    F: FnMut(&MinresStep<'_>),
{
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if !(theta >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "MINRES tolerance must be non-negative, got {theta}"
        )));
    }
    if max_inner == 0 {
        return Err(Error::InvalidConfig("max_inner must be at least 1".into()));
    }
    let beta1 = b.norm();
    if !beta1.is_finite() {
        return Err(Error::NumericalBreakdown { iteration: 0 });
    }
    if beta1 == 0.0 {
        return Err(Error::ZeroRightHandSide);
    }

    let mut r_prev = b.clone();
    let mut v_prev = Vector::zeros(n);
    let mut v = b / beta1;
    let mut x = Vector::zeros(n);
    let mut d_prev = Vector::zeros(n);
    let mut d_prev2 = Vector::zeros(n);
    let mut c = -1.0_f64;
    let mut s = 0.0_f64;
    let mut delta1 = 0.0_f64;
    let mut eps = 0.0_f64;
    let mut phi = beta1;
    let mut beta = 0.0_f64;
    let mut a_norm_est = 0.0_f64;

    let mut t = 1;
    loop {
        // Lanczos step.
        let mut p = a.apply(&v);
        let alpha = v.dot(&p);
        p.axpy(-beta, &v_prev, 1.0);
        p.axpy(-alpha, &v, 1.0);
        let mut beta_next = p.norm();
        if !alpha.is_finite() || !beta_next.is_finite() {
            return Err(Error::NumericalBreakdown { iteration: t });
        }
        // A roundoff-level β_{t+1} means K_t(A, b) is invariant: the grade
        // has been reached. The grade never exceeds n, so β_{n+1} = 0.
        a_norm_est = a_norm_est.max((alpha * alpha + beta * beta + beta_next * beta_next).sqrt());
        if beta_next <= GRADE_TOL * a_norm_est || t >= n {
            beta_next = 0.0;
        }

        // Apply the previous rotation to the new tridiagonal column.
        let delta2 = c * delta1 + s * alpha;
        let mut gamma1 = s * delta1 - c * alpha;
        // At the grade of an inconsistent system γ_t^(1) vanishes exactly;
        // in floating point it lands at roundoff level with either sign.
        if gamma1.abs() <= GRADE_TOL * a_norm_est.max(alpha.abs()) {
            gamma1 = 0.0;
        }
        let eps_next = s * beta_next;
        let delta1_next = -c * beta_next;

        let curvature_product = c * gamma1;
        if curvature_product >= 0.0 {
            observe(&MinresStep {
                t,
                lanczos: &v,
                alpha,
                beta_next,
                prev_residual: &r_prev,
                prev_phi: phi,
                curvature_product,
                iterate: None,
                residual: None,
                phi: None,
            });
            let r_norm = r_prev.norm();
            let direction = &r_prev * (beta1 / r_norm);
            let curvature_value =
                -beta1 * beta1 * curvature_product * (phi * phi) / (r_norm * r_norm);
            return Ok(MinresOutcome {
                direction,
                residual: r_prev,
                flag: MinresFlag::Npc,
                inner_iters: t,
                curvature_value,
                rhs_norm: beta1,
                residual_norm: phi,
            });
        }

        // γ_t^(2) > 0 here: γ_t^(1) = 0 would have been caught above.
        let gamma2 = gamma1.hypot(beta_next);
        debug_assert!(gamma2 > 0.0);
        let c_next = gamma1 / gamma2;
        let s_next = beta_next / gamma2;
        let tau = c_next * phi;
        let phi_next = s_next * phi;

        let mut d = v.clone();
        d.axpy(-delta2, &d_prev, 1.0);
        d.axpy(-eps, &d_prev2, 1.0);
        d /= gamma2;
        x.axpy(tau, &d, 1.0);

        // r_t = s_t² r_{t-1} - φ_t c_t v_{t+1}; with β_{t+1} = 0 the second
        // term vanishes along with φ_t.
        let v_next = if beta_next > 0.0 {
            p / beta_next
        } else {
            Vector::zeros(n)
        };
        let mut r = &r_prev * (s_next * s_next);
        r.axpy(-phi_next * c_next, &v_next, 1.0);

        if !all_finite(&x) || !phi_next.is_finite() {
            return Err(Error::NumericalBreakdown { iteration: t });
        }

        observe(&MinresStep {
            t,
            lanczos: &v,
            alpha,
            beta_next,
            prev_residual: &r_prev,
            prev_phi: phi,
            curvature_product,
            iterate: Some(&x),
            residual: Some(&r),
            phi: Some(phi_next),
        });

        // A residual at the roundoff level of the data counts as solved, so
        // θ = 0 still terminates at the grade in floating point.
        let floor = GRADE_TOL * (a_norm_est * x.norm() + beta1);
        let solved = phi_next <= theta * beta1 || phi_next <= floor;
        if solved || t >= max_inner {
            let curvature_value = x.dot(&(b - &r));
            return Ok(MinresOutcome {
                direction: x,
                residual: r,
                flag: if solved {
                    MinresFlag::Sol
                } else {
                    MinresFlag::MaxIter
                },
                inner_iters: t,
                curvature_value,
                rhs_norm: beta1,
                residual_norm: phi_next,
            });
        }
        // φ_t > 0 so s_t > 0 and β_{t+1} > 0.
        debug_assert!(beta_next > 0.0);

        v_prev = v;
        v = v_next;
        beta = beta_next;
        d_prev2 = d_prev;
        d_prev = d;
        c = c_next;
        s = s_next;
        delta1 = delta1_next;
        eps = eps_next;
        phi = phi_next;
        r_prev = r;
        t += 1;
    }
}
