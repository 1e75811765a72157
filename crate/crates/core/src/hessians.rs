//! Operators for `B̄ = B + ζ I`: exact Hessians and limited-memory BFGS.

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::operator::{SymmetricOperator, Vector};

mod lbfgs;

pub use lbfgs::{dense_bfgs_oracle, LbfgsOperator, LbfgsStore, CAUTIOUS_THRESHOLD};

/// `v -> ∇²f(x) v` through the objective's Hessian-vector oracle.
pub struct HessianOperator<'a, O: ?Sized> {
    obj: &'a O,
    x: &'a Vector,
}

/// Exact Hessian at `x`. Fails if the objective has no Hessian oracle.
pub fn exact_hvp_operator<'a, O>(obj: &'a O, x: &'a Vector) -> Result<HessianOperator<'a, O>>
where
    O: Objective + ?Sized,
{
    if !obj.has_hessian() {
        return Err(Error::NoHessianOracle);
    }
    if x.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x.len(),
        });
    }
    Ok(HessianOperator { obj, x })
}

impl<O: Objective + ?Sized> SymmetricOperator for HessianOperator<'_, O> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self.obj
            .hessian_vector_product(self.x, v)
            .expect("objective advertised a Hessian oracle")
    }
}

/// `v -> B v + ζ v`.
#[derive(Debug, Clone)]
pub struct Regularized<A> {
    base: A,
    shift: f64,
}

pub fn regularized<A: SymmetricOperator>(base: A, shift: f64) -> Regularized<A> {
    assert!(
        shift.is_finite() && shift >= 0.0,
        "regularization must be finite and non-negative, got {shift}"
    );
    Regularized { base, shift }
}

impl<A> Regularized<A> {
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn base(&self) -> &A {
        &self.base
    }
}

impl<A: SymmetricOperator> SymmetricOperator for Regularized<A> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        let mut out = self.base.apply(v);
        if self.shift != 0.0 {
            out.axpy(self.shift, v, 1.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Counted;
    use crate::operator::{symmetry_probe, Diagonal, ScaledIdentity};
    use nalgebra::dvector;

    struct HalfSquare(usize);

    impl Objective for HalfSquare {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, x: &Vector) -> f64 {
            0.5 * x.norm_squared()
        }
        fn gradient(&self, x: &Vector) -> Vector {
            x.clone()
        }
        fn hessian_vector_product(&self, _x: &Vector, v: &Vector) -> Option<Vector> {
            Some(v.clone())
        }
        fn has_hessian(&self) -> bool {
            true
        }
    }

    struct NoHessian;

    impl Objective for NoHessian {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &Vector) -> f64 {
            x[0]
        }
        fn gradient(&self, _x: &Vector) -> Vector {
            dvector![1.0]
        }
    }

    #[test]
    fn half_square_hessian_is_identity() {
        let obj = Counted::new(HalfSquare(3));
        let x = dvector![0.3, -2.0, 5.0];
        let h = exact_hvp_operator(&obj, &x).unwrap();
        let v = dvector![1.0, 2.0, 3.0];
        assert_eq!(h.apply(&v), v);
        assert_eq!(h.apply(&Vector::zeros(3)), Vector::zeros(3));
        assert_eq!(obj.oracle_calls(), 4);
    }

    #[test]
    fn missing_hessian_oracle() {
        let x = dvector![0.0];
        assert!(matches!(
            exact_hvp_operator(&NoHessian, &x),
            Err(Error::NoHessianOracle)
        ));
    }

    #[test]
    fn shift_examples() {
        let e1 = dvector![1.0, 0.0];
        let e2 = dvector![0.0, 1.0];
        assert_eq!(
            regularized(ScaledIdentity::identity(2), 1.0).apply(&e1),
            dvector![2.0, 0.0]
        );
        let saddle = Diagonal(dvector![1.0, -1.0]);
        assert_eq!(regularized(&saddle, 1.0).apply(&e2), Vector::zeros(2));
        let v = dvector![0.7, -1.3];
        assert_eq!(regularized(&saddle, 0.0).apply(&v), saddle.apply(&v));
    }

    #[test]
    fn shift_moves_rayleigh_quotients_by_zeta() {
        let base = Diagonal(dvector![3.0, -1.0, 0.5]);
        let shifted = regularized(&base, 0.25);
        for v in [dvector![1.0, 2.0, 3.0], dvector![-0.1, 0.0, 4.0]] {
            let gap = v.dot(&shifted.apply(&v)) - v.dot(&base.apply(&v));
            assert!((gap - 0.25 * v.norm_squared()).abs() <= 1e-10);
        }
        assert!(symmetry_probe(&shifted, 20, 1).passes(1e-10));
    }

    #[test]
    #[should_panic]
    fn negative_shift_panics() {
        regularized(ScaledIdentity::identity(2), -1.0);
    }
}
