//! Objective callbacks and oracle-call accounting.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::operator::Vector;

/// A twice-differentiable function `f: R^n -> R`.
///
/// Implementations must be pure in `x`; the solver may evaluate the same
/// point more than once.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    /// `∇²f(x) v`, or `None` when the objective has no Hessian oracle.
    fn hessian_vector_product(&self, _x: &Vector, _v: &Vector) -> Option<Vector> {
        None
    }

    fn has_hessian(&self) -> bool {
        false
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        (**self).gradient(x)
    }

    fn hessian_vector_product(&self, x: &Vector, v: &Vector) -> Option<Vector> {
        (**self).hessian_vector_product(x, v)
    }

    fn has_hessian(&self) -> bool {
        (**self).has_hessian()
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        (**self).gradient(x)
    }

    fn hessian_vector_product(&self, x: &Vector, v: &Vector) -> Option<Vector> {
        (**self).hessian_vector_product(x, v)
    }

    fn has_hessian(&self) -> bool {
        (**self).has_hessian()
    }
}

/// Oracle cost of each callback, in units of one function evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCosts {
    pub value: u64,
    pub gradient: u64,
    pub hessian_vector: u64,
}

impl Default for OracleCosts {
    fn default() -> Self {
        Self {
            value: 1,
            gradient: 1,
            hessian_vector: 2,
        }
    }
}

/// Snapshot of how often each oracle was called.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleTally {
    pub values: u64,
    pub gradients: u64,
    pub hessian_vectors: u64,
}

/// Wraps an objective and tallies oracle calls.
///
/// Counters are atomic so Hessian-vector products issued from several
/// threads against one iterate are still accounted exactly.
pub struct Counted<O> {
    inner: O,
    costs: OracleCosts,
    values: AtomicU64,
    gradients: AtomicU64,
    hessian_vectors: AtomicU64,
}

impl<O: Objective> Counted<O> {
    pub fn new(inner: O) -> Self {
        Self::with_costs(inner, OracleCosts::default())
    }

    pub fn with_costs(inner: O, costs: OracleCosts) -> Self {
        Self {
            inner,
            costs,
            values: AtomicU64::new(0),
            gradients: AtomicU64::new(0),
            hessian_vectors: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn tally(&self) -> OracleTally {
        OracleTally {
            values: self.values.load(Ordering::Relaxed),
            gradients: self.gradients.load(Ordering::Relaxed),
            hessian_vectors: self.hessian_vectors.load(Ordering::Relaxed),
        }
    }

    /// Weighted oracle total.
    pub fn oracle_calls(&self) -> u64 {
        let t = self.tally();
        t.values * self.costs.value
            + t.gradients * self.costs.gradient
            + t.hessian_vectors * self.costs.hessian_vector
    }
}

impl<O: Objective> Objective for Counted<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.values.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.gradients.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x)
    }

    fn hessian_vector_product(&self, x: &Vector, v: &Vector) -> Option<Vector> {
        let hv = self.inner.hessian_vector_product(x, v);
        if hv.is_some() {
            self.hessian_vectors.fetch_add(1, Ordering::Relaxed);
        }
        hv
    }

    fn has_hessian(&self) -> bool {
        self.inner.has_hessian()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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
        fn hessian_vector_product(&self, _x: &Vector, v: &Vector) -> Option<Vector> {
            Some(v.clone())
        }
        fn has_hessian(&self) -> bool {
            true
        }
    }

    #[test]
    fn default_costs() {
        let obj = Counted::new(HalfSquare);
        let x = Vector::from_vec(vec![1.0, 2.0]);
        let mut last = 0;
        obj.value(&x);
        assert_eq!(obj.oracle_calls(), 1);
        obj.gradient(&x);
        assert_eq!(obj.oracle_calls(), 2);
        obj.hessian_vector_product(&x, &x);
        assert_eq!(obj.oracle_calls(), 4);
        for _ in 0..5 {
            obj.value(&x);
            assert!(obj.oracle_calls() >= last);
            last = obj.oracle_calls();
        }
        assert_eq!(
            obj.tally(),
            OracleTally {
                values: 6,
                gradients: 1,
                hessian_vectors: 1
            }
        );
    }

    #[test]
    fn custom_costs() {
        let costs = OracleCosts {
            value: 1,
            gradient: 3,
            hessian_vector: 5,
        };
        let obj = Counted::with_costs(HalfSquare, costs);
        let x = Vector::from_vec(vec![1.0, 2.0]);
        obj.gradient(&x);
        obj.hessian_vector_product(&x, &x);
        assert_eq!(obj.oracle_calls(), 8);
    }
}
