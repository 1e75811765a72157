//! Matrix-free symmetric linear operators.
//!
//! Every Krylov routine in the crate touches its matrix only through
//! [`SymmetricOperator::apply`], so exact Hessians, quasi-Newton
//! approximations and dense test matrices are interchangeable.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Vector = DVector<f64>;

/// A symmetric linear map `v -> A v` on `R^n`.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    fn apply(&self, v: &Vector) -> Vector;
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        (**self).apply(v)
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        (**self).apply(v)
    }
}

/// Dense matrices act as operators. Symmetry is the caller's responsibility.
impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self * v
    }
}

/// `v -> scale * v`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIdentity {
    pub dim: usize,
    pub scale: f64,
}

impl ScaledIdentity {
    pub fn identity(dim: usize) -> Self {
        Self { dim, scale: 1.0 }
    }
}

impl SymmetricOperator for ScaledIdentity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &Vector) -> Vector {
        v * self.scale
    }
}

/// Diagonal operator.
#[derive(Debug, Clone)]
pub struct Diagonal(pub Vector);

impl SymmetricOperator for Diagonal {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self.0.component_mul(v)
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&Vector) -> Vector> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&Vector) -> Vector> SymmetricOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &Vector) -> Vector {
        (self.f)(v)
    }
}

/// Materializes an operator column by column. Test-scale only.
pub fn to_dense<A: SymmetricOperator + ?Sized>(op: &A) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = Vector::zeros(n);
        e[j] = 1.0;
        m.set_column(j, &op.apply(&e));
    }
    m
}

/// Outcome of a randomized symmetry probe.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryReport {
    /// Largest `|u'Av - v'Au| / (1 + |u||v| |A|_est)` over all probes.
    pub worst: f64,
    /// Largest observed `|Au| / |u|`, a lower estimate of `|A|`.
    pub norm_estimate: f64,
}

impl SymmetryReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.worst <= tol
    }
}

/// Probes `u'(Av)` against `v'(Au)` for `probes` pairs of Gaussian vectors.
pub fn symmetry_probe<A: SymmetricOperator + ?Sized>(
    op: &A,
    probes: usize,
    seed: u64,
) -> SymmetryReport {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));

    let mut pairs = Vec::with_capacity(probes);
    let mut norm_estimate: f64 = 0.0;
    for _ in 0..probes {
        let (u, v) = (draw(), draw());
        let (au, av) = (op.apply(&u), op.apply(&v));
        norm_estimate = norm_estimate
            .max(au.norm() / u.norm())
            .max(av.norm() / v.norm());
        pairs.push((u, v, au, av));
    }

    let worst = pairs
        .iter()
        .map(|(u, v, au, av)| {
            let gap = (u.dot(av) - v.dot(au)).abs();
            gap / (1.0 + u.norm() * v.norm() * norm_estimate)
        })
        .fold(0.0, f64::max);

    SymmetryReport {
        worst,
        norm_estimate,
    }
}

pub(crate) fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn dense_round_trip() {
        let m = dmatrix![2.0, 1.0; 1.0, -3.0];
        assert_eq!(to_dense(&m), m);
    }

    #[test]
    fn symmetric_matrix_passes_probe() {
        let m = dmatrix![2.0, 1.0, 0.5; 1.0, -3.0, 0.0; 0.5, 0.0, 1.0];
        let report = symmetry_probe(&m, 20, 7);
        assert!(report.passes(1e-10), "{report:?}");
    }

    #[test]
    fn asymmetric_matrix_fails_probe() {
        let m = dmatrix![1.0, 2.0; 0.0, 1.0];
        assert!(!symmetry_probe(&m, 20, 7).passes(1e-10));
    }

    #[test]
    fn diagonal_and_scaled_identity() {
        let d = Diagonal(Vector::from_vec(vec![1.0, -1.0]));
        let v = Vector::from_vec(vec![3.0, 4.0]);
        assert_eq!(d.apply(&v), Vector::from_vec(vec![3.0, -4.0]));
        assert_eq!(ScaledIdentity { dim: 2, scale: 2.0 }.apply(&v), v * 2.0);
    }
}
