//! Compact-form limited-memory BFGS with cautious pair acceptance.
//!
//! With `S = [s_0 … s_{m-1}]`, `Y = [y_0 … y_{m-1}]`, `L` the strictly lower
//! part of `S'Y` and `D` its diagonal,
//!
//! ```text
//! B = γ I - [γS  Y] [ γS'S   L ]⁻¹ [γS  Y]'
//!                   [  L'   -D ]
//! ```
//!
//! Pairs are accepted whenever `|y's| ≥ 1e-18 |s|²`, so negative `y's` is
//! allowed and `B` may be indefinite.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::operator::{SymmetricOperator, Vector};

pub const CAUTIOUS_THRESHOLD: f64 = 1e-18;

#[derive(Debug, Clone)]
pub struct LbfgsStore {
    dim: usize,
    memory: usize,
    pairs: VecDeque<(Vector, Vector)>,
    gamma: f64,
    sts: DMatrix<f64>,
    sty: DMatrix<f64>,
    middle: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    degenerate: bool,
}

impl LbfgsStore {
    pub fn new(dim: usize, memory: usize) -> Self {
        assert!(memory >= 1, "L-BFGS memory must be at least 1");
        Self {
            dim,
            memory,
            pairs: VecDeque::with_capacity(memory),
            gamma: 1.0,
            sts: DMatrix::zeros(0, 0),
            sty: DMatrix::zeros(0, 0),
            middle: None,
            degenerate: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `γ = y'y / y's` of the newest accepted pair; 1 while empty.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Stored pairs, oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = (&Vector, &Vector)> {
        self.pairs.iter().map(|(s, y)| (s, y))
    }

    /// Offers a curvature pair. Returns whether it was stored.
    pub fn update(&mut self, s: &Vector, y: &Vector) -> bool {
        assert_eq!(s.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let ss = s.norm_squared();
        let ys = y.dot(s);
        let yy = y.norm_squared();
        if !(ss > 0.0)
            || !ss.is_finite()
            || !yy.is_finite()
            || !(ys.abs() >= CAUTIOUS_THRESHOLD * ss)
        {
            return false;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s.clone(), y.clone()));
        self.gamma = yy / ys;
        self.refresh();
        true
    }

    fn refresh(&mut self) {
        let m = self.pairs.len();
        self.sts = DMatrix::from_fn(m, m, |i, j| self.pairs[i].0.dot(&self.pairs[j].0));
        self.sty = DMatrix::from_fn(m, m, |i, j| self.pairs[i].0.dot(&self.pairs[j].1));

        let mut middle = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                middle[(i, j)] = self.gamma * self.sts[(i, j)];
                if i > j {
                    middle[(i, m + j)] = self.sty[(i, j)];
                    middle[(m + j, i)] = self.sty[(i, j)];
                }
            }
            middle[(m + i, m + i)] = -self.sty[(i, i)];
        }
        let lu = middle.lu();
        let pivots = lu.u().diagonal().map(f64::abs);
        let largest = pivots.max();
        self.degenerate = !largest.is_finite() || pivots.min() <= f64::EPSILON * largest;
        self.middle = Some(lu);
    }

    /// Whether the middle block is numerically singular.
    pub fn is_degenerate(&self) -> bool {
        !self.pairs.is_empty() && self.degenerate
    }

    /// `B v`.
    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        if self.pairs.is_empty() {
            return Ok(v * self.gamma);
        }
        if self.degenerate {
            return Err(Error::DegenerateMiddleMatrix);
        }
        let m = self.pairs.len();
        let mut wv = DVector::zeros(2 * m);
        for (i, (s, y)) in self.pairs.iter().enumerate() {
            wv[i] = self.gamma * s.dot(v);
            wv[m + i] = y.dot(v);
        }
        let z = self
            .middle
            .as_ref()
            .and_then(|lu| lu.solve(&wv))
            .ok_or(Error::DegenerateMiddleMatrix)?;
        let mut out = v * self.gamma;
        for (i, (s, y)) in self.pairs.iter().enumerate() {
            out.axpy(-self.gamma * z[i], s, 1.0);
            out.axpy(-z[m + i], y, 1.0);
        }
        Ok(out)
    }

    /// Borrows the store as an operator; fails on a degenerate middle block.
    pub fn operator(&self) -> Result<LbfgsOperator<'_>> {
        if self.is_degenerate() {
            return Err(Error::DegenerateMiddleMatrix);
        }
        Ok(LbfgsOperator { store: self })
    }
}

pub struct LbfgsOperator<'a> {
    store: &'a LbfgsStore,
}

impl SymmetricOperator for LbfgsOperator<'_> {
    fn dim(&self) -> usize {
        self.store.dim
    }

    fn apply(&self, v: &Vector) -> Vector {
        self.store
            .apply(v)
            .expect("middle block checked when the operator was built")
    }
}

/// Dense BFGS matrix from `B₀ = γ I` and the recursive rank-two update,
/// applied to `pairs` oldest first. Test-scale reference for [`LbfgsStore`].
pub fn dense_bfgs_oracle<'a, I>(dim: usize, gamma: f64, pairs: I) -> DMatrix<f64>
where
    I: IntoIterator<Item = (&'a Vector, &'a Vector)>,
{
    let mut b = DMatrix::identity(dim, dim) * gamma;
    for (s, y) in pairs {
        let bs = &b * s;
        let sbs = s.dot(&bs);
        let ys = y.dot(s);
        b -= &bs * bs.transpose() / sbs;
        b += y * y.transpose() / ys;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn empty_store_is_identity() {
        let store = LbfgsStore::new(2, 10);
        assert_eq!(
            store.apply(&dvector![3.0, 4.0]).unwrap(),
            dvector![3.0, 4.0]
        );
        assert_eq!(store.gamma(), 1.0);
    }

    #[test]
    fn rejects_zero_curvature_pair() {
        let mut store = LbfgsStore::new(2, 10);
        assert!(!store.update(&dvector![1.0, 0.0], &dvector![0.0, 0.0]));
        assert!(store.is_empty());
        assert_eq!(store.gamma(), 1.0);
    }

    #[test]
    fn single_pair_scales_identity() {
        let mut store = LbfgsStore::new(2, 10);
        assert!(store.update(&dvector![1.0, 0.0], &dvector![2.0, 0.0]));
        assert_eq!(store.gamma(), 2.0);
        let e1 = store.apply(&dvector![1.0, 0.0]).unwrap();
        let e2 = store.apply(&dvector![0.0, 1.0]).unwrap();
        assert!((e1 - dvector![2.0, 0.0]).norm() < 1e-14);
        assert!((e2 - dvector![0.0, 2.0]).norm() < 1e-14);
    }

    #[test]
    fn evicts_oldest_pair() {
        let mut store = LbfgsStore::new(3, 10);
        for k in 0..11 {
            let s = dvector![1.0, k as f64, 0.5];
            let y = &s * 2.0 + dvector![0.0, 0.0, 0.1 * k as f64];
            assert!(store.update(&s, &y));
        }
        assert_eq!(store.len(), 10);
        assert_eq!(store.pairs().next().unwrap().0, &dvector![1.0, 1.0, 0.5]);
    }

    #[test]
    fn negative_curvature_pair_gives_indefinite_operator() {
        let mut store = LbfgsStore::new(2, 10);
        assert!(store.update(&dvector![1.0, 0.0], &dvector![-1.0, 0.0]));
        assert_eq!(store.gamma(), -1.0);
        let v = dvector![0.3, -0.7];
        assert!((store.apply(&v).unwrap() + &v).norm() < 1e-14);
    }

    #[test]
    fn singular_middle_block_is_reported() {
        // Schur complement γ S'S + L D⁻¹ L' vanishes when γ D₁₁ = -(s₂'y₁)².
        let mut store = LbfgsStore::new(2, 10);
        assert!(store.update(&dvector![1.0, 0.0], &dvector![-1.0, 1.0]));
        assert!(store.update(&dvector![0.0, 1.0], &dvector![0.0, 1.0]));
        assert_eq!(store.gamma(), 1.0);
        assert!(store.is_degenerate());
        assert_eq!(
            store.apply(&dvector![1.0, 2.0]),
            Err(Error::DegenerateMiddleMatrix)
        );
        assert!(store.operator().is_err());
    }

    #[test]
    fn repeated_pair_matches_dense_update() {
        let mut store = LbfgsStore::new(2, 10);
        let s = dvector![1.0, 1.0];
        let y = dvector![2.0, 1.0];
        assert!(store.update(&s, &y));
        assert!(store.update(&s, &y));
        let dense = dense_bfgs_oracle(2, store.gamma(), store.pairs());
        for v in [dvector![1.0, 0.0], dvector![0.0, 1.0]] {
            assert!((store.apply(&v).unwrap() - &dense * &v).norm() < 1e-12);
        }
    }
}
