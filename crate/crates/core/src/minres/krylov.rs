//! Dense reference for the MINRES residual norm.
//!
//! Builds an explicit orthonormal basis of `K_t(A, b)` with twice-applied
//! Gram-Schmidt and solves the least-squares problem by SVD. It shares no
//! recurrences with the short-term solver, which makes it a usable oracle
//! on small systems.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::operator::Vector;

const MAX_DIM: usize = 64;

/// `min { |b - A p| : p ∈ K_t(A, b) }` for a small dense symmetric `A`.
///
/// Past the grade of `b` the basis stops growing and the grade-level optimum
/// is returned.
pub fn krylov_lsq_oracle(a: &DMatrix<f64>, b: &Vector, t: usize) -> Result<f64> {
    let n = a.nrows();
    if n > MAX_DIM || a.ncols() != n {
        return Err(Error::InvalidConfig(format!(
            "dense Krylov oracle needs a square matrix with n <= {MAX_DIM}"
        )));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let basis = krylov_basis(a, b, t.min(n));
    if basis.is_empty() {
        return Ok(b.norm());
    }
    let q = DMatrix::from_columns(&basis);
    let aq = a * &q;
    let svd = SVD::new(aq.clone(), true, true);
    let cutoff = svd.singular_values.max() * 1e-13 * n as f64;
    let y = svd
        .solve(b, cutoff)
        .map_err(|_| Error::NumericalBreakdown { iteration: t })?;
    Ok((b - aq * y).norm())
}

/// Orthonormal basis of `K_t(A, b)`, truncated at the grade.
pub(crate) fn krylov_basis(a: &DMatrix<f64>, b: &Vector, t: usize) -> Vec<Vector> {
    let scale = b.norm();
    if scale == 0.0 || t == 0 {
        return Vec::new();
    }
    let a_norm = a.norm().max(f64::MIN_POSITIVE);
    let mut basis = vec![b / scale];
    while basis.len() < t {
        let mut w = a * basis.last().unwrap();
        for _ in 0..2 {
            for q in &basis {
                let h = q.dot(&w);
                w.axpy(-h, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm <= 1e-12 * a_norm {
            break;
        }
        basis.push(w / norm);
    }
    basis
}
