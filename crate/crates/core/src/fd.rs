//! Central-difference checks for analytic derivatives.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::operator::{all_finite, Vector};

/// Max over coordinates of `|central difference - analytic| / (1 + |analytic|)`
/// for the gradient at `x`.
pub fn fd_grad_check<O: Objective + ?Sized>(obj: &O, x: &Vector, h: f64) -> Result<f64> {
    check_step(h)?;
    let g = obj.gradient(x);
    if !all_finite(&g) {
        return Err(Error::ObjectiveNotEvaluable);
    }
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = obj.value(&probe);
        probe[i] = x[i] - h;
        let fm = obj.value(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::ObjectiveNotEvaluable);
        }
        let cd = (fp - fm) / (2.0 * h);
        worst = worst.max((cd - g[i]).abs() / (1.0 + g[i].abs()));
    }
    Ok(worst)
}

/// Compares `∇²f(x) v` with `(∇f(x + hv) - ∇f(x - hv)) / 2h`, coordinatewise
/// relative to `1 + |analytic|`.
pub fn fd_hvp_check<O: Objective + ?Sized>(obj: &O, x: &Vector, v: &Vector, h: f64) -> Result<f64> {
    check_step(h)?;
    let hv = obj
        .hessian_vector_product(x, v)
        .ok_or(Error::NoHessianOracle)?;
    let gp = obj.gradient(&(x + v * h));
    let gm = obj.gradient(&(x - v * h));
    if !all_finite(&gp) || !all_finite(&gm) || !all_finite(&hv) {
        return Err(Error::ObjectiveNotEvaluable);
    }
    let cd = (gp - gm) / (2.0 * h);
    Ok(cd
        .iter()
        .zip(hv.iter())
        .map(|(c, a)| (c - a).abs() / (1.0 + a.abs()))
        .fold(0.0, f64::max))
}

/// Builds `∇²f(x)` from `n` Hessian-vector products and symmetrizes it.
pub fn dense_hessian<O: Objective + ?Sized>(obj: &O, x: &Vector) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = Vector::zeros(n);
        e[j] = 1.0;
        let col = obj
            .hessian_vector_product(x, &e)
            .ok_or(Error::NoHessianOracle)?;
        h.set_column(j, &col);
    }
    Ok((&h + h.transpose()) * 0.5)
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {h}"
        )))
    }
}
