//! Closed-form proximal steps used by every solver.

use crate::error::{dim_err, param_err, Result};
use crate::types::Matrix;

#[inline]
pub(crate) fn shrink(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

fn check_threshold(t: f64, name: &str) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return param_err(format!("{name} must be nonnegative, got {t}"));
    }
    Ok(())
}

/// Elementwise soft thresholding, the minimizer of `tau·‖Z‖₁ + ½‖Z − V‖²_F`.
pub fn soft_threshold(v: &Matrix, tau: f64) -> Result<Matrix> {
    check_threshold(tau, "tau")?;
    Ok(v.map(|x| shrink(x, tau)))
}

/// Soft thresholding with the diagonal forced to zero afterwards.
pub fn soft_threshold_zero_diag(v: &Matrix, tau: f64) -> Result<Matrix> {
    if !v.is_square() {
        return dim_err(format!(
            "zero-diagonal thresholding needs a square matrix, got {}x{}",
            v.nrows(),
            v.ncols()
        ));
    }
    let mut out = soft_threshold(v, tau)?;
    out.fill_diagonal(0.0);
    Ok(out)
}

/// Column-wise group shrinkage, the minimizer of `kappa·‖J‖₁,₂ + ½‖J − U‖²_F`.
///
/// A column survives only when its norm is strictly greater than `kappa`.
pub fn group_shrink_columns(u: &Matrix, kappa: f64) -> Result<Matrix> {
    check_threshold(kappa, "kappa")?;
    let mut out = u.clone();
    group_shrink_in_place(&mut out, kappa);
    Ok(out)
}

pub(crate) fn group_shrink_in_place(u: &mut Matrix, kappa: f64) {
    for mut col in u.column_iter_mut() {
        let norm = col.norm();
        if norm > kappa {
            col *= (norm - kappa) / norm;
        } else {
            col.fill(0.0);
        }
    }
}

/// Minimizer over E of `½‖E‖²_F + ⟨Y₁, res + E⟩ + (μ/2)‖res + E‖²_F`, where
/// `res = XZ − X`. Setting the gradient `E + Y₁ + μ(res + E)` to zero gives
/// `E = −(res + Y₁/μ) / (1/μ + 1)`.
pub fn ridge_error_update(residual: &Matrix, y1: &Matrix, mu: f64) -> Result<Matrix> {
    if residual.shape() != y1.shape() {
        return dim_err(format!(
            "residual is {:?} but multiplier is {:?}",
            residual.shape(),
            y1.shape()
        ));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return param_err(format!("mu must be positive, got {mu}"));
    }
    Ok(ridge_error_unchecked(residual, y1, mu))
}

pub(crate) fn ridge_error_unchecked(residual: &Matrix, y1: &Matrix, mu: f64) -> Matrix {
    let inv_mu = 1.0 / mu;
    let scale = -1.0 / (inv_mu + 1.0);
    residual.zip_map(y1, |r, y| scale * (r + y * inv_mu))
}
