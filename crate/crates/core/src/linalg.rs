//! Small dense helpers: spectral norms and the penalty norms of the objective.

use nalgebra::SymmetricEigen;

use crate::error::{dim_err, OscError, Result};
use crate::types::Matrix;

/// Squared spectral norm ‖M‖² (largest singular value squared), taken as the
/// top eigenvalue of the smaller Gram matrix.
pub fn operator_norm_squared(m: &Matrix) -> Result<f64> {
    if m.is_empty() {
        return dim_err("operator norm of an empty matrix");
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(OscError::InvalidInput(
            "operator norm of a non-finite matrix".into(),
        ));
    }
    let gram = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.tr_mul(m)
    };
    let top = SymmetricEigen::new(gram).eigenvalues.max();
    Ok(top.max(0.0))
}

/// Elementwise ℓ1 norm.
pub fn l1_norm(m: &Matrix) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

/// Sum of column Euclidean norms (ℓ1,2).
pub fn l12_norm(m: &Matrix) -> f64 {
    m.column_iter().map(|c| c.norm()).sum()
}
