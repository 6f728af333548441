//! Comparison methods: per-column sparse self-representation (SSC), the
//! sequential ℓ1 neighbour penalty (SpatSC) and the shape interaction matrix
//! (closed-form noiseless LRR).

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{dim_err, param_err, OscError, Result};
use crate::linalg::operator_norm_squared;
use crate::prox::shrink;
use crate::relaxed::{run_relaxed, DifferencePenalty};
use crate::types::{CoefficientMatrix, DataMatrix, Matrix, SolveDiagnostics, SolverConfig};

/// Stationarity target of each SSC column: ‖L·(z − prox(z − ∇/L))‖_∞.
pub const SSC_TOLERANCE: f64 = 1e-6;
const SSC_MAX_ITER: usize = 200_000;
/// Relative singular-value cutoff for the shape interaction matrix.
pub const SIM_RANK_TOLERANCE: f64 = 1e-10;

/// SSC regularization: one value for every column, or one per column.
#[derive(Clone, Debug, PartialEq)]
pub enum SscLambda {
    Single(f64),
    PerColumn(Vec<f64>),
}

impl SscLambda {
    fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        let values = match self {
            SscLambda::Single(l) => vec![*l; n],
            SscLambda::PerColumn(v) => {
                if v.len() != n {
                    return dim_err(format!("expected {n} per-column lambdas, got {}", v.len()));
                }
                v.clone()
            }
        };
        if values.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return param_err("SSC lambda must be finite and nonnegative");
        }
        Ok(values)
    }
}

impl From<f64> for SscLambda {
    fn from(l: f64) -> Self {
        SscLambda::Single(l)
    }
}

/// Solves, independently for every column i,
///
/// ```text
/// min ½‖xᵢ − X zᵢ‖² + λᵢ‖zᵢ‖₁   s.t. (zᵢ)ᵢ = 0
/// ```
///
/// by accelerated proximal gradient (the linearized Z-step with no difference
/// penalty) with adaptive restart. Columns run in parallel.
pub fn ssc_solve(x: &DataMatrix, lambda: impl Into<SscLambda>) -> Result<CoefficientMatrix> {
    let n = x.samples();
    let lambdas = lambda.into().resolve(n)?;
    let xm = x.values();
    let gram = xm.tr_mul(xm);
    let lipschitz = operator_norm_squared(xm)?;
    if lipschitz == 0.0 {
        return Ok(CoefficientMatrix::from_trusted(Matrix::zeros(n, n)));
    }
    let columns: Vec<Result<DVector<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| ssc_column(&gram, i, lambdas[i], lipschitz))
        .collect();
    let mut z = Matrix::zeros(n, n);
    for (i, col) in columns.into_iter().enumerate() {
        z.set_column(i, &col?);
    }
    Ok(CoefficientMatrix::from_trusted(z))
}

fn ssc_column(gram: &Matrix, i: usize, lambda: f64, lipschitz: f64) -> Result<DVector<f64>> {
    let n = gram.nrows();
    let b = gram.column(i).into_owned();
    let step = 1.0 / lipschitz;
    let tau = lambda * step;
    let prox_step = |y: &DVector<f64>| -> DVector<f64> {
        let grad = gram * y - &b;
        let mut v = y - grad * step;
        v.apply(|e| *e = shrink(*e, tau));
        v[i] = 0.0;
        v
    };
    let mut z = DVector::zeros(n);
    let mut y = z.clone();
    let mut t = 1.0_f64;
    for _ in 0..SSC_MAX_ITER {
        let z_new = prox_step(&y);
        // adaptive restart when momentum points uphill
        let restart = (&y - &z_new).dot(&(&z_new - &z)) > 0.0;
        let t_new = if restart {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        y = if restart {
            z_new.clone()
        } else {
            &z_new + (&z_new - &z) * ((t - 1.0) / t_new)
        };
        z = z_new;
        t = t_new;
        if (&z - prox_step(&z)).amax() * lipschitz < SSC_TOLERANCE {
            return Ok(z);
        }
    }
    if z.iter().all(|v| v.is_finite()) {
        Ok(z)
    } else {
        Err(OscError::Divergence {
            iteration: SSC_MAX_ITER,
            detail: format!("SSC column {i} is not finite"),
        })
    }
}

/// SpatSC: ½‖X − XZ‖² + λ₁‖Z‖₁ + λ₂‖ZR‖₁ with diag(Z) = 0.
///
/// Same iteration as [`crate::solve_relaxed`] with elementwise shrinkage in
/// the J-step. `config.diag_zero` is forced on.
pub fn spatsc_solve(
    x: &DataMatrix,
    lambda1: f64,
    lambda2: f64,
    config: &SolverConfig,
) -> Result<(CoefficientMatrix, SolveDiagnostics)> {
    let config = SolverConfig {
        lambda1,
        lambda2,
        diag_zero: true,
        ..config.clone()
    };
    let (state, diag) = run_relaxed(x, &config, DifferencePenalty::Elementwise, None)?;
    Ok((CoefficientMatrix::from_trusted(state.z), diag))
}

/// Shape interaction matrix V Vᵀ, V the right singular vectors of A with
/// σ > 1e−10·σ_max.
pub fn sim_closed_form(a: &DataMatrix) -> Result<CoefficientMatrix> {
    let am = a.values();
    if am.iter().all(|&v| v == 0.0) {
        return Err(OscError::InvalidInput("SIM of an all-zero matrix".into()));
    }
    let svd = am.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > SIM_RANK_TOLERANCE * smax)
        .collect();
    let v = v_t.select_rows(&keep);
    Ok(CoefficientMatrix::from_trusted(v.tr_mul(&v)))
}
