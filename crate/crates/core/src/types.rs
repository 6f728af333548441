//! Dense data model shared by the solvers, the segmentation stage and the CLI.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, OscError, Result};

pub type Matrix = DMatrix<f64>;

fn check_finite(m: &Matrix, what: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % m.nrows(), pos / m.nrows());
        return Err(OscError::InvalidInput(format!(
            "{what} has a non-finite entry at ({r}, {c})"
        )));
    }
    Ok(())
}

/// A D×N matrix whose columns are sequentially ordered samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix(Matrix);

impl DataMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.nrows() < 1 || values.ncols() < 2 {
            return dim_err(format!(
                "data matrix must be at least 1x2, got {}x{}",
                values.nrows(),
                values.ncols()
            ));
        }
        check_finite(&values, "data matrix")?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    /// Feature dimension D.
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Number of ordered samples N.
    pub fn samples(&self) -> usize {
        self.0.ncols()
    }

    /// Copy with every nonzero column scaled to unit Euclidean norm.
    pub fn normalized_columns(&self) -> DataMatrix {
        let mut m = self.0.clone();
        for mut col in m.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        DataMatrix(m)
    }
}

/// N×N self-expressive coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix(Matrix);

impl CoefficientMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if !values.is_square() {
            return dim_err(format!(
                "coefficient matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            ));
        }
        check_finite(&values, "coefficient matrix")?;
        Ok(Self(values))
    }

    pub(crate) fn from_trusted(values: Matrix) -> Self {
        debug_assert!(values.is_square());
        Self(values)
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }
}

/// The N×(N−1) lower-bidiagonal first-difference operator R.
///
/// Entry (i, i) is −1 and entry (i+1, i) is +1, so column i of `Z·R` is
/// `z_{i+1} − z_i`. Products are applied structurally in O(rows·N); the
/// dense form is available for inspection and for oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceOperator {
    values: Matrix,
}

impl DifferenceOperator {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return dim_err(format!("difference operator needs n >= 2, got {n}"));
        }
        let mut values = Matrix::zeros(n, n - 1);
        for i in 0..n - 1 {
            values[(i, i)] = -1.0;
            values[(i + 1, i)] = 1.0;
        }
        Ok(Self { values })
    }

    /// Sample count N.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// `M·R`: consecutive column differences of `m` (which must have N columns).
    pub fn right_apply(&self, m: &Matrix) -> Matrix {
        let n = self.n();
        assert_eq!(m.ncols(), n, "right_apply: column count mismatch");
        let mut out = Matrix::zeros(m.nrows(), n - 1);
        for i in 0..n - 1 {
            let mut col = out.column_mut(i);
            col.copy_from(&m.column(i + 1));
            col -= m.column(i);
        }
        out
    }

    /// `M·Rᵀ` for `m` with N−1 columns; returns N columns.
    pub fn right_apply_transpose(&self, m: &Matrix) -> Matrix {
        let n = self.n();
        assert_eq!(m.ncols(), n - 1, "right_apply_transpose: column count mismatch");
        let mut out = Matrix::zeros(m.nrows(), n);
        for c in 0..n {
            let mut col = out.column_mut(c);
            if c >= 1 {
                col += m.column(c - 1);
            }
            if c < n - 1 {
                col -= m.column(c);
            }
        }
        out
    }
}

/// Subspace assignments for each sample, with `k` the number of labels in use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LabelVector {
    labels: Vec<usize>,
    k: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return param_err(format!("label {bad} out of range for k = {k}"));
        }
        Ok(Self { labels, k })
    }

    /// Builds a label vector with `k = max label + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl TryFrom<Vec<usize>> for LabelVector {
    type Error = std::convert::Infallible;

    fn try_from(labels: Vec<usize>) -> std::result::Result<Self, Self::Error> {
        Ok(Self::from_labels(labels))
    }
}

impl From<LabelVector> for Vec<usize> {
    fn from(v: LabelVector) -> Self {
        v.labels
    }
}

/// How the penalty μ evolves between iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MuSchedule {
    /// `μ ← min(μ_max, γ·μ)` where γ = γ⁰ only after a small step, else 1.
    #[default]
    Multiplicative,
    /// `μ ← min(μ_max, μ + L_z / (η_z − ‖R‖²))`, the increment required for the
    /// relaxed solver's Lyapunov sequence to be nonincreasing.
    Additive,
}

/// Starting point for the primal variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Initialization {
    /// Z = 0, J = 0, E = 0 and all multipliers set to one.
    #[default]
    Standard,
    /// Z drawn uniformly from `[-scale, scale]`; everything else as `Standard`.
    Random { seed: u64, scale: f64 },
}

/// Parameters shared by the linearized ADMM solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu0: f64,
    pub mu_max: f64,
    pub gamma0: f64,
    /// Linearization constant for Z. `None` picks the smallest safe value for
    /// the solver in use.
    pub eta_z: Option<f64>,
    pub eta_j: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub max_iter: usize,
    pub diag_zero: bool,
    pub monitor_lyapunov: bool,
    pub mu_schedule: MuSchedule,
    pub init: Initialization,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            lambda2: 1.0,
            mu0: 1.0,
            mu_max: 1e10,
            gamma0: 1.1,
            eta_z: None,
            eta_j: 1.02,
            eps1: 1e-4,
            eps2: 1e-4,
            max_iter: 2000,
            diag_zero: false,
            monitor_lyapunov: false,
            mu_schedule: MuSchedule::Multiplicative,
            init: Initialization::Standard,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                param_err(format!("{name} must be positive and finite, got {v}"))
            }
        };
        for (v, name) in [(self.lambda1, "lambda1"), (self.lambda2, "lambda2")] {
            if !(v.is_finite() && v >= 0.0) {
                return param_err(format!("{name} must be nonnegative, got {v}"));
            }
        }
        positive(self.mu0, "mu0")?;
        positive(self.mu_max, "mu_max")?;
        positive(self.eps1, "eps1")?;
        positive(self.eps2, "eps2")?;
        if self.mu_max < self.mu0 {
            return param_err(format!(
                "mu_max ({}) must be >= mu0 ({})",
                self.mu_max, self.mu0
            ));
        }
        if !(self.gamma0 > 1.0 && self.gamma0.is_finite()) {
            return param_err(format!("gamma0 must exceed 1, got {}", self.gamma0));
        }
        if !(self.eta_j > 1.0 && self.eta_j.is_finite()) {
            return param_err(format!("eta_j must exceed 1, got {}", self.eta_j));
        }
        if let Some(eta_z) = self.eta_z {
            positive(eta_z, "eta_z")?;
        }
        if self.max_iter == 0 {
            return param_err("max_iter must be positive");
        }
        if let Initialization::Random { scale, .. } = self.init {
            if !(scale.is_finite() && scale >= 0.0) {
                return param_err(format!("random init scale must be nonnegative, got {scale}"));
            }
        }
        Ok(())
    }
}

/// Per-solve monitoring record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// Constraint residual per iteration. The relaxed solver reports
    /// ‖J − ZR‖_F; the exact solver reports the larger of its two residuals,
    /// each divided by ‖X‖_F.
    pub feasibility_history: Vec<f64>,
    /// The step-change quantity tested against ε₂ at each iteration.
    pub change_history: Vec<f64>,
    /// μᵏ used in each iteration.
    pub mu_history: Vec<f64>,
    pub lyapunov_history: Option<Vec<f64>>,
    pub converged: bool,
    pub objective_value: f64,
    /// Linearization constants actually used.
    pub eta_z: f64,
    pub eta_j: f64,
    /// L_z = ‖X‖².
    pub lipschitz: f64,
    pub config: SolverConfig,
}

impl SolveDiagnostics {
    pub fn final_feasibility(&self) -> f64 {
        self.feasibility_history.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn final_change(&self) -> f64 {
        self.change_history.last().copied().unwrap_or(f64::INFINITY)
    }
}
