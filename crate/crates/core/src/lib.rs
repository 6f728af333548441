//! Ordered subspace clustering.
//!
//! Segments sequentially ordered samples (the columns of a D×N matrix) into
//! subspaces. A self-expressive coefficient matrix Z is found by minimizing
//!
//! ```text
//! ½‖X − XZ‖²_F + λ₁‖Z‖₁ + λ₂‖ZR‖₁,₂
//! ```
//!
//! where R takes consecutive column differences, then the affinity
//! |Z| + |Z|ᵀ is partitioned with normalized-cut spectral clustering.
//!
//! Two solvers are provided: [`solve_relaxed`] (sequential linearized ADMM on
//! the relaxed objective) and [`solve_exact`] (parallel-splitting linearized
//! ADMM with the fitting constraint kept exactly). The [`baselines`] module
//! holds the comparison methods, [`data_gen`] the synthetic generators and
//! [`metrics`] the scoring functions.

pub mod baselines;
pub mod data_gen;
pub mod error;
pub mod exact;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod prox;
pub mod relaxed;
pub mod spectral;
pub mod types;

pub use error::{OscError, Result};
pub use exact::{solve_exact, solve_exact_state, ExactState};
pub use linalg::operator_norm_squared;
pub use relaxed::{lyapunov_s, solve_relaxed, solve_relaxed_state, LyapunovWeights, RelaxedState};
pub use types::{
    CoefficientMatrix, DataMatrix, DifferenceOperator, Initialization, LabelVector, Matrix,
    MuSchedule, SolveDiagnostics, SolverConfig,
};
