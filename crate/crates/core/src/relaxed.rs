//! Sequential linearized ADMM (v-LADMAP) for the relaxed objective
//!
//! ```text
//! min ½‖X − XZ‖²_F + λ₁‖Z‖₁ + λ₂‖J‖₁,₂   s.t.  J = ZR
//! ```
//!
//! Both the fitting term and the augmented term are linearized around Zᵏ, so
//! the Z-step is a single soft threshold. The J-step then uses the freshly
//! computed Zᵏ⁺¹.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_err, param_err, OscError, Result};
use crate::linalg::{l12_norm, l1_norm, operator_norm_squared};
use crate::prox::{group_shrink_in_place, shrink};
use crate::types::{
    CoefficientMatrix, DataMatrix, DifferenceOperator, Initialization, Matrix, MuSchedule,
    SolveDiagnostics, SolverConfig,
};

/// Iterate of the relaxed solver.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedState {
    pub z: Matrix,
    pub j: Matrix,
    pub y: Matrix,
    pub mu: f64,
    pub iteration: usize,
}

/// Weights of the Lyapunov sequence sᵏ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovWeights {
    pub eta_z: f64,
    pub eta_j: f64,
    pub lipschitz: f64,
}

impl LyapunovWeights {
    pub fn from_diagnostics(diag: &SolveDiagnostics) -> Self {
        Self {
            eta_z: diag.eta_z,
            eta_j: diag.eta_j,
            lipschitz: diag.lipschitz,
        }
    }
}

/// Penalty applied to the difference variable J.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum DifferencePenalty {
    /// ‖J‖₁,₂, column-wise shrinkage.
    Group,
    /// ‖J‖₁, elementwise shrinkage.
    Elementwise,
}

impl DifferencePenalty {
    fn value(self, j: &Matrix) -> f64 {
        match self {
            DifferencePenalty::Group => l12_norm(j),
            DifferencePenalty::Elementwise => l1_norm(j),
        }
    }

    fn prox_in_place(self, u: &mut Matrix, kappa: f64) {
        match self {
            DifferencePenalty::Group => group_shrink_in_place(u, kappa),
            DifferencePenalty::Elementwise => u.apply(|v| *v = shrink(*v, kappa)),
        }
    }
}

/// Default η_z for the relaxed solver: ‖R‖² + L_z/μ⁰ + 1e−3.
///
/// With this choice the additive μ increment L_z/(η_z − ‖R‖²) stays close to
/// μ⁰.
pub fn default_relaxed_eta_z(r_norm2: f64, lipschitz: f64, mu0: f64) -> f64 {
    r_norm2 + lipschitz / mu0 + 1e-3
}

pub(crate) struct RelaxedSetup {
    pub r: DifferenceOperator,
    pub r_norm2: f64,
    pub lipschitz: f64,
    pub eta_z: f64,
}

pub(crate) fn relaxed_setup(x: &DataMatrix, config: &SolverConfig) -> Result<RelaxedSetup> {
    config.validate()?;
    let n = x.samples();
    let r = DifferenceOperator::new(n)?;
    let r_norm2 = operator_norm_squared(r.values())?;
    let lipschitz = operator_norm_squared(x.values())?;
    let eta_z = config
        .eta_z
        .unwrap_or_else(|| default_relaxed_eta_z(r_norm2, lipschitz, config.mu0));
    if eta_z <= r_norm2 {
        return param_err(format!(
            "eta_z ({eta_z}) must exceed ||R||^2 ({r_norm2}) for the relaxed solver"
        ));
    }
    Ok(RelaxedSetup {
        r,
        r_norm2,
        lipschitz,
        eta_z,
    })
}

pub(crate) fn initial_z(n: usize, init: Initialization, diag_zero: bool) -> Matrix {
    let mut z = match init {
        Initialization::Standard => Matrix::zeros(n, n),
        Initialization::Random { seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if scale > 0.0 {
                Matrix::from_fn(n, n, |_, _| rng.random_range(-scale..=scale))
            } else {
                Matrix::zeros(n, n)
            }
        }
    };
    if diag_zero {
        z.fill_diagonal(0.0);
    }
    z
}

pub(crate) fn ensure_finite(m: &Matrix, what: &str, iteration: usize) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OscError::Divergence {
            iteration,
            detail: format!("{what} contains NaN or infinity"),
        })
    }
}

/// Core loop shared by OSC (group penalty) and SpatSC (elementwise penalty).
///
/// `observer` sees every iterate after its multiplier and μ updates.
pub(crate) fn run_relaxed(
    x: &DataMatrix,
    config: &SolverConfig,
    penalty: DifferencePenalty,
    mut observer: Option<&mut dyn FnMut(&RelaxedState)>,
) -> Result<(RelaxedState, SolveDiagnostics)> {
    let setup = relaxed_setup(x, config)?;
    let RelaxedSetup {
        r,
        r_norm2,
        lipschitz,
        eta_z,
    } = setup;
    let xm = x.values();
    let n = x.samples();

    let mut state = RelaxedState {
        z: initial_z(n, config.init, config.diag_zero),
        j: Matrix::zeros(n, n - 1),
        y: Matrix::from_element(n, n - 1, 1.0),
        mu: config.mu0,
        iteration: 0,
    };
    let mut diag = SolveDiagnostics {
        eta_z,
        eta_j: config.eta_j,
        lipschitz,
        config: config.clone(),
        ..Default::default()
    };
    let additive_step = lipschitz / (eta_z - r_norm2);
    let mut zr = r.right_apply(&state.z);

    for k in 0..config.max_iter {
        let mu = state.mu;

        // Z-step: V = Z + (σ_z + L_z)⁻¹ [Xᵀ(X − XZ) + Ỹ Rᵀ], Ỹ = Y + μ(J − ZR)
        let step = 1.0 / (mu * eta_z + lipschitz);
        let residual = xm - xm * &state.z;
        let mut v = xm.tr_mul(&residual);
        let mut y_tilde = &state.j - &zr;
        y_tilde *= mu;
        y_tilde += &state.y;
        v += r.right_apply_transpose(&y_tilde);
        v *= step;
        v += &state.z;
        let tau = config.lambda1 * step;
        v.apply(|e| *e = shrink(*e, tau));
        if config.diag_zero {
            v.fill_diagonal(0.0);
        }
        let z_new = v;
        ensure_finite(&z_new, "Z", k)?;
        let zr_new = r.right_apply(&z_new);

        // J-step: prox of λ₂·penalty at U = Zᵏ⁺¹R − Y/σ_J
        let sigma_j = mu * config.eta_j;
        let mut j_new = &zr_new - &state.y / sigma_j;
        penalty.prox_in_place(&mut j_new, config.lambda2 / sigma_j);
        ensure_finite(&j_new, "J", k)?;

        let gap = &j_new - &zr_new;
        let feasibility = gap.norm();
        let change = mu * (&z_new - &state.z).norm().max((&j_new - &state.j).norm());
        let converged = feasibility < config.eps1 && change < config.eps2;

        state.y += gap * mu;
        ensure_finite(&state.y, "Y", k)?;
        state.z = z_new;
        state.j = j_new;
        zr = zr_new;
        state.iteration = k + 1;
        state.mu = match config.mu_schedule {
            MuSchedule::Multiplicative => {
                let gamma = if change < config.eps2 { config.gamma0 } else { 1.0 };
                (gamma * mu).min(config.mu_max)
            }
            MuSchedule::Additive => (mu + additive_step).min(config.mu_max),
        };

        diag.feasibility_history.push(feasibility);
        diag.change_history.push(change);
        diag.mu_history.push(mu);
        diag.iterations = k + 1;
        if let Some(obs) = observer.as_deref_mut() {
            obs(&state);
        }
        if converged {
            diag.converged = true;
            break;
        }
    }

    diag.objective_value = 0.5 * (xm - xm * &state.z).norm_squared()
        + config.lambda1 * l1_norm(&state.z)
        + config.lambda2 * penalty.value(&zr);
    Ok((state, diag))
}

/// Solves the relaxed ordered subspace clustering objective.
///
/// Hitting `max_iter` is not an error: the last iterate is returned with
/// `converged = false`. With `monitor_lyapunov` set, the solve is replayed
/// (deterministically) and sᵏ is recorded against the final iterate.
pub fn solve_relaxed(
    x: &DataMatrix,
    config: &SolverConfig,
) -> Result<(CoefficientMatrix, SolveDiagnostics)> {
    let (state, diag) = solve_relaxed_state(x, config)?;
    Ok((CoefficientMatrix::from_trusted(state.z), diag))
}

/// Like [`solve_relaxed`] but returns the full final iterate (Z, J, Y, μ).
pub fn solve_relaxed_state(
    x: &DataMatrix,
    config: &SolverConfig,
) -> Result<(RelaxedState, SolveDiagnostics)> {
    let (state, mut diag) = run_relaxed(x, config, DifferencePenalty::Group, None)?;
    if config.monitor_lyapunov {
        let weights = LyapunovWeights::from_diagnostics(&diag);
        let mut history = Vec::with_capacity(diag.iterations);
        let mut record = |s: &RelaxedState| {
            history.push(
                lyapunov_s(s, &state, &weights).expect("iterates share the reference shape"),
            );
        };
        run_relaxed(x, config, DifferencePenalty::Group, Some(&mut record))?;
        diag.lyapunov_history = Some(history);
    }
    Ok((state, diag))
}

/// Lyapunov quantity
///
/// ```text
/// sᵏ = (η_z + L_z/μᵏ)‖Zᵏ − Z*‖² − ‖(Zᵏ − Z*)R‖² + η_J‖Jᵏ − J*‖² + ‖Yᵏ − Y*‖²/(μᵏ)²
/// ```
///
/// measured against a reference point (Z*, J*, Y*), using μᵏ from `state`.
pub fn lyapunov_s(
    state: &RelaxedState,
    reference: &RelaxedState,
    weights: &LyapunovWeights,
) -> Result<f64> {
    if state.z.shape() != reference.z.shape()
        || state.j.shape() != reference.j.shape()
        || state.y.shape() != reference.y.shape()
    {
        return dim_err("state and reference shapes differ");
    }
    let n = state.z.ncols();
    if state.j.shape() != (n, n.saturating_sub(1)) || state.y.shape() != state.j.shape() {
        return dim_err("J and Y must be N x (N-1)");
    }
    let r = DifferenceOperator::new(n)?;
    let dz = &state.z - &reference.z;
    let dzr = r.right_apply(&dz);
    let mu = state.mu;
    Ok((weights.eta_z + weights.lipschitz / mu) * dz.norm_squared() - dzr.norm_squared()
        + weights.eta_j * (&state.j - &reference.j).norm_squared()
        + (&state.y - &reference.y).norm_squared() / (mu * mu))
}
