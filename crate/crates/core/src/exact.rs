//! Linearized ADMM with parallel splitting (LADMPSAP) for the exactly
//! constrained objective
//!
//! ```text
//! min ½‖E‖²_F + λ₁‖Z‖₁ + λ₂‖J‖₁,₂   s.t.  X = XZ + E,  J = ZR
//! ```
//!
//! Z, E and J at iteration k+1 are all computed from iteration-k values, so
//! the three updates run concurrently; the multipliers are updated afterwards
//! from the new primaries.

use crate::error::{param_err, Result};
use crate::linalg::{l12_norm, l1_norm, operator_norm_squared};
use crate::prox::{group_shrink_in_place, ridge_error_unchecked, shrink};
use crate::relaxed::{ensure_finite, initial_z};
use crate::types::{
    CoefficientMatrix, DataMatrix, DifferenceOperator, Matrix, MuSchedule, SolveDiagnostics,
    SolverConfig,
};

/// Iterate of the exact solver.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactState {
    pub z: Matrix,
    pub e: Matrix,
    pub j: Matrix,
    pub y1: Matrix,
    pub y2: Matrix,
    pub mu: f64,
    pub iteration: usize,
}

/// Default η_z (also used as ρ in the stopping rule): 2.04·(‖X‖² + ‖R‖²).
///
/// Z is updated in parallel with the (E, J) pair, so its proximal weight
/// needs twice the block norm; at 1.02·(‖X‖² + ‖R‖²) the iteration diverges
/// on ordinary inputs.
pub fn default_exact_eta_z(r_norm2: f64, lipschitz: f64) -> f64 {
    2.04 * (lipschitz + r_norm2)
}

/// Fixed quantities of one exact solve.
pub struct ExactProblem<'a> {
    x: &'a Matrix,
    r: DifferenceOperator,
    r_norm2: f64,
    eta_z: f64,
    eta_j: f64,
    lambda1: f64,
    lambda2: f64,
    diag_zero: bool,
}

impl<'a> ExactProblem<'a> {
    pub fn new(x: &'a DataMatrix, config: &SolverConfig) -> Result<(Self, f64)> {
        config.validate()?;
        let r = DifferenceOperator::new(x.samples())?;
        let r_norm2 = operator_norm_squared(r.values())?;
        let lipschitz = operator_norm_squared(x.values())?;
        let eta_z = config
            .eta_z
            .unwrap_or_else(|| default_exact_eta_z(r_norm2, lipschitz));
        if eta_z <= lipschitz + r_norm2 {
            return param_err(format!(
                "eta_z ({eta_z}) must exceed ||X||^2 + ||R||^2 ({})",
                lipschitz + r_norm2
            ));
        }
        Ok((
            Self {
                x: x.values(),
                r,
                r_norm2,
                eta_z,
                eta_j: config.eta_j,
                lambda1: config.lambda1,
                lambda2: config.lambda2,
                diag_zero: config.diag_zero,
            },
            lipschitz,
        ))
    }

    /// Computes (Zᵏ⁺¹, Eᵏ⁺¹, Jᵏ⁺¹) from iteration-k values only.
    ///
    /// `xz` is X·Zᵏ and `zr` is ZᵏR, both cached by the caller.
    pub fn primal_step(&self, s: &ExactState, xz: &Matrix, zr: &Matrix) -> (Matrix, Matrix, Matrix) {
        let mu = s.mu;
        let (z_new, (e_new, j_new)) = rayon::join(
            || {
                // ∇F(Z) = Xᵀ(Y₁ + μ(XZ − X + E)) − (Y₂ + μ(J − ZR))Rᵀ
                let mut a = xz - self.x;
                a += &s.e;
                a *= mu;
                a += &s.y1;
                let mut b = &s.j - zr;
                b *= mu;
                b += &s.y2;
                let mut grad = self.x.tr_mul(&a);
                grad -= self.r.right_apply_transpose(&b);
                let sigma = mu * self.eta_z;
                let mut v = &s.z - grad / sigma;
                let tau = self.lambda1 / sigma;
                v.apply(|e| *e = shrink(*e, tau));
                if self.diag_zero {
                    v.fill_diagonal(0.0);
                }
                v
            },
            || {
                rayon::join(
                    || ridge_error_unchecked(&(xz - self.x), &s.y1, mu),
                    || {
                        let sigma_j = mu * self.eta_j;
                        let mut u = zr - &s.y2 / sigma_j;
                        group_shrink_in_place(&mut u, self.lambda2 / sigma_j);
                        u
                    },
                )
            },
        );
        (z_new, e_new, j_new)
    }
}

/// Solves the exactly constrained ordered subspace clustering objective.
pub fn solve_exact(
    x: &DataMatrix,
    config: &SolverConfig,
) -> Result<(CoefficientMatrix, SolveDiagnostics)> {
    let (state, diag) = solve_exact_state(x, config)?;
    Ok((CoefficientMatrix::from_trusted(state.z), diag))
}

/// Like [`solve_exact`] but returns the full final iterate.
pub fn solve_exact_state(
    x: &DataMatrix,
    config: &SolverConfig,
) -> Result<(ExactState, SolveDiagnostics)> {
    let (problem, lipschitz) = ExactProblem::new(x, config)?;
    let xm = x.values();
    let (d, n) = xm.shape();
    let rho = problem.eta_z;
    let x_norm = xm.norm();
    // Scale of the normalized criteria; an all-zero X is already solved by Z = 0.
    let scale = if x_norm > 0.0 { x_norm } else { 1.0 };
    let r = &problem.r;

    let mut s = ExactState {
        z: initial_z(n, config.init, config.diag_zero),
        e: Matrix::zeros(d, n),
        j: Matrix::zeros(n, n - 1),
        y1: Matrix::from_element(d, n, 1.0),
        y2: Matrix::from_element(n, n - 1, 1.0),
        mu: config.mu0,
        iteration: 0,
    };
    let mut diag = SolveDiagnostics {
        eta_z: problem.eta_z,
        eta_j: config.eta_j,
        lipschitz,
        config: config.clone(),
        ..Default::default()
    };
    let additive_step = lipschitz / (problem.eta_z - problem.r_norm2);
    let mut xz = xm * &s.z;
    let mut zr = r.right_apply(&s.z);

    for k in 0..config.max_iter {
        let mu = s.mu;
        let (z_new, e_new, j_new) = problem.primal_step(&s, &xz, &zr);
        ensure_finite(&z_new, "Z", k)?;
        ensure_finite(&e_new, "E", k)?;
        ensure_finite(&j_new, "J", k)?;
        let xz_new = xm * &z_new;
        let zr_new = r.right_apply(&z_new);

        let mut fit = &xz_new - xm;
        fit += &e_new;
        let gap = &j_new - &zr_new;
        let fit_res = fit.norm() / scale;
        let gap_res = gap.norm() / scale;
        let step = (&z_new - &s.z)
            .norm()
            .max((&e_new - &s.e).norm())
            .max((&j_new - &s.j).norm())
            .max((&zr_new - &zr).norm());
        let change = mu * rho.sqrt() / scale * step;
        let converged = fit_res < config.eps1 && gap_res < config.eps1 && change < config.eps2;

        s.y1 += fit * mu;
        s.y2 += gap * mu;
        ensure_finite(&s.y1, "Y1", k)?;
        ensure_finite(&s.y2, "Y2", k)?;
        s.z = z_new;
        s.e = e_new;
        s.j = j_new;
        xz = xz_new;
        zr = zr_new;
        s.iteration = k + 1;
        s.mu = match config.mu_schedule {
            MuSchedule::Multiplicative => {
                let gamma = if change < config.eps2 { config.gamma0 } else { 1.0 };
                (gamma * mu).min(config.mu_max)
            }
            MuSchedule::Additive => (mu + additive_step).min(config.mu_max),
        };

        diag.feasibility_history.push(fit_res.max(gap_res));
        diag.change_history.push(change);
        diag.mu_history.push(mu);
        diag.iterations = k + 1;
        if converged {
            diag.converged = true;
            break;
        }
    }

    diag.objective_value = 0.5 * (xm - &xz).norm_squared()
        + config.lambda1 * l1_norm(&s.z)
        + config.lambda2 * l12_norm(&zr);
    Ok((s, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::OscError;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(d: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(Matrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0)))
            .unwrap()
            .normalized_columns()
    }

    #[test]
    fn large_lambda1_forces_error_to_absorb_data() {
        let x = data(6, 8, 1);
        let g = x.values().tr_mul(x.values());
        let config = SolverConfig {
            lambda1: 10.0 * g.amax() + 1.0,
            lambda2: 0.0,
            ..Default::default()
        };
        let (state, diag) = solve_exact_state(&x, &config).unwrap();
        assert!(diag.converged);
        assert!(state.z.amax() < 1e-6);
        let fit = x.values() * &state.z - x.values() + &state.e;
        assert!(fit.norm() < config.eps1 * x.values().norm());
        assert!((&state.e - x.values()).amax() < 1e-3);
    }

    #[test]
    fn converged_flag_implies_normalized_residuals() {
        let x = data(5, 12, 2);
        let config = SolverConfig::default();
        let (state, diag) = solve_exact_state(&x, &config).unwrap();
        assert!(diag.converged, "iterations = {}", diag.iterations);
        let xn = x.values().norm();
        let r = DifferenceOperator::new(12).unwrap();
        let fit = x.values() * &state.z - x.values() + &state.e;
        assert!(fit.norm() / xn < config.eps1);
        assert!((&state.j - r.right_apply(&state.z)).norm() / xn < config.eps1);
        assert!(diag.mu_history.windows(2).all(|w| w[0] <= w[1]));
        assert!(diag.mu_history.iter().all(|&m| m <= config.mu_max));
    }

    #[test]
    fn parallel_step_reads_only_previous_iterate() {
        let x = data(5, 9, 3);
        let config = SolverConfig {
            max_iter: 7,
            ..Default::default()
        };
        let (state, _) = solve_exact_state(&x, &config).unwrap();
        let (next, _) = solve_exact_state(
            &x,
            &SolverConfig {
                max_iter: 8,
                ..config.clone()
            },
        )
        .unwrap();
        assert_eq!(next.iteration, 8);
        let (problem, _) = ExactProblem::new(&x, &config).unwrap();
        let xz = x.values() * &state.z;
        let zr = problem.r.right_apply(&state.z);
        let (z, e, j) = problem.primal_step(&state, &xz, &zr);
        assert_eq!((z, e, j), (next.z, next.e, next.j));
    }

    #[test]
    fn small_eta_z_is_rejected() {
        let x = data(4, 6, 4);
        let config = SolverConfig {
            eta_z: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            solve_exact(&x, &config),
            Err(OscError::InvalidParameter(_))
        ));
    }
}
