//! Sequential union-of-subspaces generators and PSNR-calibrated noise.
//!
//! Every random draw comes from a ChaCha stream selected by purpose, so the
//! basis, the rotation and each subspace's coefficients are independent and
//! reproducible from a single seed.

use nalgebra::{Cholesky, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::metrics::psnr;
use crate::types::{DataMatrix, LabelVector, Matrix};

/// Number of library spectra drawn as the basis of each semi-synthetic subspace.
pub const SEMISYNTHETIC_BASIS_SIZE: usize = 5;

const STREAM_BASIS: u64 = 0;
const STREAM_ROTATION: u64 = 1;
const STREAM_SELECTION: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_COEFFS: u64 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub num_subspaces: usize,
    pub points_per_subspace: usize,
    pub ambient_dim: usize,
    pub subspace_dim: usize,
    /// Variance of each coefficient.
    pub cov_diag: f64,
    /// Covariance between coefficients of temporally adjacent samples.
    pub cov_offdiag: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_subspaces: 5,
            points_per_subspace: 20,
            ambient_dim: 100,
            subspace_dim: 4,
            cov_diag: 0.001,
            cov_offdiag: 0.0005,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn total_points(&self) -> usize {
        self.num_subspaces * self.points_per_subspace
    }

    fn validate_common(&self) -> Result<()> {
        if self.num_subspaces == 0 || self.points_per_subspace == 0 {
            return param_err("need at least one subspace with at least one point");
        }
        if self.total_points() < 2 {
            return param_err("need at least two samples in total");
        }
        if !(self.cov_diag > 0.0 && self.cov_diag.is_finite()) || !self.cov_offdiag.is_finite() {
            return param_err("covariance entries must be finite with a positive diagonal");
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if self.subspace_dim == 0 || self.subspace_dim > self.ambient_dim {
            return param_err(format!(
                "subspace_dim ({}) must be in 1..=ambient_dim ({})",
                self.subspace_dim, self.ambient_dim
            ));
        }
        Ok(())
    }

    /// Tridiagonal temporal covariance C over the samples of one subspace.
    pub fn covariance(&self) -> Matrix {
        let m = self.points_per_subspace;
        Matrix::from_fn(m, m, |i, j| {
            if i == j {
                self.cov_diag
            } else if i.abs_diff(j) == 1 {
                self.cov_offdiag
            } else {
                0.0
            }
        })
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthonormal `rows × cols` basis from the QR factorization of a Gaussian
/// matrix, with column signs fixed so R has a positive diagonal.
pub fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let g = gaussian_matrix(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for (c, mut col) in q.column_iter_mut().enumerate() {
        if r[(c, c)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// Random rotation (orthogonal with determinant +1).
pub fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut q = random_orthonormal(rng, n, n);
    if q.clone().lu().determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Draws a `rows × m` matrix whose rows are independent N(0, C) vectors.
pub fn sample_correlated_rows(rng: &mut ChaCha8Rng, rows: usize, cov: &Matrix) -> Result<Matrix> {
    let m = cov.nrows();
    let Some(chol) = Cholesky::new(cov.clone()) else {
        return param_err("coefficient covariance is not positive definite");
    };
    let l = chol.l();
    let mut out = Matrix::zeros(rows, m);
    for r in 0..rows {
        let g = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
        out.row_mut(r).tr_copy_from(&(&l * g));
    }
    Ok(out)
}

fn contiguous_labels(k: usize, m: usize) -> LabelVector {
    LabelVector::from_labels((0..k).flat_map(|i| std::iter::repeat_n(i, m)).collect())
}

fn assemble(bases: &[Matrix], spec: &SyntheticSpec) -> Result<(DataMatrix, LabelVector)> {
    let cov = spec.covariance();
    let m = spec.points_per_subspace;
    let dim = bases[0].nrows();
    let mut x = Matrix::zeros(dim, spec.total_points());
    for (i, u) in bases.iter().enumerate() {
        let mut rng = stream(spec.seed, STREAM_COEFFS + i as u64);
        let q = sample_correlated_rows(&mut rng, u.ncols(), &cov)?;
        x.columns_mut(i * m, m).copy_from(&(u * q));
    }
    Ok((
        DataMatrix::new(x)?,
        contiguous_labels(spec.num_subspaces, m),
    ))
}

/// Synthetic data: U₁ is a random orthonormal basis, U_{i+1} = T·Uᵢ for one
/// random rotation T, and subspace i contributes Xᵢ = UᵢQᵢ whose coefficient
/// rows have the temporal covariance C.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(DataMatrix, LabelVector)> {
    let (x, labels, _) = generate_synthetic_with_bases(spec)?;
    Ok((x, labels))
}

/// [`generate_synthetic`] that also returns the subspace bases.
pub fn generate_synthetic_with_bases(
    spec: &SyntheticSpec,
) -> Result<(DataMatrix, LabelVector, Vec<Matrix>)> {
    spec.validate()?;
    let u1 = random_orthonormal(
        &mut stream(spec.seed, STREAM_BASIS),
        spec.ambient_dim,
        spec.subspace_dim,
    );
    let t = random_rotation(&mut stream(spec.seed, STREAM_ROTATION), spec.ambient_dim);
    let mut bases = vec![u1];
    for i in 1..spec.num_subspaces {
        let next = &t * &bases[i - 1];
        bases.push(next);
    }
    let (x, labels) = assemble(&bases, spec)?;
    Ok((x, labels, bases))
}

/// Semi-synthetic data: each subspace is spanned by
/// [`SEMISYNTHETIC_BASIS_SIZE`] distinct library columns chosen at random.
/// `ambient_dim` and `subspace_dim` of `spec` are ignored; the output has as
/// many rows as the library.
pub fn generate_semisynthetic(
    library: &DataMatrix,
    spec: &SyntheticSpec,
) -> Result<(DataMatrix, LabelVector)> {
    spec.validate_common()?;
    let needed = SEMISYNTHETIC_BASIS_SIZE * spec.num_subspaces;
    if library.samples() < needed {
        return param_err(format!(
            "library has {} spectra but {} subspaces need {needed}",
            library.samples(),
            spec.num_subspaces
        ));
    }
    let mut order: Vec<usize> = (0..library.samples()).collect();
    order.shuffle(&mut stream(spec.seed, STREAM_SELECTION));
    let lib = library.values();
    let bases: Vec<Matrix> = order[..needed]
        .chunks(SEMISYNTHETIC_BASIS_SIZE)
        .map(|idx| lib.select_columns(idx))
        .collect();
    assemble(&bases, spec)
}

/// Adds Gaussian noise scaled so that PSNR(A, A + noise) equals the target.
///
/// The peak is the largest entry of A. The scale is solved from the realized
/// noise energy, so the measured PSNR matches the target up to rounding.
pub fn add_noise_psnr(a: &DataMatrix, target_psnr_db: f64, seed: u64) -> Result<DataMatrix> {
    if !(target_psnr_db > 0.0) || target_psnr_db.is_nan() {
        return param_err(format!("target PSNR must be positive, got {target_psnr_db} dB"));
    }
    let av = a.values();
    let peak = av.max();
    if peak == av.min() {
        return param_err("cannot calibrate PSNR noise on constant data");
    }
    if !(peak > 0.0) {
        return param_err("PSNR needs a positive peak value in the clean data");
    }
    if target_psnr_db.is_infinite() {
        return Ok(a.clone());
    }
    let noise = gaussian_matrix(&mut stream(seed, STREAM_NOISE), av.nrows(), av.ncols());
    let energy = noise.norm_squared() / av.len() as f64;
    let target_mse = peak * peak / 10f64.powf(target_psnr_db / 10.0);
    let scale = (target_mse / energy).sqrt();
    let x = DataMatrix::new(av + noise * scale)?;
    debug_assert!((psnr(a, &x)? - target_psnr_db).abs() < 1e-6);
    Ok(x)
}
