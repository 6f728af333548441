//! From coefficients to labels: affinity, normalized-cut spectral clustering,
//! cluster-count estimation and boundary detection on consecutive differences.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Result};
use crate::types::{CoefficientMatrix, DifferenceOperator, LabelVector, Matrix};

/// Degree substituted for isolated vertices when normalizing.
pub const ZERO_DEGREE_EPS: f64 = 1e-12;
/// Peak prominence, in standard deviations above the mean difference energy.
pub const PEAK_PROMINENCE: f64 = 1.0;

const KMEANS_MAX_ITER: usize = 300;

/// Symmetric nonnegative similarity graph.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix(Matrix);

impl AffinityMatrix {
    /// Wraps a matrix after checking it is square, symmetric and nonnegative.
    pub fn new(values: Matrix) -> Result<Self> {
        if !values.is_square() {
            return dim_err(format!(
                "affinity must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return param_err("affinity entries must be finite and nonnegative");
        }
        let scale = values.amax().max(1.0);
        if (&values - values.transpose()).amax() > 1e-12 * scale {
            return param_err("affinity must be symmetric");
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.0 * c)
    }
}

/// W = |Z| + |Z|ᵀ.
pub fn build_affinity(z: &CoefficientMatrix) -> AffinityMatrix {
    let a = z.values().abs();
    AffinityMatrix(&a + a.transpose())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// L_n = I − D^{-1/2} W D^{-1/2}
    #[default]
    Normalized,
    /// L = D − W
    Unnormalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NcutOptions {
    pub restarts: usize,
    pub laplacian: LaplacianKind,
}

impl Default for NcutOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            laplacian: LaplacianKind::Normalized,
        }
    }
}

pub fn laplacian(w: &AffinityMatrix, kind: LaplacianKind) -> Matrix {
    let wv = w.values();
    let n = wv.nrows();
    let degrees: Vec<f64> = wv.row_iter().map(|r| r.sum()).collect();
    match kind {
        LaplacianKind::Unnormalized => {
            let mut l = -wv.clone();
            for i in 0..n {
                l[(i, i)] += degrees[i];
            }
            l
        }
        LaplacianKind::Normalized => {
            let inv_sqrt: Vec<f64> = degrees
                .iter()
                .map(|&d| 1.0 / if d > 0.0 { d } else { ZERO_DEGREE_EPS }.sqrt())
                .collect();
            let mut l = Matrix::from_fn(n, n, |i, j| -wv[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
            for i in 0..n {
                l[(i, i)] += 1.0;
            }
            l
        }
    }
}

/// Eigenpairs of a symmetric matrix sorted by ascending eigenvalue.
fn sorted_eigen(m: Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

/// Normalized-cut spectral clustering.
///
/// The k eigenvectors of the smallest Laplacian eigenvalues form an N×k
/// embedding whose rows are scaled to unit length and clustered by k-means
/// with k-means++ seeding. Restarts run in parallel; the lowest inertia wins,
/// ties going to the lowest restart index, so labels depend only on `seed`.
pub fn ncut_cluster(
    w: &AffinityMatrix,
    k: usize,
    seed: u64,
    options: &NcutOptions,
) -> Result<LabelVector> {
    let n = w.size();
    if k == 0 || k > n {
        return param_err(format!("cluster count k = {k} must be in 1..={n}"));
    }
    if k == 1 {
        return LabelVector::new(vec![0; n], 1);
    }
    let (_, vectors) = sorted_eigen(laplacian(w, options.laplacian));
    let mut embedding = vectors.columns(0, k).into_owned();
    for mut row in embedding.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let points: Vec<Vec<f64>> = embedding
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let labels = kmeans(&points, k, seed, options.restarts.max(1));
    LabelVector::new(labels, k)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means with k-means++ seeding; returns the best labels over `restarts`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Vec<usize> {
    let runs: Vec<(f64, Vec<usize>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            kmeans_once(points, k, &mut rng)
        })
        .collect();
    runs.into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.0.total_cmp(&b.0).then(ia.cmp(ib)))
        .map(|(_, (_, labels))| labels)
        .expect("at least one restart")
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[next].clone());
        let c = centers.last().unwrap();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centers
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let dim = points[0].len();
    let mut centers = kmeans_plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (label, p) in labels.iter_mut().zip(points) {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .unwrap();
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(points) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                    })
                    .unwrap();
                centers[c] = points[far].clone();
            }
        }
    }
    let inertia = labels
        .iter()
        .zip(points)
        .map(|(&l, p)| sq_dist(p, &centers[l]))
        .sum();
    (inertia, labels)
}

/// Number of singular values of W strictly above `tau`.
pub fn estimate_k_sv_threshold(w: &AffinityMatrix, tau: f64) -> Result<usize> {
    if !(tau > 0.0) {
        return param_err(format!("threshold must be positive, got {tau}"));
    }
    Ok(w.values().singular_values().iter().filter(|&&s| s > tau).count())
}

/// Largest-gap index (1-based) over a descending sequence; ties go to the
/// smaller index.
pub fn largest_gap_index(descending: &[f64]) -> Result<usize> {
    if descending.len() < 2 {
        return dim_err("need at least two values to find a gap");
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, pair) in descending.windows(2).enumerate() {
        let gap = pair[0] - pair[1];
        if gap > best.1 {
            best = (i, gap);
        }
    }
    Ok(best.0 + 1)
}

/// Eigen-gap estimate: argmaxᵢ (δᵢ − δᵢ₊₁) over the descending eigenvalues of W.
pub fn estimate_k_eigengap(w: &AffinityMatrix) -> Result<usize> {
    if w.size() < 2 {
        return dim_err("eigen-gap needs N >= 2");
    }
    let (mut values, _) = sorted_eigen(w.values().clone());
    values.reverse();
    largest_gap_index(&values)
}

/// SVD-gap estimate: the eigen-gap rule applied to the singular values of W.
pub fn estimate_k_svd_gap(w: &AffinityMatrix) -> Result<usize> {
    if w.size() < 2 {
        return dim_err("SVD-gap needs N >= 2");
    }
    let mut values: Vec<f64> = w.values().singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    largest_gap_index(&values)
}

/// Eigen-gap rule on the spectrum of D^{-1/2} W D^{-1/2} (equivalently, the
/// smallest eigenvalues of the normalized Laplacian).
pub fn estimate_k_laplacian_gap(w: &AffinityMatrix) -> Result<usize> {
    if w.size() < 2 {
        return dim_err("Laplacian gap needs N >= 2");
    }
    let (values, _) = sorted_eigen(laplacian(w, LaplacianKind::Normalized));
    let descending: Vec<f64> = values.iter().map(|l| 1.0 - l).collect();
    largest_gap_index(&descending)
}

/// Segment boundaries from the column means of |ZR|.
///
/// Position i (0-based over the N−1 differences) marks a boundary when its
/// mean is a strict local maximum and at least mean + [`PEAK_PROMINENCE`]·std
/// of all the means. The returned value is the index of the first sample of
/// the new segment, i + 1.
pub fn detect_boundaries_peaks(z: &CoefficientMatrix) -> Result<Vec<usize>> {
    let n = z.size();
    if n < 3 {
        return dim_err("peak detection needs N >= 3");
    }
    let zr = DifferenceOperator::new(n)?.right_apply(z.values());
    let means: Vec<f64> = zr
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>() / n as f64)
        .collect();
    let m = means.len() as f64;
    let avg = means.iter().sum::<f64>() / m;
    let std = (means.iter().map(|b| (b - avg).powi(2)).sum::<f64>() / m).sqrt();
    let threshold = avg + PEAK_PROMINENCE * std;
    let boundaries = (0..means.len())
        .filter(|&i| {
            let left = i == 0 || means[i] > means[i - 1];
            let right = i + 1 == means.len() || means[i] > means[i + 1];
            left && right && means[i] >= threshold
        })
        .map(|i| i + 1)
        .collect();
    Ok(boundaries)
}
