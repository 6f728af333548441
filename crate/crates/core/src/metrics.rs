//! Clustering error with optimal label matching, and PSNR.

use std::collections::BTreeMap;

use crate::error::{dim_err, param_err, Result};
use crate::types::DataMatrix;

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials, O(n³)). Returns `assignment[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|row| row.len() == n), "cost matrix must be square");
    // 1-based arrays; index 0 is a virtual column/row.
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] > 0 {
            assignment[matched_row[j] - 1] = j - 1;
        }
    }
    assignment
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    let mapped = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect();
    (mapped, ids.len())
}

/// Subspace clustering error: the fraction of points misclassified under the
/// best one-to-one mapping between predicted and true label names. Points
/// carrying a predicted label left without a partner count as errors.
pub fn sce(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return dim_err(format!(
            "label vectors differ in length: {} vs {}",
            predicted.len(),
            truth.len()
        ));
    }
    if predicted.is_empty() {
        return param_err("cannot score empty label vectors");
    }
    let (p, kp) = compact(predicted);
    let (t, kt) = compact(truth);
    let k = kp.max(kt);
    let mut confusion = vec![vec![0i64; k]; k];
    for (&a, &b) in p.iter().zip(&t) {
        confusion[a][b] += 1;
    }
    let cost: Vec<Vec<i64>> = confusion
        .iter()
        .map(|row| row.iter().map(|&c| -c).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    let matched: i64 = assignment
        .iter()
        .enumerate()
        .map(|(row, &col)| confusion[row][col])
        .sum();
    Ok(1.0 - matched as f64 / predicted.len() as f64)
}

/// Peak signal-to-noise ratio in dB between clean `a` and observed `x`, with
/// the peak taken as the largest entry of `a`. Identical inputs give +∞.
pub fn psnr(a: &DataMatrix, x: &DataMatrix) -> Result<f64> {
    let (av, xv) = (a.values(), x.values());
    if av.shape() != xv.shape() {
        return dim_err(format!("shapes differ: {:?} vs {:?}", av.shape(), xv.shape()));
    }
    let mse = (av - xv).norm_squared() / av.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = av.max();
    Ok(10.0 * (peak * peak / mse).log10())
}
