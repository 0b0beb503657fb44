use rand::Rng as _;

use super::ClusterAssignment;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_MAX_ITERS: usize = 300;

/// Full trace of a k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub assignment: ClusterAssignment,
    /// `k x d`, row-major.
    pub centroids: Vec<f64>,
    /// Sum of squared distances to the assigned centroid, recorded after
    /// every centroid update.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_plus_plus(x: &EmbeddingMatrix, k: usize, rng: &mut rng::Rng) -> Vec<usize> {
    let n = x.n();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in closest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just above the final sum.
            pick.unwrap_or_else(|| closest.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            // Every point coincides with a center; fall back to a uniform
            // draw among the points not yet used.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(pick);
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    chosen
}

/// Lloyd iterations from a k-means++ start seeded with `seed`.
pub fn kmeans(x: &EmbeddingMatrix, k: usize, seed: u64, max_iters: usize) -> Result<ClusterAssignment> {
    kmeans_detailed(x, k, seed, max_iters).map(|run| run.assignment)
}

pub fn kmeans_detailed(x: &EmbeddingMatrix, k: usize, seed: u64, max_iters: usize) -> Result<KMeansRun> {
    let (n, d) = (x.n(), x.d());
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut rng = rng::seeded(seed);
    let mut centroids: Vec<f64> = kmeans_plus_plus(x, k, &mut rng)
        .into_iter()
        .flat_map(|i| x.row(i).to_vec())
        .collect();
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let row = x.row(i);
            // A point stays put unless another centroid is strictly closer,
            // so tied points cannot oscillate between clusters.
            let (mut best, mut best_d) = if *label == usize::MAX {
                (0, f64::INFINITY)
            } else {
                (*label, sq_dist(row, &centroids[*label * d..(*label + 1) * d]))
            };
            for (c, centroid) in centroids.chunks_exact(d).enumerate() {
                let dist = sq_dist(row, centroid);
                if dist < best_d {
                    best = c;
                    best_d = dist;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
        if iterations == max_iters {
            repair_empty_clusters(x, &mut labels, &mut centroids, k);
            break;
        }
        iterations += 1;

        repair_empty_clusters(x, &mut labels, &mut centroids, k);
        update_centroids(x, &labels, &mut centroids, k);
        history.push(objective(x, &labels, &centroids));
    }

    Ok(KMeansRun {
        assignment: ClusterAssignment::new(labels, k)?,
        centroids,
        objective_history: history,
        iterations,
        converged,
    })
}

/// Moves, for each empty cluster, the point farthest from its own centroid
/// into that cluster and places the centroid on it.
fn repair_empty_clusters(x: &EmbeddingMatrix, labels: &mut [usize], centroids: &mut [f64], k: usize) {
    let d = x.d();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let dist = sq_dist(x.row(i), &centroids[l * d..(l + 1) * d]);
            if dist > far_d {
                far = Some(i);
                far_d = dist;
            }
        }
        let i = far.expect("k <= n guarantees a cluster with two or more points");
        counts[labels[i]] -= 1;
        labels[i] = empty;
        counts[empty] = 1;
        centroids[empty * d..(empty + 1) * d].copy_from_slice(x.row(i));
    }
}

fn update_centroids(x: &EmbeddingMatrix, labels: &[usize], centroids: &mut [f64], k: usize) {
    let d = x.d();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let inv = counts[c] as f64;
        for (dst, s) in centroids[c * d..(c + 1) * d].iter_mut().zip(&sums[c * d..(c + 1) * d]) {
            *dst = s / inv;
        }
    }
}

fn objective(x: &EmbeddingMatrix, labels: &[usize], centroids: &[f64]) -> f64 {
    let d = x.d();
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(x.row(i), &centroids[l * d..(l + 1) * d]))
        .sum()
}
