//! Kozachenko-Leonenko k-nearest-neighbor entropy estimator.
//!
//! In the Chebyshev norm the estimate reads
//!
//! ```text
//! H_hat = psi(N) - psi(k) + d*ln(2) + (d/N) * sum_i ln(r_i)   [nats]
//! ```
//!
//! where `r_i` is the distance from sample i to its k-th nearest neighbor
//! and `d*ln(2)` is the log-volume of the unit max-norm ball. The estimator
//! is consistent for absolutely continuous densities; exact point
//! collisions (a floating-point artifact under the continuous model) are
//! broken by a deterministic seed-derived jitter before giving up.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{stream_rng, SampleBatch};

use super::kdtree::KdTree;
use super::{digamma, fold_stderr, EntropyEstimate, HyperParams, Method, Points};

/// ChaCha stream reserved for collision-breaking jitter, distinct from the
/// sampling streams of the model.
const JITTER_STREAM: u64 = 6;
const JITTER_SCALE: f64 = 1e-12;

/// Entropy of the joint density of all batch columns, in bits.
pub fn knn_entropy(batch: &SampleBatch, k: usize) -> Result<EntropyEstimate> {
    knn_entropy_points(Points::from_batch(batch), k, batch.seed())
}

pub(crate) fn knn_entropy_points(points: Points, k: usize, seed: u64) -> Result<EntropyEstimate> {
    if k == 0 {
        return Err(Error::invalid("k", "neighbor count must be >= 1"));
    }
    if points.n <= k {
        return Err(Error::BatchTooSmall(format!(
            "k-NN entropy needs more than k = {k} samples, got {}",
            points.n
        )));
    }
    let bits = kl_bits(&points, k, seed)?;
    // Fold estimates need k+2 rows to leave at least one genuine neighbor
    // pair; smaller batches report stderr 0.
    let stderr = fold_stderr(&points, k + 2, |sub| kl_bits(sub, k, seed));
    Ok(EntropyEstimate {
        bits,
        stderr,
        method: Method::Knn,
        n: points.n,
        hyper: HyperParams::Knn { k },
    })
}

fn kl_bits(points: &Points, k: usize, seed: u64) -> Result<f64> {
    match kl_bits_once(points, k) {
        Some(bits) => Ok(bits),
        None => {
            // Exact collisions: perturb by a deterministic jitter scaled to
            // each column and retry once.
            let jittered = jitter(points, seed);
            kl_bits_once(&jittered, k).ok_or_else(|| {
                Error::DegenerateSamples(
                    "duplicate points persist after jitter; the sample set has atoms".to_string(),
                )
            })
        }
    }
}

/// One estimation pass; `None` signals a zero k-th neighbor distance.
fn kl_bits_once(points: &Points, k: usize) -> Option<f64> {
    let tree = KdTree::build(&points.data, points.n, points.d);
    let dists: Vec<f64> = (0..points.n)
        .into_par_iter()
        .map(|i| tree.kth_neighbor_distance(i, k))
        .collect();
    if dists.iter().any(|&r| r <= 0.0) {
        return None;
    }
    let n = points.n as f64;
    let d = points.d as f64;
    let sum_log: f64 = dists.iter().map(|r| r.ln()).sum();
    let nats = digamma(n) - digamma(k as f64) + d * std::f64::consts::LN_2 + d / n * sum_log;
    Some(nats / std::f64::consts::LN_2)
}

fn jitter(points: &Points, seed: u64) -> Points {
    let scales: Vec<f64> = points
        .column_stds()
        .into_iter()
        .map(|s| if s.is_finite() && s > 0.0 { s } else { 1.0 })
        .collect();
    let mut rng = stream_rng(seed, JITTER_STREAM);
    let mut data = points.data.clone();
    for (idx, v) in data.iter_mut().enumerate() {
        let u: f64 = rng.gen_range(-1.0..1.0);
        *v += u * JITTER_SCALE * scales[idx % points.d];
    }
    Points {
        data,
        n: points.n,
        d: points.d,
    }
}
