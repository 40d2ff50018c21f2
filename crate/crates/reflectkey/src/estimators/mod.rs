//! Nonparametric differential-entropy estimation.
//!
//! The reflection products make the joint observation densities
//! non-Gaussian, so the entropy terms of the rate bounds are estimated from
//! samples. Two estimators are provided: a Kozachenko-Leonenko k-nearest-
//! neighbor estimator (the primary one) and a leave-one-out Gaussian-kernel
//! resubstitution estimator (an independent cross-check). Standard errors
//! come from 10-fold disjoint subsample resampling in both cases.

mod kde;
mod kdtree;
mod knn;
pub mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Observation, SampleBatch};

pub use kde::{kde_entropy, Bandwidth};
pub use knn::knn_entropy;

/// Which estimator produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Knn,
    Kde,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::Kde => "kde",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(Method::Knn),
            "kde" => Ok(Method::Kde),
            other => Err(Error::config(
                "method",
                format!("unknown estimator `{other}` (expected knn or kde)"),
            )),
        }
    }
}

/// Hyperparameters the estimate was computed with, for provenance.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperParams {
    Knn { k: usize },
    /// Resolved per-dimension kernel bandwidths.
    Kde { bandwidths: Vec<f64> },
}

/// A differential-entropy estimate in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub bits: f64,
    /// Standard error from 10-fold subsample resampling; 0 when the batch is
    /// too small to fold.
    pub stderr: f64,
    pub method: Method,
    pub n: usize,
    pub hyper: HyperParams,
}

/// Estimator settings shared by the bound assembly and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub k: usize,
    pub bandwidth: Bandwidth,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            k: 4,
            bandwidth: Bandwidth::Silverman,
        }
    }
}

/// Projects `cols` out of the batch and dispatches to the chosen estimator.
pub fn estimate_joint_entropy(
    batch: &SampleBatch,
    cols: &[Observation],
    method: Method,
    config: &EstimatorConfig,
) -> Result<EntropyEstimate> {
    let projected = batch.project(cols)?;
    match method {
        Method::Knn => knn_entropy(&projected, config.k),
        Method::Kde => kde_entropy(&projected, config.bandwidth),
    }
}

const NUM_FOLDS: usize = 10;

/// Row-major point set the estimator cores operate on.
pub(crate) struct Points {
    pub(crate) data: Vec<f64>,
    pub(crate) n: usize,
    pub(crate) d: usize,
}

impl Points {
    pub(crate) fn from_batch(batch: &SampleBatch) -> Points {
        Points {
            data: batch.data().to_vec(),
            n: batch.n_rows(),
            d: batch.n_cols(),
        }
    }

    pub(crate) fn fold(&self, f: usize) -> Points {
        let mut data = Vec::with_capacity((self.n / NUM_FOLDS + 1) * self.d);
        let mut n = 0;
        for i in (f..self.n).step_by(NUM_FOLDS) {
            data.extend_from_slice(&self.data[i * self.d..(i + 1) * self.d]);
            n += 1;
        }
        Points { data, n, d: self.d }
    }

    pub(crate) fn column_stds(&self) -> Vec<f64> {
        (0..self.d)
            .map(|j| {
                let mean = (0..self.n).map(|i| self.data[i * self.d + j]).sum::<f64>()
                    / self.n as f64;
                let ss = (0..self.n)
                    .map(|i| {
                        let v = self.data[i * self.d + j] - mean;
                        v * v
                    })
                    .sum::<f64>();
                (ss / (self.n - 1).max(1) as f64).sqrt()
            })
            .collect()
    }
}

/// Fold estimates for the standard error. Folds that are too small or fail
/// are skipped; with fewer than two usable folds the stderr degrades to 0.
pub(crate) fn fold_stderr<F>(points: &Points, min_fold_rows: usize, estimate: F) -> f64
where
    F: Fn(&Points) -> Result<f64>,
{
    let mut folds = Vec::with_capacity(NUM_FOLDS);
    for f in 0..NUM_FOLDS {
        let sub = points.fold(f);
        if sub.n < min_fold_rows {
            continue;
        }
        if let Ok(v) = estimate(&sub) {
            folds.push(v);
        }
    }
    if folds.len() < 2 {
        return 0.0;
    }
    let m = folds.iter().sum::<f64>() / folds.len() as f64;
    let var = folds.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (folds.len() - 1) as f64;
    (var / folds.len() as f64).sqrt()
}

/// Digamma function for positive arguments: upward recurrence into the
/// asymptotic region, then the standard series in 1/x^2.
pub(crate) fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    let mut x = x;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0)))
}
