//! Gaussian oracle suite for the entropy estimators.
//!
//! Gaussians are the one family where the true differential entropy has a
//! closed form at any dimension, so they make an exact yardstick: sample
//! from a random SPD covariance, estimate the entropy nonparametrically and
//! compare against the log-det value. The suite drives both the
//! `validate-estimators` CLI subcommand and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::estimators::{kde_entropy, knn_entropy, Bandwidth, EntropyEstimate, Method};
use crate::gauss::{gaussian_entropy, CovarianceMatrix};
use crate::model::{Observation, SampleBatch};

#[derive(Debug, Clone)]
pub struct OracleSettings {
    /// Seeded cases per estimator; dimensions cycle through 1..=4.
    pub cases: usize,
    /// Samples per case.
    pub n: usize,
    /// Neighbor count for the k-NN estimator.
    pub k: usize,
    pub seed: u64,
    /// Pass when |estimate - truth| <= tol_stderr_mult * stderr.
    pub tol_stderr_mult: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            cases: 20,
            n: 20_000,
            k: 4,
            seed: 0x0c1e_57a7,
            tol_stderr_mult: 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleCase {
    pub case: usize,
    pub dim: usize,
    pub method: Method,
    pub truth_bits: f64,
    pub estimate: EntropyEstimate,
    pub pass: bool,
}

impl OracleCase {
    pub fn error_bits(&self) -> f64 {
        self.estimate.bits - self.truth_bits
    }
}

/// Runs every case with both estimators against the closed form.
pub fn gaussian_oracle_suite(settings: &OracleSettings) -> Result<Vec<OracleCase>> {
    let mut out = Vec::with_capacity(2 * settings.cases);
    for case in 0..settings.cases {
        let dim = case % 4 + 1;
        let case_seed = settings.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(case as u64 + 1));
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let cov = random_spd_covariance(dim, &mut rng)?;
        let truth_bits = gaussian_entropy(&cov)?;
        let batch = sample_gaussian_batch(&cov, settings.n, &mut rng, case_seed)?;

        for method in [Method::Knn, Method::Kde] {
            let estimate = match method {
                Method::Knn => knn_entropy(&batch, settings.k)?,
                Method::Kde => kde_entropy(&batch, Bandwidth::Silverman)?,
            };
            let pass = (estimate.bits - truth_bits).abs()
                <= settings.tol_stderr_mult * estimate.stderr;
            out.push(OracleCase {
                case,
                dim,
                method,
                truth_bits,
                estimate,
                pass,
            });
        }
    }
    Ok(out)
}

/// Random SPD covariance: a Wishart-style correlation skeleton rescaled by
/// random per-dimension variances in [0.5, 2].
pub fn random_spd_covariance(dim: usize, rng: &mut ChaCha8Rng) -> Result<CovarianceMatrix> {
    let dof = dim + 3;
    let a: Vec<f64> = (0..dim * dof).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut w = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            w[i * dim + j] = (0..dof).map(|k| a[i * dof + k] * a[j * dof + k]).sum();
        }
    }
    let scales: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..2.0)).collect();
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let corr = w[i * dim + j] / (w[i * dim + i] * w[j * dim + j]).sqrt();
            m[i * dim + j] = corr * (scales[i] * scales[j]).sqrt();
        }
    }
    // Exact symmetry despite floating-point summation order.
    for i in 0..dim {
        m[i * dim + i] = scales[i];
        for j in 0..i {
            m[i * dim + j] = m[j * dim + i];
        }
    }
    CovarianceMatrix::new(Observation::ALL[..dim].to_vec(), m)
}

/// Draws `n` points from N(0, cov) through the Cholesky factor.
pub fn sample_gaussian_batch(
    cov: &CovarianceMatrix,
    n: usize,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<SampleBatch> {
    let d = cov.dim();
    let l = cov.cholesky()?;
    let mut data = Vec::with_capacity(n * d);
    let mut z = vec![0.0; d];
    for _ in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut v = 0.0;
            for j in 0..=i {
                v += l[i * d + j] * z[j];
            }
            data.push(v);
        }
    }
    SampleBatch::from_rows(cov.labels().to_vec(), data, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_covariances_are_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 1..=4 {
            for _ in 0..20 {
                let cov = random_spd_covariance(dim, &mut rng).unwrap();
                assert!(cov.log2_det().is_ok(), "dim {dim} produced a non-PD draw");
            }
        }
    }

    #[test]
    fn sampled_batch_matches_covariance_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cov = random_spd_covariance(3, &mut rng).unwrap();
        let batch = sample_gaussian_batch(&cov, 50_000, &mut rng, 5).unwrap();
        for (j, obs) in batch.columns().to_vec().iter().enumerate() {
            let col = batch.column_values(*obs).unwrap();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var =
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(
                (var - cov.get(j, j)).abs() < 0.1 * cov.get(j, j),
                "column {j}: {var} vs {}",
                cov.get(j, j)
            );
        }
    }
}
