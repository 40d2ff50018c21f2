//! Scratch probe: d=4 estimator bias vs covariance conditioning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use reflectkey::estimators::oracle::sample_gaussian_batch;
use reflectkey::estimators::{kde_entropy, knn_entropy, Bandwidth};
use reflectkey::gauss::{gaussian_entropy, CovarianceMatrix};
use reflectkey::model::Observation;

fn run_ensemble(name: &str, n: usize, seeds: u64, cov_fn: impl Fn(&mut ChaCha8Rng) -> Vec<f64>) {
    let d = 4;
    let (mut knn_err, mut kde_err) = (vec![], vec![]);
    let (mut knn_se, mut kde_se) = (vec![], vec![]);
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let m = cov_fn(&mut rng);
        let cov = CovarianceMatrix::new(Observation::ALL[..d].to_vec(), m).unwrap();
        let truth = gaussian_entropy(&cov).unwrap();
        let batch = sample_gaussian_batch(&cov, n, &mut rng, seed).unwrap();
        let knn = knn_entropy(&batch, 4).unwrap();
        let kde = kde_entropy(&batch, Bandwidth::Silverman).unwrap();
        knn_err.push(knn.bits - truth);
        kde_err.push(kde.bits - truth);
        knn_se.push(knn.stderr);
        kde_se.push(kde.stderr);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "{name:<28} knn bias {:+.4} (se~{:.4})  kde bias {:+.4} (se~{:.4})",
        mean(&knn_err),
        mean(&knn_se),
        mean(&kde_err),
        mean(&kde_se)
    );
}

fn main() {
    let n = 20_000;
    let d = 4usize;

    run_ensemble("isotropic identity", n, 8, |_| {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        m
    });

    run_ensemble("diagonal scales [0.5,2]", n, 8, |rng| {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = rng.gen_range(0.5..2.0);
        }
        m
    });

    run_ensemble("corr 0.6 chain, unit var", n, 8, |_| {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = 0.6f64.powi((i as i32 - j as i32).abs());
            }
        }
        m
    });

    run_ensemble("wishart dof 40 mild", n, 8, |rng| {
        let dof = 40;
        let a: Vec<f64> = (0..d * dof).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                w[i * d + j] = (0..dof).map(|k| a[i * dof + k] * a[j * dof + k]).sum();
            }
        }
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = w[i * d + j] / (w[i * d + i] * w[j * d + j]).sqrt();
            }
        }
        for i in 0..d {
            m[i * d + i] = 1.0;
            for j in 0..i {
                m[i * d + j] = m[j * d + i];
            }
        }
        m
    });
}
