//! Scratch probe: candidate bias fixes at d=1..4, N=2e4.
//! 1. Kozachenko-Leonenko with Euclidean norm instead of max norm.
//! 2. KDE with a delta-method (Jensen) correction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn digamma(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut x = x;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0)))
}

fn ln_unit_ball_l2(d: usize) -> f64 {
    // pi^(d/2) / Gamma(d/2 + 1)
    match d {
        1 => (2.0f64).ln(),
        2 => std::f64::consts::PI.ln(),
        3 => (4.0 * std::f64::consts::PI / 3.0).ln(),
        4 => (std::f64::consts::PI * std::f64::consts::PI / 2.0).ln(),
        _ => unreachable!(),
    }
}

fn kl_l2(data: &[f64], n: usize, d: usize, k: usize) -> f64 {
    let mut sum_log = 0.0;
    let mut dists = vec![0.0f64; n];
    for i in 0..n {
        let xi = &data[i * d..(i + 1) * d];
        let mut m = 0usize;
        for j in 0..n {
            if j == i {
                continue;
            }
            let xj = &data[j * d..(j + 1) * d];
            let mut sq = 0.0;
            for t in 0..d {
                let v = xi[t] - xj[t];
                sq += v * v;
            }
            dists[m] = sq;
            m += 1;
        }
        dists[..m].select_nth_unstable_by(k - 1, f64::total_cmp);
        sum_log += dists[k - 1].sqrt().ln();
    }
    let nf = n as f64;
    let nats = digamma(nf) - digamma(k as f64) + ln_unit_ball_l2(d) + d as f64 / nf * sum_log;
    nats / std::f64::consts::LN_2
}

/// LOO Gaussian product KDE with optional Jensen correction.
fn kde(data: &[f64], n: usize, d: usize, correct: bool) -> f64 {
    // per-dim silverman
    let mut h = vec![0.0; d];
    for j in 0..d {
        let mean = (0..n).map(|i| data[i * d + j]).sum::<f64>() / n as f64;
        let var =
            (0..n).map(|i| (data[i * d + j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        h[j] = var.sqrt() * (4.0 / ((d as f64 + 2.0) * n as f64)).powf(1.0 / (d as f64 + 4.0));
    }
    let scaled: Vec<f64> = data
        .iter()
        .enumerate()
        .map(|(idx, v)| v / h[idx % d])
        .collect();
    let log_norm = -((n - 1) as f64).ln()
        - h.iter().map(|v| v.ln()).sum::<f64>()
        - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln();

    let mut scratch = vec![0.0f64; n];
    let mut total = 0.0;
    let mut jensen = 0.0;
    for i in 0..n {
        let xi = &scaled[i * d..(i + 1) * d];
        for j in 0..n {
            let xj = &scaled[j * d..(j + 1) * d];
            let mut sq = 0.0;
            for t in 0..d {
                let v = xi[t] - xj[t];
                sq += v * v;
            }
            scratch[j] = -0.5 * sq;
        }
        scratch[i] = f64::NEG_INFINITY;
        let peak = scratch.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for &e in &scratch {
            let t = e - peak;
            if t > -40.0 {
                let w = t.exp();
                acc += w;
                acc2 += w * w;
            }
        }
        total += peak + acc.ln() + log_norm;
        // Var(mean of K) / mean(K)^2 = (1/(N-1)) * Var_j(K)/mean^2
        let m1 = acc / (n - 1) as f64;
        let m2 = acc2 / (n - 1) as f64;
        let rel_var = (m2 - m1 * m1) / ((n - 1) as f64 * m1 * m1);
        jensen += rel_var / 2.0;
    }
    let mut nats = -total / n as f64;
    if correct {
        nats -= jensen / n as f64;
    }
    nats / std::f64::consts::LN_2
}

fn main() {
    let n = 20_000;
    let k = 4;
    let half_log2_2pe = 2.047095585180641;
    for d in 1..=4usize {
        let truth = d as f64 * half_log2_2pe;
        let (mut e_l2, mut e_kde, mut e_kdec) = (vec![], vec![], vec![]);
        for seed in 0..6u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(33 + seed);
            let data: Vec<f64> = (0..n * d)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            e_l2.push(kl_l2(&data, n, d, k) - truth);
            e_kde.push(kde(&data, n, d, false) - truth);
            e_kdec.push(kde(&data, n, d, true) - truth);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "d={d}: KL-L2 bias {:+.4} | KDE raw {:+.4} | KDE jensen-corrected {:+.4}",
            mean(&e_l2),
            mean(&e_kde),
            mean(&e_kdec)
        );
    }
}
