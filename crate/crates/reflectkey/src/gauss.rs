//! Exact covariance construction and closed-form Gaussian information
//! quantities for (conditionally) Gaussian observation subsets.
//!
//! Once Eve's channel coefficients are pinned, the joint observation vector
//! is multivariate Gaussian and every entropy term reduces to a log-det.
//! Determinants are accumulated in the log domain through a Cholesky
//! factorization, which stays well conditioned even as `rho_ab -> 1` (the
//! per-observation noise floor of 1 keeps every covariance strictly
//! positive definite).

use crate::error::{Error, Result};
use crate::model::{ModelParams, Observation};

/// log2(2*pi*e), the per-dimension constant of Gaussian differential entropy.
pub const LOG2_2PI_E: f64 = 4.094191170361282;

/// Mutual-information values more negative than this are treated as real
/// errors rather than floating-point cancellation noise.
pub const MI_CLAMP_TOL: f64 = 1e-9;

/// Symmetric covariance over a named subset of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    labels: Vec<Observation>,
    m: Vec<f64>,
}

impl CovarianceMatrix {
    /// Wraps a row-major `d x d` matrix. Rejects asymmetry beyond 1e-12
    /// relative tolerance and repeated labels.
    pub fn new(labels: Vec<Observation>, m: Vec<f64>) -> Result<Self> {
        let d = labels.len();
        if d == 0 {
            return Err(Error::invalid("labels", "covariance needs at least one label"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::invalid("labels", format!("duplicate label {l}")));
            }
        }
        if m.len() != d * d {
            return Err(Error::invalid(
                "m",
                format!("expected {}x{} entries, got {}", d, d, m.len()),
            ));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let (a, b) = (m[i * d + j], m[j * d + i]);
                let scale = a.abs().max(b.abs()).max(1.0);
                if !a.is_finite() || !b.is_finite() || (a - b).abs() > 1e-12 * scale {
                    return Err(Error::invalid(
                        "m",
                        format!("asymmetric at ({i},{j}): {a} vs {b}"),
                    ));
                }
            }
        }
        Ok(CovarianceMatrix { labels, m })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Observation] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.dim() + j]
    }

    /// Principal submatrix over `subset`, in the given order.
    pub fn submatrix(&self, subset: &[Observation]) -> Result<CovarianceMatrix> {
        let idx: Vec<usize> = subset
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::UnknownLabel(l.name().to_string()))
            })
            .collect::<Result<_>>()?;
        let d = idx.len();
        let mut m = Vec::with_capacity(d * d);
        for &i in &idx {
            for &j in &idx {
                m.push(self.get(i, j));
            }
        }
        CovarianceMatrix::new(subset.to_vec(), m)
    }

    /// log2 of the determinant via Cholesky, accumulated in the log domain.
    pub fn log2_det(&self) -> Result<f64> {
        let d = self.dim();
        let l = cholesky_lower(&self.m, d)?;
        Ok((0..d).map(|j| 2.0 * l[j * d + j].log2()).sum())
    }

    /// Lower Cholesky factor, row-major; errors when not positive definite.
    pub fn cholesky(&self) -> Result<Vec<f64>> {
        cholesky_lower(&self.m, self.dim())
    }
}

/// Lower-triangular Cholesky factor of a row-major symmetric matrix.
pub(crate) fn cholesky_lower(m: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut pivot = m[j * d + j];
        for k in 0..j {
            pivot -= l[j * d + k] * l[j * d + k];
        }
        if pivot <= 0.0 || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[j * d + j] = ljj;
        for i in (j + 1)..d {
            let mut v = m[i * d + j];
            for k in 0..j {
                v -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = v / ljj;
        }
    }
    Ok(l)
}

/// Exact covariance of `subset` conditioned on Eve's coefficients
/// (h_AE, h_BE) = (h_ae, h_be).
pub fn build_conditional_covariance(
    params: &ModelParams,
    h_ae: f64,
    h_be: f64,
    subset: &[Observation],
) -> Result<CovarianceMatrix> {
    params.validate()?;
    if subset.is_empty() {
        return Err(Error::invalid("subset", "need at least one observation"));
    }
    let s = params.sigma2;
    let rho = params.rho_ab;
    let a = params.alpha;

    let full = full_conditional_covariance(s, rho, a, h_ae, h_be);
    let all = CovarianceMatrix::new(Observation::ALL.to_vec(), full.to_vec())?;
    all.submatrix(subset)
}

fn full_conditional_covariance(s: f64, rho: f64, a: f64, h_ae: f64, h_be: f64) -> [f64; 16] {
    // Order: y_A, y_B, y_E3, y_E4.
    [
        s + 1.0,
        rho * s,
        a * h_ae * s,
        a * h_be * rho * s,
        rho * s,
        s + 1.0,
        a * h_ae * rho * s,
        a * h_be * s,
        a * h_ae * s,
        a * h_ae * rho * s,
        a * a * h_ae * h_ae * s + 1.0,
        a * a * h_ae * h_be * rho * s,
        a * h_be * rho * s,
        a * h_be * s,
        a * a * h_ae * h_be * rho * s,
        a * a * h_be * h_be * s + 1.0,
    ]
}

/// Differential entropy of a Gaussian with the given covariance, in bits:
/// (1/2) log2((2*pi*e)^d * det).
pub fn gaussian_entropy(cov: &CovarianceMatrix) -> Result<f64> {
    Ok(0.5 * (cov.dim() as f64 * LOG2_2PI_E + cov.log2_det()?))
}

fn check_disjoint(parts: &[&[Observation]]) -> Result<()> {
    for (i, a) in parts.iter().enumerate() {
        for b in &parts[i + 1..] {
            if let Some(l) = a.iter().find(|l| b.contains(l)) {
                return Err(Error::OverlappingPartitions(l.name().to_string()));
            }
        }
    }
    Ok(())
}

fn union(parts: &[&[Observation]]) -> Vec<Observation> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// Clamps tiny negative values (floating-point cancellation) to zero;
/// anything more negative is reported as an error since MI is nonnegative.
fn clamp_mi(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v > -MI_CLAMP_TOL {
        Ok(0.0)
    } else {
        Err(Error::NegativeMutualInformation(v))
    }
}

/// I(A; B) in bits, from three log-dets of principal submatrices.
pub fn gaussian_mi(cov: &CovarianceMatrix, part_a: &[Observation], part_b: &[Observation]) -> Result<f64> {
    check_disjoint(&[part_a, part_b])?;
    let h_a = gaussian_entropy(&cov.submatrix(part_a)?)?;
    let h_b = gaussian_entropy(&cov.submatrix(part_b)?)?;
    let h_ab = gaussian_entropy(&cov.submatrix(&union(&[part_a, part_b]))?)?;
    clamp_mi(h_a + h_b - h_ab)
}

/// I(A; B | C) = h(A,C) + h(B,C) - h(A,B,C) - h(C), in bits.
/// With `part_c` empty this reduces to `gaussian_mi`.
pub fn gaussian_conditional_mi(
    cov: &CovarianceMatrix,
    part_a: &[Observation],
    part_b: &[Observation],
    part_c: &[Observation],
) -> Result<f64> {
    check_disjoint(&[part_a, part_b, part_c])?;
    if part_c.is_empty() {
        return gaussian_mi(cov, part_a, part_b);
    }
    let h_ac = gaussian_entropy(&cov.submatrix(&union(&[part_a, part_c]))?)?;
    let h_bc = gaussian_entropy(&cov.submatrix(&union(&[part_b, part_c]))?)?;
    let h_abc = gaussian_entropy(&cov.submatrix(&union(&[part_a, part_b, part_c]))?)?;
    let h_c = gaussian_entropy(&cov.submatrix(part_c)?)?;
    clamp_mi(h_ac + h_bc - h_abc - h_c)
}

/// Secret-key capacity without an eavesdropper:
/// (1/2) log2[(1+SNR)^2 / ((1+SNR)^2 - rho_ab^2 SNR^2)].
pub fn sk_capacity_no_eve(params: &ModelParams) -> f64 {
    let snr = params.snr();
    let num = (1.0 + snr) * (1.0 + snr);
    0.5 * (num / (num - params.rho_ab * params.rho_ab * snr * snr)).log2()
}

/// Covariance of the legitimate pair (y_A, y_B); always valid.
pub fn legitimate_covariance(params: &ModelParams) -> CovarianceMatrix {
    let s = params.sigma2;
    CovarianceMatrix::new(
        vec![Observation::YA, Observation::YB],
        vec![s + 1.0, params.rho_ab * s, params.rho_ab * s, s + 1.0],
    )
    .expect("legitimate covariance is always well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_observations_given_eve_csi, Observation::*};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    const HALF_LOG2_2PI_E: f64 = 2.047095585180641;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.9, 0.1, 0.05).unwrap()
    }

    #[test]
    fn conditional_covariance_matches_hand_expansion() {
        let p = ModelParams::new(1.0, 1.0, 0.9, 0.1, 0.05).unwrap();
        let cov = build_conditional_covariance(&p, 1.0, 2.0, &Observation::ALL).unwrap();
        // Cov(y_E3, y_E4) = alpha^2 * h_ae * h_be * rho_ab * sigma2
        assert_relative_eq!(cov.get(2, 3), 0.0045, max_relative = 1e-12);
        assert_relative_eq!(cov.get(0, 2), 0.05, max_relative = 1e-12);
        assert_relative_eq!(cov.get(2, 2), 0.05f64 * 0.05 + 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_reflection_gives_block_diagonal() {
        let p = ModelParams::new(1.0, 1.0, 0.9, 0.1, 0.0).unwrap();
        let cov = build_conditional_covariance(&p, 1.3, -0.4, &Observation::ALL).unwrap();
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(cov.get(i, j), 0.0);
            }
        }
        assert_eq!(cov.get(2, 2), 1.0);
        assert_eq!(cov.get(3, 3), 1.0);
        assert_eq!(cov.get(2, 3), 0.0);
    }

    #[test]
    fn zero_eve_coefficients_decouple_eve_rows() {
        let cov = build_conditional_covariance(&params(), 0.0, 0.0, &Observation::ALL).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if (i >= 2 || j >= 2) && i != j {
                    assert_eq!(cov.get(i, j), 0.0);
                }
            }
        }
        assert_eq!(cov.get(2, 2), 1.0);
    }

    #[test]
    fn entropy_matches_frozen_closed_forms() {
        let c1 = CovarianceMatrix::new(vec![YA], vec![1.0]).unwrap();
        assert_relative_eq!(gaussian_entropy(&c1).unwrap(), HALF_LOG2_2PI_E, epsilon = 1e-12);

        let c2 = CovarianceMatrix::new(vec![YA, YB], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(
            gaussian_entropy(&c2).unwrap(),
            2.0 * HALF_LOG2_2PI_E,
            epsilon = 1e-12
        );

        let c4 = CovarianceMatrix::new(vec![YA], vec![4.0]).unwrap();
        assert_relative_eq!(
            gaussian_entropy(&c4).unwrap(),
            HALF_LOG2_2PI_E + 1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_is_additive_for_block_diagonal() {
        let p = ModelParams::new(3.0, 2.0, 0.7, 0.2, 0.0).unwrap();
        let cov = build_conditional_covariance(&p, 0.9, 1.1, &Observation::ALL).unwrap();
        let joint = gaussian_entropy(&cov).unwrap();
        let legit = gaussian_entropy(&cov.submatrix(&[YA, YB]).unwrap()).unwrap();
        let eve = gaussian_entropy(&cov.submatrix(&[YE3, YE4]).unwrap()).unwrap();
        assert_relative_eq!(joint, legit + eve, epsilon = 1e-9);
    }

    #[test]
    fn non_positive_definite_is_rejected() {
        let bad = CovarianceMatrix::new(vec![YA, YB], vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            gaussian_entropy(&bad),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        assert!(CovarianceMatrix::new(vec![YA, YB], vec![1.0, 0.5, 0.4, 1.0]).is_err());
    }

    #[test]
    fn mi_matches_bivariate_formula() {
        let r: f64 = 0.6;
        let cov = CovarianceMatrix::new(vec![YA, YB], vec![1.0, r, r, 1.0]).unwrap();
        let mi = gaussian_mi(&cov, &[YA], &[YB]).unwrap();
        assert_relative_eq!(mi, 0.32192809488736235, epsilon = 1e-12);
        assert_relative_eq!(mi, -0.5 * (1.0 - r * r).log2(), epsilon = 1e-12);
    }

    #[test]
    fn mi_vanishes_for_independent_blocks() {
        let p = ModelParams::new(1.0, 1.0, 0.9, 0.1, 0.0).unwrap();
        let cov = build_conditional_covariance(&p, 1.0, 1.0, &Observation::ALL).unwrap();
        assert_eq!(gaussian_mi(&cov, &[YA], &[YE3, YE4]).unwrap(), 0.0);
    }

    #[test]
    fn mi_is_symmetric() {
        let cov = build_conditional_covariance(&params(), 0.8, -0.3, &Observation::ALL).unwrap();
        let ab = gaussian_mi(&cov, &[YA], &[YE3, YE4]).unwrap();
        let ba = gaussian_mi(&cov, &[YE3, YE4], &[YA]).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn mi_rejects_overlapping_partitions() {
        let cov = build_conditional_covariance(&params(), 1.0, 1.0, &Observation::ALL).unwrap();
        assert!(matches!(
            gaussian_mi(&cov, &[YA, YE3], &[YE3]),
            Err(Error::OverlappingPartitions(_))
        ));
        assert!(matches!(
            gaussian_conditional_mi(&cov, &[YA], &[YB], &[YB, YE3]),
            Err(Error::OverlappingPartitions(_))
        ));
    }

    #[test]
    fn conditional_mi_with_empty_condition_is_mi() {
        let cov = build_conditional_covariance(&params(), 1.0, -1.0, &Observation::ALL).unwrap();
        let a = gaussian_conditional_mi(&cov, &[YA], &[YB], &[]).unwrap();
        let b = gaussian_mi(&cov, &[YA], &[YB]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn irrelevant_side_information_drops_out() {
        let p = ModelParams::new(1.0, 1.0, 0.9, 0.1, 0.0).unwrap();
        let cov = build_conditional_covariance(&p, 1.0, 1.0, &Observation::ALL).unwrap();
        let cond = gaussian_conditional_mi(&cov, &[YA], &[YB], &[YE3, YE4]).unwrap();
        let plain = gaussian_mi(&cov, &[YA], &[YB]).unwrap();
        assert_relative_eq!(cond, plain, epsilon = 1e-9);
    }

    #[test]
    fn four_entropy_form_agrees_with_chain_rule() {
        // I(A;B|C) computed as h(AC)+h(BC)-h(ABC)-h(C) must match
        // I(A;B,C) - I(A;C) on random parameter draws.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let p = ModelParams::new(
                rng.gen_range(0.1..20.0),
                rng.gen_range(0.1..5.0),
                rng.gen_range(-0.99..0.99),
                rng.gen_range(-0.99..0.99),
                rng.gen_range(-0.5..0.5),
            )
            .unwrap();
            let h_ae = rng.gen_range(-2.0..2.0);
            let h_be = rng.gen_range(-2.0..2.0);
            let cov = build_conditional_covariance(&p, h_ae, h_be, &Observation::ALL).unwrap();

            let lhs = gaussian_conditional_mi(&cov, &[YA], &[YB], &[YE3, YE4]).unwrap();
            let i_a_bc = gaussian_mi(&cov, &[YA], &[YB, YE3, YE4]).unwrap();
            let i_a_c = gaussian_mi(&cov, &[YA], &[YE3, YE4]).unwrap();
            assert_relative_eq!(lhs, i_a_bc - i_a_c, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_routes_agree_on_reference_point() {
        let p = ModelParams::new(10.0, 1.0, 0.9, 0.1, 0.05).unwrap();
        let cov = build_conditional_covariance(&p, 1.0, 1.0, &Observation::ALL).unwrap();
        let four_entropy = gaussian_conditional_mi(&cov, &[YA], &[YB], &[YE3, YE4]).unwrap();
        let chain = gaussian_mi(&cov, &[YA], &[YB, YE3, YE4]).unwrap()
            - gaussian_mi(&cov, &[YA], &[YE3, YE4]).unwrap();
        assert_relative_eq!(four_entropy, chain, epsilon = 1e-9);
    }

    #[test]
    fn sk_capacity_matches_frozen_values() {
        let zero_snr = ModelParams::new(1e-300, 1.0, 0.9, 0.1, 0.05).unwrap();
        assert!(sk_capacity_no_eve(&zero_snr).abs() < 1e-12);

        let zero_rho = ModelParams::new(10.0, 1.0, 0.0, 0.1, 0.05).unwrap();
        assert_eq!(sk_capacity_no_eve(&zero_rho), 0.0);

        let p = ModelParams::new(10.0, 1.0, 0.9, 0.1, 0.05).unwrap();
        assert_relative_eq!(sk_capacity_no_eve(&p), 0.7984675711936161, epsilon = 1e-12);

        // Saturation: as SNR grows the capacity approaches
        // (1/2) log2(1 / (1 - rho_ab^2)).
        let hi = ModelParams::new(1e9, 1.0, 0.9, 0.1, 0.05).unwrap();
        assert_relative_eq!(sk_capacity_no_eve(&hi), 1.1979643381655696, epsilon = 1e-6);
    }

    #[test]
    fn sk_capacity_agrees_with_matrix_route() {
        for snr in [0.1, 1.0, 10.0, 1000.0] {
            for rho in [0.0, 0.5, 0.9, 1.0] {
                let p = ModelParams::new(snr, 1.0, rho, 0.1, 0.05).unwrap();
                let closed = sk_capacity_no_eve(&p);
                let cov = legitimate_covariance(&p);
                let matrix = gaussian_mi(&cov, &[YA], &[YB]).unwrap();
                assert_relative_eq!(closed, matrix, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn eve_information_grows_with_reflection() {
        let mut last = -1.0;
        for alpha in [0.0, 0.05, 0.1, 0.2, 0.4, 0.8] {
            let p = ModelParams::new(10.0, 1.0, 0.9, 0.1, alpha).unwrap();
            let cov = build_conditional_covariance(&p, 1.0, 0.7, &Observation::ALL).unwrap();
            let mi = gaussian_mi(&cov, &[YA], &[YE3, YE4]).unwrap();
            assert!(mi >= last, "I(y_A; Eve) not monotone at alpha={alpha}");
            last = mi;
        }
    }

    #[test]
    fn conditional_batch_covariance_matches_construction() {
        let p = ModelParams::new(2.0, 1.0, 0.8, 0.3, 0.2).unwrap();
        let (h_ae, h_be) = (0.7, -1.2);
        let n = 100_000;
        let batch = sample_observations_given_eve_csi(&p, h_ae, h_be, n, 31).unwrap();
        let cov = build_conditional_covariance(&p, h_ae, h_be, &Observation::ALL).unwrap();

        let cols: Vec<Vec<f64>> = Observation::ALL
            .iter()
            .map(|o| batch.column_values(*o).unwrap())
            .collect();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        for i in 0..4 {
            for j in i..4 {
                let (mi_, mj) = (mean(&cols[i]), mean(&cols[j]));
                let prods: Vec<f64> = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(x, y)| (x - mi_) * (y - mj))
                    .collect();
                let got = prods.iter().sum::<f64>() / (n - 1) as f64;
                let mp = mean(&prods);
                let var = prods.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                assert!(
                    (got - cov.get(i, j)).abs() <= 4.0 * se,
                    "entry ({i},{j}): sample {got} vs exact {}",
                    cov.get(i, j)
                );
            }
        }
    }

    #[test]
    fn submatrix_unknown_label_is_rejected() {
        let cov = legitimate_covariance(&params());
        assert!(matches!(
            cov.submatrix(&[YE3]),
            Err(Error::UnknownLabel(_))
        ));
    }
}
