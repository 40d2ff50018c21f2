//! Reflection channel model: parameters and seeded Monte Carlo sampling.
//!
//! Alice and Bob exchange a unit training symbol over reciprocal channels
//! while a passive eavesdropper observes the signals re-radiated by their
//! receive antennas. After dropping the direct-path observations (independent
//! of everything else), four observations remain per channel use:
//!
//! ```text
//! y_A  = h_BA + z_A
//! y_B  = h_AB + z_B
//! y_E3 = alpha * h_BA * h_AE + z_E3
//! y_E4 = alpha * h_AB * h_BE + z_E4
//! ```
//!
//! All noise terms are i.i.d. standard Gaussian and independent of the
//! channels. Channel pairs are zero-mean bivariate Gaussians: (h_BA, h_AB)
//! with variance `sigma2` and correlation `rho_ab`, (h_AE, h_BE) with
//! variance `sigma2_e` and correlation `rho_e`, the two pairs independent.

use std::fmt;
use std::io;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar parameters of the reflection channel model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Variance of the legitimate channels (equals the SNR at Alice/Bob).
    pub sigma2: f64,
    /// Variance of the eavesdropper channels.
    pub sigma2_e: f64,
    /// Correlation between h_BA and h_AB, in [-1, 1].
    pub rho_ab: f64,
    /// Correlation between h_AE and h_BE, in [-1, 1].
    pub rho_e: f64,
    /// Reflection coefficient, |alpha| < 1.
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(sigma2: f64, sigma2_e: f64, rho_ab: f64, rho_e: f64, alpha: f64) -> Result<Self> {
        let params = ModelParams {
            sigma2,
            sigma2_e,
            rho_ab,
            rho_e,
            alpha,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma2.is_finite() || self.sigma2 <= 0.0 {
            return Err(Error::invalid("sigma2", format!("must be > 0, got {}", self.sigma2)));
        }
        if !self.sigma2_e.is_finite() || self.sigma2_e <= 0.0 {
            return Err(Error::invalid(
                "sigma2_e",
                format!("must be > 0, got {}", self.sigma2_e),
            ));
        }
        if !self.rho_ab.is_finite() || self.rho_ab.abs() > 1.0 {
            return Err(Error::invalid(
                "rho_ab",
                format!("must lie in [-1, 1], got {}", self.rho_ab),
            ));
        }
        if !self.rho_e.is_finite() || self.rho_e.abs() > 1.0 {
            return Err(Error::invalid(
                "rho_e",
                format!("must lie in [-1, 1], got {}", self.rho_e),
            ));
        }
        if !self.alpha.is_finite() || self.alpha.abs() >= 1.0 {
            return Err(Error::invalid(
                "alpha",
                format!("must satisfy |alpha| < 1, got {}", self.alpha),
            ));
        }
        Ok(())
    }

    /// SNR at Alice's and Bob's receivers (linear).
    pub fn snr(&self) -> f64 {
        self.sigma2
    }

    /// Eve's SNR induced purely by reflections: alpha^2 * sigma2_e * sigma2.
    pub fn snr_eve(&self) -> f64 {
        self.alpha * self.alpha * self.sigma2_e * self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }

    /// Eve's SNR in dB; `-inf` when the reflection vanishes.
    pub fn snr_eve_db(&self) -> f64 {
        10.0 * self.snr_eve().log10()
    }
}

/// Both linear SNRs implied by the parameters: `(snr, snr_eve)`.
pub fn derived_snrs(params: &ModelParams) -> (f64, f64) {
    (params.snr(), params.snr_eve())
}

/// One draw of the four channel coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub h_ba: f64,
    pub h_ab: f64,
    pub h_ae: f64,
    pub h_be: f64,
}

/// The four observations available for rate computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observation {
    YA,
    YB,
    YE3,
    YE4,
}

impl Observation {
    pub const ALL: [Observation; 4] = [
        Observation::YA,
        Observation::YB,
        Observation::YE3,
        Observation::YE4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Observation::YA => "y_A",
            Observation::YB => "y_B",
            Observation::YE3 => "y_E3",
            Observation::YE4 => "y_E4",
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "y_A" => Ok(Observation::YA),
            "y_B" => Ok(Observation::YB),
            "y_E3" => Ok(Observation::YE3),
            "y_E4" => Ok(Observation::YE4),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// A matrix of joint observation samples, one row per independent draw.
///
/// Immutable after construction; safe to share read-only across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    columns: Vec<Observation>,
    data: Vec<f64>,
    n_rows: usize,
    seed: u64,
}

impl SampleBatch {
    /// Wraps a row-major matrix. `data.len()` must equal `columns.len() * n`,
    /// with `n >= 1` and no repeated column.
    pub fn from_rows(columns: Vec<Observation>, data: Vec<f64>, seed: u64) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("columns", "batch needs at least one column"));
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::invalid("columns", format!("duplicate column {c}")));
            }
        }
        if data.is_empty() || data.len() % columns.len() != 0 {
            return Err(Error::invalid(
                "data",
                format!(
                    "matrix length {} is not a positive multiple of {} columns",
                    data.len(),
                    columns.len()
                ),
            ));
        }
        let n_rows = data.len() / columns.len();
        Ok(SampleBatch {
            columns,
            data,
            n_rows,
            seed,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Observation] {
        &self.columns
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn col_index(&self, obs: Observation) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| *c == obs)
            .ok_or_else(|| Error::UnknownLabel(obs.name().to_string()))
    }

    /// Copies one column out of the batch.
    pub fn column_values(&self, obs: Observation) -> Result<Vec<f64>> {
        let j = self.col_index(obs)?;
        let d = self.n_cols();
        Ok(self.data.iter().skip(j).step_by(d).copied().collect())
    }

    /// New batch holding only `cols`, in the given order.
    pub fn project(&self, cols: &[Observation]) -> Result<SampleBatch> {
        let idx: Vec<usize> = cols
            .iter()
            .map(|c| self.col_index(*c))
            .collect::<Result<_>>()?;
        let mut data = Vec::with_capacity(self.n_rows * idx.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        SampleBatch::from_rows(cols.to_vec(), data, self.seed)
    }

    /// Writes the batch as CSV with the column names as header.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name()))?;
        for i in 0..self.n_rows {
            w.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

// Fixed ChaCha streams, one per independent source of randomness, so the
// noise columns stay independent of the channel draws by construction.
const STREAM_LEGIT: u64 = 0;
const STREAM_EVE: u64 = 1;
const STREAM_NOISE_A: u64 = 2;
const STREAM_NOISE_B: u64 = 3;
const STREAM_NOISE_E3: u64 = 4;
const STREAM_NOISE_E4: u64 = 5;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` correlated pairs with common variance `sigma2` and correlation
/// `rho`, via the Cholesky factor of the 2x2 covariance. At |rho| = 1 the
/// factor degenerates and the second coordinate becomes exactly rho times
/// the first.
pub(crate) fn bivariate_normal_pairs(
    rng: &mut ChaCha8Rng,
    n: usize,
    sigma2: f64,
    rho: f64,
) -> Vec<(f64, f64)> {
    let sd = sigma2.sqrt();
    let tail = (1.0 - rho * rho).max(0.0).sqrt();
    (0..n)
        .map(|_| {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            (sd * z1, sd * (rho * z1 + tail * z2))
        })
        .collect()
}

/// Samples the four channel coefficients for `n` independent channel uses.
pub fn sample_channels(params: &ModelParams, n: usize, seed: u64) -> Result<Vec<ChannelSample>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    let legit = bivariate_normal_pairs(
        &mut stream_rng(seed, STREAM_LEGIT),
        n,
        params.sigma2,
        params.rho_ab,
    );
    let eve = bivariate_normal_pairs(
        &mut stream_rng(seed, STREAM_EVE),
        n,
        params.sigma2_e,
        params.rho_e,
    );
    Ok(legit
        .into_iter()
        .zip(eve)
        .map(|((h_ba, h_ab), (h_ae, h_be))| ChannelSample {
            h_ba,
            h_ab,
            h_ae,
            h_be,
        })
        .collect())
}

fn noise_column(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn observations_from_channels(
    params: &ModelParams,
    channels: &[(f64, f64, f64, f64)],
    seed: u64,
) -> Result<SampleBatch> {
    let n = channels.len();
    let z_a = noise_column(seed, STREAM_NOISE_A, n);
    let z_b = noise_column(seed, STREAM_NOISE_B, n);
    let z_e3 = noise_column(seed, STREAM_NOISE_E3, n);
    let z_e4 = noise_column(seed, STREAM_NOISE_E4, n);

    let mut data = Vec::with_capacity(4 * n);
    for (i, &(h_ba, h_ab, h_ae, h_be)) in channels.iter().enumerate() {
        data.push(h_ba + z_a[i]);
        data.push(h_ab + z_b[i]);
        data.push(params.alpha * h_ba * h_ae + z_e3[i]);
        data.push(params.alpha * h_ab * h_be + z_e4[i]);
    }
    SampleBatch::from_rows(Observation::ALL.to_vec(), data, seed)
}

/// Samples `n` rows of the joint observations (y_A, y_B, y_E3, y_E4).
/// Channel draws are fresh per row (memoryless source model).
pub fn sample_observations(params: &ModelParams, n: usize, seed: u64) -> Result<SampleBatch> {
    let channels: Vec<_> = sample_channels(params, n, seed)?
        .into_iter()
        .map(|c| (c.h_ba, c.h_ab, c.h_ae, c.h_be))
        .collect();
    observations_from_channels(params, &channels, seed)
}

/// Samples observations with Eve's coefficients pinned to `(h_ae, h_be)`
/// across all rows; legitimate channels and all noise are redrawn. The
/// resulting joint distribution is multivariate Gaussian.
pub fn sample_observations_given_eve_csi(
    params: &ModelParams,
    h_ae: f64,
    h_be: f64,
    n: usize,
    seed: u64,
) -> Result<SampleBatch> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    if !h_ae.is_finite() || !h_be.is_finite() {
        return Err(Error::invalid("h_ae/h_be", "conditioned coefficients must be finite"));
    }
    let legit = bivariate_normal_pairs(
        &mut stream_rng(seed, STREAM_LEGIT),
        n,
        params.sigma2,
        params.rho_ab,
    );
    let channels: Vec<_> = legit
        .into_iter()
        .map(|(h_ba, h_ab)| (h_ba, h_ab, h_ae, h_be))
        .collect();
    observations_from_channels(params, &channels, seed)
}
