//! Flat result records and their CSV/JSON persistence.
//!
//! One record per evaluated grid point (and per estimator method when the
//! CLI reports both). Every row carries the full parameter set, so any
//! single row can be reproduced in isolation. Files are deterministic under
//! a fixed seed: no timestamps, fixed column order, shortest-round-trip
//! float formatting.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundEstimate, Regime};
use crate::error::{Error, Result};

/// One output row. Column order matters for the CSV format and is part of
/// the interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub snr_db: f64,
    /// -inf when the reflection path carries no power (alpha = 0).
    #[serde(with = "lenient_f64")]
    pub snr_eve_db: f64,
    pub sigma2: f64,
    pub sigma2_e: f64,
    pub rho_ab: f64,
    pub rho_e: f64,
    pub alpha: f64,
    pub regime: Regime,
    /// NaN marks a failed point; see the diagnostics notes in the log.
    #[serde(with = "lenient_f64")]
    pub lower_bits: f64,
    #[serde(with = "lenient_f64")]
    pub lower_stderr: f64,
    #[serde(with = "lenient_f64")]
    pub upper_bits: f64,
    #[serde(with = "lenient_f64")]
    pub upper_stderr: f64,
    /// Estimator method, or "exact" for closed-form regimes.
    pub method: String,
    pub n: u64,
    pub seed: u64,
    pub clamp_count: u32,
}

impl ResultRecord {
    pub fn from_estimate(est: &BoundEstimate) -> ResultRecord {
        let p = &est.params;
        let method = match est.diagnostics.method {
            Some(m) => m.name().to_string(),
            None => "exact".to_string(),
        };
        let n = match est.regime {
            Regime::FullCsie => est.diagnostics.n_channel_draws as u64,
            Regime::NoCsie => est.diagnostics.n_samples as u64,
            Regime::NoEve => 0,
        };
        ResultRecord {
            snr_db: p.snr_db(),
            snr_eve_db: p.snr_eve_db(),
            sigma2: p.sigma2,
            sigma2_e: p.sigma2_e,
            rho_ab: p.rho_ab,
            rho_e: p.rho_e,
            alpha: p.alpha,
            regime: est.regime,
            lower_bits: est.lower.bits,
            lower_stderr: est.lower.stderr,
            upper_bits: est.upper.bits,
            upper_stderr: est.upper.stderr,
            method,
            n,
            seed: est.seed,
            clamp_count: est.diagnostics.clamp_count,
        }
    }

    /// Field-by-field equality with NaN == NaN, for round-trip checks.
    pub fn same_bits(&self, other: &ResultRecord) -> bool {
        let f = |a: f64, b: f64| a.to_bits() == b.to_bits();
        f(self.snr_db, other.snr_db)
            && f(self.snr_eve_db, other.snr_eve_db)
            && f(self.sigma2, other.sigma2)
            && f(self.sigma2_e, other.sigma2_e)
            && f(self.rho_ab, other.rho_ab)
            && f(self.rho_e, other.rho_e)
            && f(self.alpha, other.alpha)
            && self.regime == other.regime
            && f(self.lower_bits, other.lower_bits)
            && f(self.lower_stderr, other.lower_stderr)
            && f(self.upper_bits, other.upper_bits)
            && f(self.upper_stderr, other.upper_stderr)
            && self.method == other.method
            && self.n == other.n
            && self.seed == other.seed
            && self.clamp_count == other.clamp_count
    }
}

/// Serde glue keeping non-finite floats representable in both CSV and JSON:
/// finite values stay numbers, non-finite ones become the strings "inf",
/// "-inf", "NaN".
mod lenient_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct LenientVisitor;

    impl Visitor<'_> for LenientVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a float or the strings inf/-inf/NaN")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
            v.parse::<f64>()
                .map_err(|_| de::Error::invalid_value(de::Unexpected::Str(v), &self))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        d.deserialize_any(LenientVisitor)
    }
}

/// File format of a result set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config(
                "output.format",
                format!("unknown format `{other}` (expected csv or json)"),
            )),
        }
    }
}

pub fn write_records<W: Write>(w: W, format: OutputFormat, records: &[ResultRecord]) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(w, records),
        OutputFormat::Json => write_json(w, records),
    }
}

pub fn read_records<R: Read>(r: R, format: OutputFormat) -> Result<Vec<ResultRecord>> {
    match format {
        OutputFormat::Csv => read_csv(r),
        OutputFormat::Json => read_json(r),
    }
}

pub fn write_csv<W: Write>(w: W, records: &[ResultRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for rec in records {
        writer.serialize(rec)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::ResultFormat(e.to_string())))
        .collect()
}

pub fn write_json<W: Write>(mut w: W, records: &[ResultRecord]) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, records)
        .map_err(|e| Error::ResultFormat(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<Vec<ResultRecord>> {
    serde_json::from_reader(r).map_err(|e| Error::ResultFormat(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> ResultRecord {
        ResultRecord {
            snr_db: 10.0,
            snr_eve_db: -26.020599913279624,
            sigma2: 10.0,
            sigma2_e: 1.0,
            rho_ab: 0.9,
            rho_e: 0.1,
            alpha: 0.05,
            regime: Regime::NoCsie,
            lower_bits: 0.7123,
            lower_stderr: 0.004,
            upper_bits: 0.7419,
            upper_stderr: 0.005,
            method: "knn".to_string(),
            n: 100_000,
            seed: 42,
            clamp_count: 0,
        }
    }

    #[test]
    fn csv_round_trip_preserves_bits() {
        let mut recs = vec![sample_record()];
        recs.push(ResultRecord {
            snr_eve_db: f64::NEG_INFINITY,
            lower_bits: f64::NAN,
            alpha: 0.0,
            ..sample_record()
        });
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in recs.iter().zip(&back) {
            assert!(a.same_bits(b), "round-trip mismatch:\n{a:?}\n{b:?}");
        }
    }

    #[test]
    fn json_round_trip_preserves_bits() {
        let recs = vec![
            sample_record(),
            ResultRecord {
                snr_eve_db: f64::NEG_INFINITY,
                upper_bits: f64::NAN,
                ..sample_record()
            },
        ];
        let mut buf = Vec::new();
        write_json(&mut buf, &recs).unwrap();
        let back = read_json(buf.as_slice()).unwrap();
        for (a, b) in recs.iter().zip(&back) {
            assert!(a.same_bits(b));
        }
    }

    #[test]
    fn csv_header_matches_interface_order() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[sample_record()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "snr_db,snr_eve_db,sigma2,sigma2_e,rho_ab,rho_e,alpha,regime,\
             lower_bits,lower_stderr,upper_bits,upper_stderr,method,n,seed,clamp_count"
        );
    }
}
