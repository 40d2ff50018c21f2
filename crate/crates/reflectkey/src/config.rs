//! Sweep configuration: a human-editable TOML schema, validation, and grid
//! expansion.
//!
//! ```toml
//! regime = "no_csie"              # no_eve | no_csie | full_csie
//!
//! [model]
//! rho_ab = 0.9
//! rho_e = 0.1
//! alpha = 0.05
//! sigma2_e = 1.0                  # or a grid.snr_eve_db axis
//!
//! [grid]
//! snr_db = { start = -10.0, stop = 60.0, step = 5.0 }   # or a plain list
//!
//! [estimator]                     # no_csie only
//! method = "knn"                  # knn | kde | both
//! k = 4
//! bandwidth = "silverman"         # or a positive number
//!
//! [run]
//! n_samples = 100000
//! n_channel_draws = 1000
//! seed = 7
//!
//! [output]
//! path = "fig4.csv"
//! format = "csv"                  # csv | json
//! ```
//!
//! The SNR axes are in dB: `sigma2 = 10^(snr_db/10)`, and when an
//! `snr_eve_db` axis is given the eavesdropper variance is derived per point
//! from `snr_eve = alpha^2 * sigma2_e * sigma2`. Command-line flags override
//! file values. Seeds always come from the file or a flag, never from time.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::bounds::Regime;
use crate::error::{Error, Result};
use crate::estimators::{Bandwidth, EstimatorConfig, Method};
use crate::model::ModelParams;
use crate::records::OutputFormat;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    regime: String,
    model: RawModel,
    grid: Option<RawGrid>,
    estimator: Option<RawEstimator>,
    run: Option<RawRun>,
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    rho_ab: f64,
    rho_e: f64,
    alpha: f64,
    sigma2: Option<f64>,
    sigma2_e: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    snr_db: Option<AxisSpec>,
    snr_eve_db: Option<AxisSpec>,
}

/// Either an explicit list of dB values or an inclusive range.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AxisSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    method: Option<String>,
    k: Option<usize>,
    bandwidth: Option<BandwidthSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BandwidthSpec {
    Value(f64),
    Rule(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_samples: Option<usize>,
    n_channel_draws: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: String,
    format: Option<String>,
}

/// Values a command-line flag may override.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
    pub n_channel_draws: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// A validated, fully expanded sweep configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub regime: Regime,
    /// One entry per grid point, snr-major then snr_eve.
    pub grid: Vec<ModelParams>,
    /// Estimator methods to report; empty for the exact regimes.
    pub methods: Vec<Method>,
    pub estimator: EstimatorConfig,
    pub n_samples: usize,
    pub n_channel_draws: usize,
    pub seed: u64,
    pub output_path: PathBuf,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, overrides)
    }

    /// Parses and validates; never panics on malformed input.
    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<RunConfig> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        validate(raw, overrides)
    }
}

fn expand_axis(axis: &AxisSpec, field: &str) -> Result<Vec<f64>> {
    let values = match axis {
        AxisSpec::List(v) => v.clone(),
        AxisSpec::Range { start, stop, step } => {
            if !start.is_finite() || !stop.is_finite() || !step.is_finite() {
                return Err(Error::config(field, "range endpoints must be finite"));
            }
            if *step <= 0.0 {
                return Err(Error::config(field, format!("step must be > 0, got {step}")));
            }
            if stop < start {
                return Err(Error::config(field, "stop must be >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + i as f64 * step).collect()
        }
    };
    if values.is_empty() {
        return Err(Error::config(field, "axis has no values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(field, "axis values must be finite"));
    }
    Ok(values)
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn validate(raw: RawConfig, overrides: &Overrides) -> Result<RunConfig> {
    let regime = Regime::from_str(&raw.regime)?;

    // sigma2 comes from exactly one place: a fixed value or the SNR axis.
    let snr_axis = raw.grid.as_ref().and_then(|g| g.snr_db.as_ref());
    let sigma2_values: Vec<f64> = match (raw.model.sigma2, snr_axis) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "model.sigma2",
                "give either model.sigma2 or grid.snr_db, not both",
            ))
        }
        (Some(s), None) => vec![s],
        (None, Some(axis)) => expand_axis(axis, "grid.snr_db")?
            .into_iter()
            .map(db_to_linear)
            .collect(),
        (None, None) => {
            return Err(Error::config(
                "model.sigma2",
                "missing SNR: set model.sigma2 or a grid.snr_db axis",
            ))
        }
    };

    let eve_axis = raw.grid.as_ref().and_then(|g| g.snr_eve_db.as_ref());
    enum EveSpec {
        Fixed(f64),
        AxisDb(Vec<f64>),
    }
    let eve = match (raw.model.sigma2_e, eve_axis) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "model.sigma2_e",
                "give either model.sigma2_e or grid.snr_eve_db, not both",
            ))
        }
        (Some(v), None) => EveSpec::Fixed(v),
        (None, Some(axis)) => {
            if raw.model.alpha == 0.0 {
                return Err(Error::config(
                    "grid.snr_eve_db",
                    "an Eve SNR axis needs alpha != 0 to solve for sigma2_e",
                ));
            }
            EveSpec::AxisDb(expand_axis(axis, "grid.snr_eve_db")?)
        }
        (None, None) => {
            if regime == Regime::NoEve {
                // The eavesdropper variance is irrelevant without an Eve.
                EveSpec::Fixed(1.0)
            } else {
                return Err(Error::config(
                    "model.sigma2_e",
                    "missing Eve variance: set model.sigma2_e or a grid.snr_eve_db axis",
                ));
            }
        }
    };

    let mut grid = Vec::new();
    for &sigma2 in &sigma2_values {
        match &eve {
            EveSpec::Fixed(sigma2_e) => {
                grid.push(build_point(&raw.model, sigma2, *sigma2_e)?);
            }
            EveSpec::AxisDb(eve_dbs) => {
                for &eve_db in eve_dbs {
                    let alpha2 = raw.model.alpha * raw.model.alpha;
                    let sigma2_e = db_to_linear(eve_db) / (alpha2 * sigma2);
                    grid.push(build_point(&raw.model, sigma2, sigma2_e)?);
                }
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::config("grid", "expanded grid has no points"));
    }

    // Estimator settings only make sense where entropies are estimated.
    if raw.estimator.is_some() && regime != Regime::NoCsie {
        return Err(Error::config(
            "estimator",
            format!("regime `{regime}` uses closed forms; remove the [estimator] section"),
        ));
    }
    let (methods, estimator) = match (&regime, raw.estimator) {
        (Regime::NoCsie, section) => {
            let section = section.unwrap_or(RawEstimator {
                method: None,
                k: None,
                bandwidth: None,
            });
            let methods = match section.method.as_deref().unwrap_or("knn") {
                "both" => vec![Method::Knn, Method::Kde],
                m => vec![Method::from_str(m)
                    .map_err(|_| Error::config("estimator.method", format!("unknown method `{m}`")))?],
            };
            let k = section.k.unwrap_or(4);
            if k == 0 {
                return Err(Error::config("estimator.k", "k must be >= 1"));
            }
            let bandwidth = match section.bandwidth {
                None => Bandwidth::Silverman,
                Some(BandwidthSpec::Rule(r)) if r == "silverman" => Bandwidth::Silverman,
                Some(BandwidthSpec::Rule(r)) => {
                    return Err(Error::config(
                        "estimator.bandwidth",
                        format!("unknown rule `{r}` (expected \"silverman\" or a number)"),
                    ))
                }
                Some(BandwidthSpec::Value(v)) => {
                    if !v.is_finite() || v <= 0.0 {
                        return Err(Error::config(
                            "estimator.bandwidth",
                            format!("must be > 0, got {v}"),
                        ));
                    }
                    Bandwidth::Fixed(v)
                }
            };
            (methods, EstimatorConfig { k, bandwidth })
        }
        (_, _) => (Vec::new(), EstimatorConfig::default()),
    };

    let run = raw.run.unwrap_or(RawRun {
        n_samples: None,
        n_channel_draws: None,
        seed: None,
    });
    let n_samples = overrides.n_samples.or(run.n_samples).unwrap_or(100_000);
    let n_channel_draws = overrides
        .n_channel_draws
        .or(run.n_channel_draws)
        .unwrap_or(1_000);
    if regime == Regime::NoCsie && n_samples < 1_000 {
        return Err(Error::config(
            "run.n_samples",
            format!("no_csie needs n_samples >= 1000, got {n_samples}"),
        ));
    }
    if regime == Regime::FullCsie && n_channel_draws < 100 {
        return Err(Error::config(
            "run.n_channel_draws",
            format!("full_csie needs n_channel_draws >= 100, got {n_channel_draws}"),
        ));
    }
    let seed = overrides.seed.or(run.seed).ok_or_else(|| {
        Error::config("run.seed", "a seed is required (set run.seed or pass --seed)")
    })?;

    let format = match (&overrides.format, raw.output.format.as_deref()) {
        (Some(f), _) => *f,
        (None, Some(f)) => OutputFormat::from_str(f)?,
        (None, None) => OutputFormat::Csv,
    };
    let output_path = overrides
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(&raw.output.path));
    if output_path.as_os_str().is_empty() {
        return Err(Error::config("output.path", "output path is empty"));
    }

    Ok(RunConfig {
        regime,
        grid,
        methods,
        estimator,
        n_samples,
        n_channel_draws,
        seed,
        output_path,
        format,
    })
}

fn build_point(model: &RawModel, sigma2: f64, sigma2_e: f64) -> Result<ModelParams> {
    ModelParams::new(sigma2, sigma2_e, model.rho_ab, model.rho_e, model.alpha).map_err(|e| {
        Error::config("model", format!("invalid grid point: {e}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
regime = "no_csie"

[model]
rho_ab = 0.9
rho_e = 0.1
alpha = 0.05
sigma2_e = 1.0

[grid]
snr_db = { start = 0.0, stop = 20.0, step = 10.0 }

[run]
seed = 7

[output]
path = "out.csv"
"#;

    #[test]
    fn parses_a_basic_sweep() {
        let cfg = RunConfig::from_toml_str(BASE, &Overrides::default()).unwrap();
        assert_eq!(cfg.regime, Regime::NoCsie);
        assert_eq!(cfg.grid.len(), 3);
        assert_eq!(cfg.methods, vec![Method::Knn]);
        assert_eq!(cfg.n_samples, 100_000);
        assert_eq!(cfg.seed, 7);
        assert!((cfg.grid[1].sigma2 - 10.0).abs() < 1e-12);
        assert_eq!(cfg.grid[1].sigma2_e, 1.0);
    }

    #[test]
    fn eve_axis_solves_for_sigma2_e() {
        let text = BASE.replace(
            "sigma2_e = 1.0",
            "",
        ).replace(
            "snr_db = { start = 0.0, stop = 20.0, step = 10.0 }",
            "snr_db = [10.0]\nsnr_eve_db = [-16.020599913279623, 3.9794000867203767]",
        );
        let cfg = RunConfig::from_toml_str(&text, &Overrides::default()).unwrap();
        assert_eq!(cfg.grid.len(), 2);
        // snr_eve = alpha^2 sigma2_e sigma2; first point solves to sigma2_e = 1.
        assert!((cfg.grid[0].sigma2_e - 1.0).abs() < 1e-9);
        assert!((cfg.grid[1].sigma2_e - 100.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_conflicting_and_missing_fields() {
        let both = BASE.replace("[run]", "[model2]\n[run]");
        assert!(RunConfig::from_toml_str(&both, &Overrides::default()).is_err());

        let no_seed = BASE.replace("seed = 7", "");
        assert!(RunConfig::from_toml_str(&no_seed, &Overrides::default()).is_err());
        // ... unless a flag provides it.
        let with_flag = Overrides { seed: Some(3), ..Default::default() };
        assert_eq!(RunConfig::from_toml_str(&no_seed, &with_flag).unwrap().seed, 3);

        let both_sigma = BASE.replace("rho_e = 0.1", "rho_e = 0.1\nsigma2 = 5.0");
        let err = RunConfig::from_toml_str(&both_sigma, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("model.sigma2"), "{err}");
    }

    #[test]
    fn rejects_estimator_section_for_exact_regimes() {
        let text = BASE
            .replace("regime = \"no_csie\"", "regime = \"no_eve\"")
            .replace("[run]", "[estimator]\nmethod = \"knn\"\n\n[run]");
        let err = RunConfig::from_toml_str(&text, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("estimator"), "{err}");
    }

    #[test]
    fn rejects_bad_axes() {
        for (from, to) in [
            (
                "snr_db = { start = 0.0, stop = 20.0, step = 10.0 }",
                "snr_db = { start = 0.0, stop = 20.0, step = -1.0 }",
            ),
            (
                "snr_db = { start = 0.0, stop = 20.0, step = 10.0 }",
                "snr_db = []",
            ),
            (
                "snr_db = { start = 0.0, stop = 20.0, step = 10.0 }",
                "snr_db = { start = 20.0, stop = 0.0, step = 5.0 }",
            ),
        ] {
            let text = BASE.replace(from, to);
            assert!(
                RunConfig::from_toml_str(&text, &Overrides::default()).is_err(),
                "accepted bad axis: {to}"
            );
        }
    }

    #[test]
    fn method_both_reports_two_methods() {
        let text = BASE.replace("[run]", "[estimator]\nmethod = \"both\"\n\n[run]");
        let cfg = RunConfig::from_toml_str(&text, &Overrides::default()).unwrap();
        assert_eq!(cfg.methods, vec![Method::Knn, Method::Kde]);
    }

    #[test]
    fn range_expansion_is_inclusive() {
        let vals = expand_axis(
            &AxisSpec::Range { start: -10.0, stop: 60.0, step: 5.0 },
            "grid.snr_db",
        )
        .unwrap();
        assert_eq!(vals.len(), 15);
        assert_eq!(vals[0], -10.0);
        assert_eq!(*vals.last().unwrap(), 60.0);
    }

    #[test]
    fn garbage_input_errors_instead_of_panicking() {
        for text in ["", "regime = 3", "[[grid]]\nwat = true", "\u{0}\u{1}\u{2}"] {
            assert!(RunConfig::from_toml_str(text, &Overrides::default()).is_err());
        }
    }
}
