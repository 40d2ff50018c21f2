//! Sweep orchestration and report assembly behind the command-line binary.
//!
//! Kept in the library so integration tests can drive the exact code paths
//! the binary uses. Progress goes to standard error; data only ever goes to
//! the output file (or the returned values).

use std::io::Write;
use std::time::Instant;

use crate::antenna::{matched_load, power_breakdown, suggest_alpha, AntennaCircuit, PowerBreakdown};
use crate::bounds::{sweep, Regime, SweepSettings};
use crate::config::RunConfig;
use crate::error::Result;
use crate::estimators::oracle::{gaussian_oracle_suite, OracleCase, OracleSettings};
use crate::records::{write_records, ResultRecord};

/// Runs the configured sweep and returns the rows in output order:
/// grid-point major, then estimator method for `method = "both"`.
pub fn run_sweep(config: &RunConfig) -> Vec<ResultRecord> {
    let settings_for = |method| SweepSettings {
        n_samples: config.n_samples,
        n_channel_draws: config.n_channel_draws,
        method,
        estimator: config.estimator.clone(),
        seed: config.seed,
    };

    let started = Instant::now();
    let per_method: Vec<Vec<ResultRecord>> = if config.regime == Regime::NoCsie {
        config
            .methods
            .iter()
            .map(|&method| {
                eprintln!(
                    "sweep: {} points, regime {}, method {}",
                    config.grid.len(),
                    config.regime,
                    method
                );
                sweep(&config.grid, config.regime, &settings_for(method))
                    .iter()
                    .map(ResultRecord::from_estimate)
                    .collect()
            })
            .collect()
    } else {
        eprintln!(
            "sweep: {} points, regime {} (closed form)",
            config.grid.len(),
            config.regime
        );
        vec![sweep(&config.grid, config.regime, &settings_for(crate::estimators::Method::Knn))
            .iter()
            .map(ResultRecord::from_estimate)
            .collect()]
    };

    let mut rows = Vec::with_capacity(config.grid.len() * per_method.len());
    for i in 0..config.grid.len() {
        for method_rows in &per_method {
            rows.push(method_rows[i].clone());
        }
    }
    let failures = rows.iter().filter(|r| r.lower_bits.is_nan()).count();
    eprintln!(
        "sweep: {} rows in {:.1?}{}",
        rows.len(),
        started.elapsed(),
        if failures > 0 {
            format!(", {failures} failed points kept as NaN rows")
        } else {
            String::new()
        }
    );
    rows
}

/// Runs the sweep and persists the rows to the configured output file.
pub fn run_to_file(config: &RunConfig) -> Result<Vec<ResultRecord>> {
    let rows = run_sweep(config);
    let file = std::fs::File::create(&config.output_path)?;
    write_records(std::io::BufWriter::new(file), config.format, &rows)?;
    eprintln!("wrote {}", config.output_path.display());
    Ok(rows)
}

/// Power report for one circuit: the conjugate match is applied first, then
/// the split and the heuristic reflection coefficient are computed.
pub struct AntennaReport {
    pub circuit: AntennaCircuit,
    pub breakdown: PowerBreakdown,
    pub coupling: f64,
    pub suggested_alpha: f64,
}

pub fn antenna_report(
    r_loss: f64,
    r_rad: f64,
    x_a: f64,
    v_oc: f64,
    coupling: f64,
) -> Result<AntennaReport> {
    let circuit = AntennaCircuit::new(
        r_loss,
        r_rad,
        x_a,
        crate::antenna::LoadImpedance { re: 0.0, im: 0.0 },
        v_oc,
    )?;
    let circuit = matched_load(&circuit);
    let breakdown = power_breakdown(&circuit)?;
    let suggested_alpha = suggest_alpha(breakdown.ratio, coupling)?;
    Ok(AntennaReport {
        circuit,
        breakdown,
        coupling,
        suggested_alpha,
    })
}

pub fn format_antenna_table(report: &AntennaReport) -> String {
    let b = &report.breakdown;
    let c = &report.circuit;
    let mut out = String::new();
    out.push_str(&format!(
        "antenna: R_l = {} ohm, R_r = {} ohm, X_A = {} ohm, V_OC = {} V\n",
        c.r_loss, c.r_rad, c.x_a, c.v_oc
    ));
    out.push_str(&format!(
        "matched load: {} {:+} j ohm\n",
        c.z_load.re, c.z_load.im
    ));
    out.push_str(&format!("{:<22} {:>14}\n", "quantity", "value"));
    for (name, v) in [
        ("P_load (W)", b.p_load),
        ("P_dissipated (W)", b.p_diss),
        ("P_reradiated (W)", b.p_rerad),
        ("P_total (W)", b.p_total),
        ("reradiation ratio", b.ratio),
    ] {
        out.push_str(&format!("{name:<22} {v:>14.6e}\n"));
    }
    out.push_str(&format!(
        "suggested alpha (coupling {}): {:.6}\n",
        report.coupling, report.suggested_alpha
    ));
    out
}

pub fn format_antenna_json(report: &AntennaReport) -> String {
    serde_json::json!({
        "r_loss": report.circuit.r_loss,
        "r_rad": report.circuit.r_rad,
        "x_a": report.circuit.x_a,
        "v_oc": report.circuit.v_oc,
        "z_load": { "re": report.circuit.z_load.re, "im": report.circuit.z_load.im },
        "p_load": report.breakdown.p_load,
        "p_diss": report.breakdown.p_diss,
        "p_rerad": report.breakdown.p_rerad,
        "p_total": report.breakdown.p_total,
        "ratio": report.breakdown.ratio,
        "coupling": report.coupling,
        "suggested_alpha": report.suggested_alpha,
    })
    .to_string()
}

/// Runs the Gaussian oracle suite and writes one line per case plus a
/// summary. Returns false when any case failed.
pub fn validate_estimators<W: Write>(settings: &OracleSettings, mut out: W) -> Result<bool> {
    let cases = gaussian_oracle_suite(settings)?;
    let mut all_pass = true;
    for case in &cases {
        writeln!(out, "{}", format_oracle_case(case))?;
        all_pass &= case.pass;
    }
    let (passed, total) = (cases.iter().filter(|c| c.pass).count(), cases.len());
    writeln!(
        out,
        "{}: {passed}/{total} cases within {}x stderr",
        if all_pass { "PASS" } else { "FAIL" },
        settings.tol_stderr_mult
    )?;
    Ok(all_pass)
}

fn format_oracle_case(case: &OracleCase) -> String {
    format!(
        "{} case {:>2} d={} : est {:>8.4} bits, truth {:>8.4} bits, err {:+.4}, stderr {:.4} -> {}",
        case.method,
        case.case,
        case.dim,
        case.estimate.bits,
        case.truth_bits,
        case.error_bits(),
        case.estimate.stderr,
        if case.pass { "ok" } else { "FAIL" }
    )
}
