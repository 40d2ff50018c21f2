use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reflectkey::cli::{
    antenna_report, format_antenna_json, format_antenna_table, run_to_file, validate_estimators,
};
use reflectkey::config::{Overrides, RunConfig};
use reflectkey::estimators::oracle::OracleSettings;
use reflectkey::records::OutputFormat;

/// Secret-key rate bounds for wireless key generation under antenna
/// re-radiation.
#[derive(Parser)]
#[command(name = "reflectkey", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate rate bounds over a parameter grid from a TOML config.
    Sweep(SweepArgs),
    /// Print the Thevenin power split of a receiving antenna.
    Antenna(AntennaArgs),
    /// Run the Gaussian oracle suite for the entropy estimators.
    ValidateEstimators(ValidateArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep configuration (see recipes/).
    #[arg(long, short)]
    config: PathBuf,
    /// Override run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override run.n_samples.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Override run.n_channel_draws.
    #[arg(long)]
    n_channel_draws: Option<usize>,
    /// Override output.path.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Override output.format (csv | json).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct AntennaArgs {
    /// Loss resistance R_l in ohms.
    #[arg(long, default_value_t = 0.0)]
    r_loss: f64,
    /// Radiation resistance R_r in ohms.
    #[arg(long)]
    r_rad: f64,
    /// Antenna reactance X_A in ohms.
    #[arg(long, default_value_t = 0.0)]
    x_a: f64,
    /// Open-circuit voltage V_OC in volts.
    #[arg(long, default_value_t = 1.0)]
    v_oc: f64,
    /// Coupling factor of the alpha heuristic, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    /// Output format: table | json.
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args)]
struct ValidateArgs {
    /// Seeded cases per estimator (dimensions cycle 1..=4).
    #[arg(long, default_value_t = 8)]
    cases: usize,
    /// Samples per case.
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    /// Neighbor count for the k-NN estimator.
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 0x0c1e_57a7)]
    seed: u64,
}

fn main() -> ExitCode {
    configure_worker_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Honors REFLECTKEY_WORKERS when set; otherwise rayon picks the core count.
fn configure_worker_pool() {
    if let Ok(v) = std::env::var("REFLECTKEY_WORKERS") {
        if let Ok(workers) = v.parse::<usize>() {
            if workers >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global();
            }
        }
    }
}

fn run(cli: Cli) -> reflectkey::Result<ExitCode> {
    match cli.command {
        Command::Sweep(args) => {
            let format = match args.format.as_deref() {
                Some(f) => Some(f.parse::<OutputFormat>()?),
                None => None,
            };
            let overrides = Overrides {
                seed: args.seed,
                n_samples: args.n_samples,
                n_channel_draws: args.n_channel_draws,
                output: args.output,
                format,
            };
            let config = RunConfig::load(&args.config, &overrides)?;
            run_to_file(&config)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Antenna(args) => {
            let report = antenna_report(args.r_loss, args.r_rad, args.x_a, args.v_oc, args.coupling)?;
            match args.format.as_str() {
                "json" => println!("{}", format_antenna_json(&report)),
                _ => print!("{}", format_antenna_table(&report)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateEstimators(args) => {
            let settings = OracleSettings {
                cases: args.cases,
                n: args.n,
                k: args.k,
                seed: args.seed,
                ..OracleSettings::default()
            };
            let ok = validate_estimators(&settings, std::io::stdout().lock())?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
