mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use bilinear_pdo::ErrorClass;
use clap::{Parser, Subcommand};

use commands::{Common, Status};
use config::UsageError;

/// Bilinear pseudo-differential operators: sampling, transforms, quantizations
/// and verification suites.
#[derive(Parser)]
#[command(name = "bpdo", version)]
struct Cli {
    /// JSON config file, or TOML when the extension is `.toml`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Caps the worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Samples a closed-form function, symbol, window or seeded battery.
    Sample,
    /// Short-time Fourier transform, with optional CSV slices of |V|.
    Stft,
    /// Moves a symbol between quantization pairs.
    Convert,
    /// Applies a linear or bilinear operator.
    Apply,
    /// Weighted mixed modulation norm.
    Modnorm,
    /// Derivative-ladder, STFT-decay and modulation-space class verdicts.
    Classify,
    /// Smooth equivalent of a weight and its derivative bounds.
    SmoothWeight,
    /// Runs verification suites and writes one report per suite.
    Verify {
        /// Suite names, or `all`.
        #[arg(required = true)]
        suites: Vec<String>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<bilinear_pdo::Error>() {
            return match e.class() {
                ErrorClass::Numeric => 1,
                ErrorClass::Usage => 2,
                ErrorClass::Io => 3,
            };
        }
        if cause.is::<UsageError>() {
            return 2;
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            log::warn!("could not cap threads: {e}");
        }
    }
    let common = Common {
        config: cli.config.as_deref(),
        seed: cli.seed,
        out_dir: &cli.out_dir,
    };
    let result = match &cli.command {
        Command::Sample => commands::sample(&common),
        Command::Stft => commands::stft_cmd(&common),
        Command::Convert => commands::convert(&common),
        Command::Apply => commands::apply(&common),
        Command::Modnorm => commands::modnorm(&common),
        Command::Classify => commands::classify(&common),
        Command::SmoothWeight => commands::smooth_weight_cmd(&common),
        Command::Verify { suites } => commands::verify(&common, suites),
    };
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
