mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;
use sha2::{Digest, Sha256};

use commands::{Command, Outputs};
use config::RunConfig;
use error::CliError;

const DEFAULT_OUT: &str = "streamgov-out";

/// Temporal, spectral, alignment, eigenspectrum and spatial analysis of
/// daily streamflow collections.
#[derive(Debug, Parser)]
#[command(name = "streamgov", version, about)]
struct Cli {
    /// Analysis to run.
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `threads`; default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    chrono::DateTime::from_timestamp(secs as i64, 0)
        .map(|t| t.to_rfc3339())
        .unwrap_or_default()
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let (cfg, config_bytes) = RunConfig::load(&cli.config)?;
    let threads = match cli.threads.or(cfg.threads) {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    commands::check_output_location(cli.command, &cfg, &out_dir)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| streamgov::Error::Io {
        path: out_dir.clone(),
        source: e,
    })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} threads: {e}")))?;
    let mut outputs = Outputs::new(out_dir);
    pool.install(|| commands::run(cli.command, &cfg, &mut outputs))?;

    outputs.files.sort();
    let digests = commands::file_digests(&outputs.root, &outputs.files)?;
    let manifest = json!({
        "subcommand": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": sha256_hex(&config_bytes),
        "files": digests,
        "timestamp": timestamp(),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    streamgov::output::write_json(&outputs.root.join("manifest.json"), &manifest)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("streamgov {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
