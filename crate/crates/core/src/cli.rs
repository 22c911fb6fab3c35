//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime
//! fault.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::experiment::{self, ExperimentConfig, ExperimentError, FULL_SIZES};
use crate::metrics::CSV_HEADER;
use crate::strategy::Strategy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "swarm-energy",
    version,
    about = "Energy-aware swarm foraging simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and print its CSV row.
    Run {
        #[arg(long, default_value = "adaptive-null")]
        strategy: String,
        #[arg(long, default_value_t = 16)]
        swarm_size: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Config file, or `default`.
        #[arg(long, default_value = "default")]
        config: PathBuf,
        /// Also write header and row to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the tab-separated event log here.
        #[arg(long)]
        log_events: Option<PathBuf>,
    },
    /// Run every (strategy, swarm size, replicate) combination.
    Sweep {
        #[arg(long, default_value = "default")]
        config: PathBuf,
        /// Overrides the output path from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep swarm sizes 2 through 256.
        #[arg(long)]
        full: bool,
    },
    /// Check a config file and exit.
    Validate {
        #[arg(long, default_value = "default")]
        config: PathBuf,
    },
}

fn fault_code(err: &ExperimentError) -> i32 {
    match err {
        ExperimentError::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Runs the CLI against explicit arguments and output streams.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };

    match cli.command {
        Command::Run {
            strategy,
            swarm_size,
            seed,
            config,
            out,
            log_events,
        } => {
            let strategy: Strategy = match strategy.parse() {
                Ok(s) => s,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_CONFIG;
                }
            };
            if swarm_size == 0 {
                let _ = writeln!(stderr, "error: --swarm-size must be > 0");
                return EXIT_CONFIG;
            }
            let config = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let (record, log) =
                match experiment::run_single(&config.sim, strategy, swarm_size, seed) {
                    Ok(r) => r,
                    Err(e) => {
                        let _ = writeln!(stderr, "error: {e}");
                        return fault_code(&e);
                    }
                };
            let _ = writeln!(stdout, "{}", record.csv_row().join(","));
            if let Some(path) = out {
                if let Err(e) = experiment::write_records(&path, std::slice::from_ref(&record)) {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_RUNTIME;
                }
            }
            if let Some(path) = log_events {
                let written = std::fs::File::create(&path)
                    .map(std::io::BufWriter::new)
                    .and_then(|f| log.write_tsv(f));
                if let Err(e) = written {
                    let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                    return EXIT_RUNTIME;
                }
            }
            EXIT_OK
        }
        Command::Sweep { config, out, full } => {
            let mut config = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_CONFIG;
                }
            };
            if let Some(out) = out {
                config.out = out;
            }
            if full {
                config.sizes = FULL_SIZES.to_vec();
            }
            match experiment::run_sweep(&config) {
                Ok(result) => {
                    let _ = writeln!(
                        stdout,
                        "{:<14} {:>4} {:>3} {:>12} {:>12}",
                        "strategy", "K", "n", "eta", "eta_prime"
                    );
                    for s in &result.summaries {
                        let _ = writeln!(
                            stdout,
                            "{:<14} {:>4} {:>3} {:>12.6} {:>12.4}",
                            s.strategy, s.swarm_size, s.count, s.eta.mean, s.eta_prime.mean
                        );
                    }
                    let _ = writeln!(
                        stdout,
                        "wrote {} rows ({}) to {}",
                        result.records.len(),
                        CSV_HEADER.join(","),
                        config.out.display()
                    );
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    fault_code(&e)
                }
            }
        }
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(c) => {
                let _ = writeln!(
                    stdout,
                    "ok: {} strategies x {} sizes x {} replicates",
                    c.strategies.len(),
                    c.sizes.len(),
                    c.replicates
                );
                EXIT_OK
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                EXIT_CONFIG
            }
        },
    }
}
