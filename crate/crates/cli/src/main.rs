use std::path::PathBuf;
use std::process::ExitCode;

use adaptsc::{load, run, Command, ConfigError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Adaptive sparse-grid collocation for parametric time-dependent problems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the per-point solves.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Scalar complex ODE study: moments, interpolation and timestepping errors.
    OdeDemo,
    /// The adaptive algorithm on the configured problem.
    RunAdaptive,
    /// Fixed-set high-fidelity solve at the reference times.
    Reference,
    /// Reference solve plus adaptive run, comparing error and estimate.
    Effectivity,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.command {
        Cmd::OdeDemo => Command::OdeDemo,
        Cmd::RunAdaptive => Command::RunAdaptive,
        Cmd::Reference => Command::Reference,
        Cmd::Effectivity => Command::Effectivity,
    };
    let cfg = match &cli.config {
        Some(path) => match load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
        },
        None if cmd == Command::OdeDemo => adaptsc::parse("").expect("empty config is valid"),
        None => {
            eprintln!("--config is required for this subcommand");
            return ExitCode::from(1);
        }
    };
    let out = cli.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    if cli.threads == 0 {
        eprintln!("--threads must be at least 1");
        return ExitCode::from(1);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker threads: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cmd, &cfg, &out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
