use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heom_core::config::{Mode, RunConfig};
use heom_core::pipeline::{self, RunOptions};
use heom_core::{ErrorClass, HeomError};

/// Driven spin-boson dynamics with HEOM, non-Markovianity witnesses and optimal control.
#[derive(Parser)]
#[command(name = "heom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the reduced density matrix under the configured field.
    Propagate(RunArgs),
    /// Propagate and evaluate the witness suite.
    Witness(RunArgs),
    /// Optimize the field toward the configured target.
    Optimize(RunArgs),
    /// Repeat a run over the values in the [scan] section.
    Scan(RunArgs),
    /// Export the bath correlation function.
    Correlation(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to `output_dir` from the config, then `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the hierarchy right-hand side.
    #[arg(long)]
    threads: Option<usize>,
    /// Attach the witness pipeline.
    #[arg(long)]
    witness: bool,
}

fn exit_code(err: &HeomError) -> u8 {
    match err.class() {
        ErrorClass::Config => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Capacity => 4,
        ErrorClass::Io => 5,
    }
}

fn execute(mode: Mode, args: RunArgs) -> heom_core::Result<()> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(HeomError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HeomError::Config(format!("cannot configure threads: {e}")))?;
    }
    let cfg = RunConfig::load(&args.config)?;
    let out = args.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let manifest = pipeline::run(mode, &cfg, &out, RunOptions { witness: args.witness })?;
    log::info!("wrote {} files to {} in {:.2} s", manifest.outputs.len(), out.display(), manifest.wall_time_s);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Propagate(a) => (Mode::Propagate, a),
        Command::Witness(a) => (Mode::Witness, a),
        Command::Optimize(a) => (Mode::Optimize, a),
        Command::Scan(a) => (Mode::Scan, a),
        Command::Correlation(a) => (Mode::Correlation, a),
    };
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
