use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helmpso_cli::commands;
use helmpso_cli::config::Settings;
use helmpso_cli::{CliError, EXIT_NUMERICAL};

#[derive(Parser)]
#[command(name = "helmpso", version, about = "Cauchy data completion for the Helmholtz equation by particle swarm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Swarm seed (overrides `pso.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study at three refinement levels.
    ValidateFem(Common),
    /// One reconstruction with oracle comparison.
    Reconstruct(Common),
    /// Reconstruction for each regularization weight in `sweep.etas`.
    RegSweep(Common),
    /// Reconstructions over `noise.levels` x `noise.seeds`.
    NoiseStudy(Common),
    /// Dirichlet and Neumann recovery on both cases.
    CompareDn(Common),
    /// Export the configured mesh as text.
    Mesh(Common),
}

fn settings(c: &Common) -> Result<Settings, CliError> {
    let mut s = match &c.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    if let Some(out) = &c.out {
        s.out_dir = out.clone();
    }
    if let Some(seed) = c.seed {
        s.pso.seed = seed;
    }
    if let Some(k) = c.threads {
        if k == 0 {
            return Err(CliError::Config("--threads: must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, cmd): (&Common, fn(&Settings) -> Result<bool, CliError>) = match &cli.command {
        Command::ValidateFem(c) => (c, commands::cmd_validate_fem),
        Command::Reconstruct(c) => (c, |s| commands::cmd_reconstruct(s).map(|_| true)),
        Command::RegSweep(c) => (c, |s| commands::cmd_reg_sweep(s).map(|_| true)),
        Command::NoiseStudy(c) => (c, |s| commands::cmd_noise_study(s).map(|_| true)),
        Command::CompareDn(c) => (c, |s| commands::cmd_compare_dn(s).map(|_| true)),
        Command::Mesh(c) => (c, |s| commands::cmd_mesh(s).map(|_| true)),
    };
    cmd(&settings(common)?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NUMERICAL as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
