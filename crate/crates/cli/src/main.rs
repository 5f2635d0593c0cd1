use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rtgrowth_cli::*;

#[derive(Parser)]
#[command(
    name = "rtgrowth",
    version,
    about = "Rayleigh-Taylor growth rates for compressible viscous flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// run configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides output_dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads (overrides jobs; 0 = all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// seed for randomised starts (overrides seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// profile dump and hydrostatic report
    Steady,
    /// alpha curve, growth rate, bounds and growing mode
    Growth,
    /// mode-seeded linearised run (energy ledger for stable profiles)
    EvolveLinear,
    /// full equations from compatible data
    EvolveNonlinear,
    /// escape times over the configured deltas
    Escape,
    /// invariant suite
    Verify,
}

fn run(cli: Cli) -> rtgrowth::Result<bool> {
    let path = cli
        .config
        .ok_or_else(|| rtgrowth::Error::Config("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = resolve_out(&cfg, cli.out);
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .map_err(|e| rtgrowth::Error::InvalidInput(e.to_string()))?;
    }
    Ok(match cli.command {
        Command::Steady => {
            cmd_steady(&cfg, &out)?;
            true
        }
        Command::Growth => {
            cmd_growth(&cfg, &out)?;
            true
        }
        Command::EvolveLinear => cmd_evolve_linear(&cfg, &out)?.passed,
        Command::EvolveNonlinear => {
            cmd_evolve_nonlinear(&cfg, &out)?;
            true
        }
        Command::Escape => cmd_escape(&cfg, &out)?.passed,
        Command::Verify => cmd_verify(&cfg, &out)?.passed,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("rtgrowth: acceptance checks failed; see the report");
            EXIT_CHECKS_FAILED
        }
        Err(e) => {
            eprintln!("rtgrowth: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
