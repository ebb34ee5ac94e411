use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

#[derive(Parser)]
#[command(name = "rlcm", version, about = "Longitudinal restricted latent class models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seeds in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate a dataset and its generating values.
    Simulate,
    /// Fit a model and write the chain.
    Fit,
    /// Convergence diagnostics and posterior summaries of a chain.
    Diagnose,
    /// WAIC for one or more chains.
    Waic,
    /// Simulation study: replicate, fit and score recovery.
    Recover,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Diagnose => "diagnose",
            Command::Waic => "waic",
            Command::Recover => "recover",
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let path = cli.config.ok_or("--config is required")?;
    let ctx = commands::Context::load(&path, cli.seed, cli.out)?;
    let outputs = match cli.command {
        Command::Simulate => commands::simulate(&ctx)?,
        Command::Fit => commands::fit(&ctx)?,
        Command::Diagnose => commands::diagnose(&ctx)?,
        Command::Waic => commands::waic_cmd(&ctx)?,
        Command::Recover => commands::recover(&ctx)?,
    };
    let manifest = commands::write_manifest(&ctx, cli.command.name(), &outputs)?;
    for p in outputs.iter().chain([&manifest]) {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut src = e.source();
            while let Some(s) = src {
                msg.push_str(&format!("\n  caused by: {s}"));
                src = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
