use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rdsecrecy_cli::{run, Command, RunArgs};

/// Rate-distortion secrecy experiments driven by TOML configs.
#[derive(Parser)]
#[command(name = "rdsecrecy", version)]
struct Cli {
    /// Worker threads for the library's parallel loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Entropies, mutual informations and capability verdicts of a system.
    Info(Common),
    /// Inner and outer eavesdropper distortion over a grid of p.
    BecbscCurve(Common),
    /// Pareto frontier of the inner bound.
    Region(Common),
    /// End-to-end simulation of the superposition scheme.
    Simulate(Common),
    /// Exact soft-covering total variation over a rate sweep.
    Softcover(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Simulate even if the rates violate the scheme's constraints.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let (command, common) = match cli.command {
        Cmd::Info(c) => (Command::Info, c),
        Cmd::BecbscCurve(c) => (Command::BecbscCurve, c),
        Cmd::Region(c) => (Command::Region, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Softcover(c) => (Command::Softcover, c),
    };
    let args = RunArgs {
        config: common.config,
        out: common.out,
        seed: common.seed,
        force: common.force,
    };
    match run(command, &args) {
        Ok(outcome) => {
            for f in outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
