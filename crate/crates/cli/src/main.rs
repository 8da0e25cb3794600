use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entlqc_cli::{execute, CliError, Command, ExperimentConfig, MethodName, Overrides};

#[derive(Parser)]
#[command(name = "entlqc", version, about = "Entropy-regularized LQ control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for the optimal policy and report stationarity residuals.
    Solve(Common),
    /// Run an optimizer and write its trace.
    Run(Common),
    /// Warm-start IPO on a perturbed instance from the source optimum.
    Transfer(Common),
    /// Compare model-free gradient estimates with the exact gradients.
    ModelfreeCheck(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_method)]
    method: Option<MethodName>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

fn parse_method(s: &str) -> Result<MethodName, String> {
    match MethodName::parse(s) {
        Some(m @ (MethodName::Rpg | MethodName::Ipo | MethodName::Gn)) => Ok(m),
        _ => Err(format!("expected rpg, ipo or gn, got '{s}'")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Run(a) => (Command::Run, a),
        Cmd::Transfer(a) => (Command::Transfer, a),
        Cmd::ModelfreeCheck(a) => (Command::ModelfreeCheck, a),
    };
    let result = ExperimentConfig::load(&args.config).and_then(|mut cfg| {
        cfg.apply(&Overrides {
            out: args.out,
            seed: args.seed,
            method: args.method,
            tau: args.tau,
            max_iters: args.max_iters,
            tol: args.tol,
        });
        execute(cmd, &cfg)
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.headline);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("entlqc {}: {e}", cmd.name());
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &CliError) -> u8 {
    e.exit_code() as u8
}
