//! `hetcache`: evaluate, optimize and simulate probabilistic caching in
//! multi-tier cellular networks from JSON experiment specs.

mod commands;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spec::{Command, ExperimentSpec};

#[derive(Debug, Parser)]
#[command(name = "hetcache", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CommandArg,
}

#[derive(Debug, Subcommand)]
enum CommandArg {
    /// Analytic SDP of a caching policy.
    Eval(RunArgs),
    /// Optimal caching probabilities with a KKT certificate.
    Optimize(RunArgs),
    /// Monte Carlo SDP estimate.
    Simulate(RunArgs),
    /// Density or power versus cache size at a fixed equivalent cache size.
    Tradeoff(RunArgs),
    /// Optimal and baseline SDP over one swept parameter.
    Sweep(RunArgs),
    /// Optimal, popular and uniform caching over Zipf exponents, with simulation.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment spec (JSON). Shipped defaults are used when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// CSV destination; overrides the spec's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulation seed; overrides the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation realizations; overrides the spec.
    #[arg(long)]
    realizations: Option<usize>,
    /// Print the default spec for this command and exit.
    #[arg(long)]
    dump_defaults: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn field(context: impl AsRef<str>, err: hetcache_core::Error) -> Self {
        let msg = format!("{}: {err}", context.as_ref());
        if err.is_numerical() {
            CliError::Numerical(msg)
        } else {
            CliError::Validation(msg)
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<hetcache_core::Error> for CliError {
    fn from(err: hetcache_core::Error) -> Self {
        CliError::field("error", err)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        CommandArg::Eval(a) => (Command::Eval, a),
        CommandArg::Optimize(a) => (Command::Optimize, a),
        CommandArg::Simulate(a) => (Command::Simulate, a),
        CommandArg::Tradeoff(a) => (Command::Tradeoff, a),
        CommandArg::Sweep(a) => (Command::Sweep, a),
        CommandArg::Compare(a) => (Command::Compare, a),
    };
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetcache {}: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command, args: RunArgs) -> Result<(), CliError> {
    if args.dump_defaults {
        let text = ExperimentSpec::defaults(command).to_json();
        return match &args.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        };
    }
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            ExperimentSpec::parse(&text)?
        }
        None => ExperimentSpec::defaults(command),
    };
    if spec.command != command {
        return Err(CliError::Validation(format!(
            "spec is for `{}`, not `{}`",
            spec.command.name(),
            command.name()
        )));
    }
    if let Some(out) = args.out {
        spec.output = Some(out);
    }
    if args.seed.is_some() || args.realizations.is_some() {
        let sim = spec.simulation.get_or_insert_with(Default::default);
        if let Some(seed) = args.seed {
            sim.seed = Some(seed);
        }
        if let Some(n) = args.realizations {
            sim.realizations = Some(n);
        }
    }
    commands::execute(&spec)
}
