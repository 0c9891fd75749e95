use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rkhs_pg::cli::{run, CliInvocation, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Train,
    Eval,
    Prune,
    Constants,
    PlotData,
}

/// Kernel policy gradient experiments.
#[derive(Debug, Parser)]
#[command(name = "rkhs-pg", version)]
struct Args {
    command: Cmd,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` settings applied after the config file.
    #[arg(long, num_args = 1..)]
    overrides: Vec<String>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Train => Command::Train,
        Cmd::Eval => Command::Eval,
        Cmd::Prune => Command::Prune,
        Cmd::Constants => Command::Constants,
        Cmd::PlotData => Command::PlotData,
    };
    let inv = CliInvocation {
        command,
        config_path: args.config,
        overrides: args.overrides,
        out_dir: args.out,
        seed: args.seed,
        checkpoint: args.checkpoint,
        epsilon: args.epsilon,
    };
    let code = run(&inv, &mut std::io::stdout().lock());
    ExitCode::from(code as u8)
}
