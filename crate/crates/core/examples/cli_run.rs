//! Driving the command layer in-process: train, evaluate, prune and export
//! plot data for a short chain run in a temporary directory.

use std::path::Path;

use rkhs_pg::cli::{run, CliInvocation, Command};

fn main() {
    let out = std::env::temp_dir().join("rkhs-pg-cli-example");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/chain.cfg");
    let mut stdout = std::io::stdout();

    let mut train = CliInvocation::new(Command::Train, &out);
    train.config_path = Some(config.clone());
    train.overrides = vec!["episodes=200".into()];
    assert_eq!(run(&train, &mut stdout), 0);

    let mut eval = CliInvocation::new(Command::Eval, &out);
    eval.config_path = Some(config);
    eval.checkpoint = Some(out.join("checkpoint.json"));
    assert_eq!(run(&eval, &mut stdout), 0);

    let mut prune = CliInvocation::new(Command::Prune, &out);
    prune.checkpoint = Some(out.join("checkpoint.json"));
    prune.epsilon = Some(0.05);
    assert_eq!(run(&prune, &mut stdout), 0);

    assert_eq!(run(&CliInvocation::new(Command::PlotData, &out), &mut stdout), 0);
    println!("outputs in {}", out.display());
}
