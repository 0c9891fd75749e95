//! Command implementations behind the `rkhs-pg` binary.
//!
//! Every command writes only inside `out_dir`. Exit codes: 0 success,
//! 2 configuration error, 3 runtime error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{parse_config, TrainConfig};
use crate::constants::theoretical_constants;
use crate::error::{Error, Result};
use crate::kernel::RkhsFunction;
use crate::komp::komp;
use crate::seeding;
use crate::trainer::{evaluate_policy, parse_metrics_csv, Checkpoint, Trainer, CSV_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const FINAL_CHECKPOINT: &str = "checkpoint.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// `git describe`-style version of this build.
pub fn version_string() -> String {
    option_env!("RKHS_PG_DESCRIBE")
        .map(str::to_string)
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Eval,
    Prune,
    Constants,
    PlotData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub checkpoint: Option<PathBuf>,
    pub epsilon: Option<f64>,
}

impl CliInvocation {
    pub fn new(command: Command, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            config_path: None,
            overrides: Vec::new(),
            out_dir: out_dir.into(),
            seed: None,
            checkpoint: None,
            epsilon: None,
        }
    }

    fn config(&self) -> Result<TrainConfig> {
        let path = self
            .config_path
            .as_ref()
            .ok_or_else(|| Error::config("config", "--config is required for this command"))?;
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        parse_config(path, &overrides)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Runs the command, printing results to `out`, and maps failures to exit codes.
pub fn run(inv: &CliInvocation, out: &mut dyn Write) -> i32 {
    match dispatch(inv, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn dispatch(inv: &CliInvocation, out: &mut dyn Write) -> Result<()> {
    match inv.command {
        Command::Train => run_train(inv, out),
        Command::Eval => run_eval(inv, out),
        Command::Prune => run_prune(inv, out),
        Command::Constants => run_constants(inv, out),
        Command::PlotData => run_plot_data(inv, out),
    }
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    fs::write(path, ck.to_json()? + "\n")?;
    Ok(())
}

/// Trains per the config, streaming `metrics.csv` and writing checkpoints
/// every `checkpoint_every` episodes plus a final `checkpoint.json`.
pub fn run_train(inv: &CliInvocation, out: &mut dyn Write) -> Result<()> {
    let cfg = inv.config()?;
    let env = cfg.build_env()?;
    fs::create_dir_all(inv.out_dir.join(CHECKPOINT_DIR))?;
    let manifest = json!({
        "command": "train",
        "version": version_string(),
        "seed": cfg.seed,
        "config": cfg.to_map(),
    });
    fs::write(
        inv.out_dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;

    let mut csv = BufWriter::new(File::create(inv.out_dir.join(METRICS_FILE))?);
    writeln!(csv, "{CSV_HEADER}")?;
    let mut trainer = Trainer::new(&cfg, env.as_ref())?;
    let mut rng = seeding::stream(cfg.seed, seeding::TRAIN, 0);
    let mut last = None;
    let result = (|| -> Result<()> {
        for _ in 0..cfg.episodes {
            let rec = trainer.step(&mut rng)?;
            writeln!(csv, "{}", rec.csv_row())?;
            if rec.episode % cfg.checkpoint_every == 0 {
                let name = format!("checkpoint_{:07}.json", rec.episode);
                write_checkpoint(&inv.out_dir.join(CHECKPOINT_DIR).join(name), &trainer.checkpoint())?;
            }
            last = Some(rec);
        }
        Ok(())
    })();
    csv.flush()?;
    write_checkpoint(&inv.out_dir.join(FINAL_CHECKPOINT), &trainer.checkpoint())?;
    result?;
    match last {
        Some(r) => writeln!(
            out,
            "episodes {} model_order {} avg_return {}",
            r.episode, r.model_order, r.avg_return
        )?,
        None => writeln!(out, "episodes 0 model_order {}", trainer.policy().mean().len())?,
    }
    Ok(())
}

/// Evaluates the checkpointed policy (or `h_0` without `--checkpoint`) over
/// `eval_episodes` undiscounted episodes on the `"eval"` stream.
pub fn run_eval(inv: &CliInvocation, out: &mut dyn Write) -> Result<()> {
    let cfg = inv.config()?;
    let env = cfg.build_env()?;
    let policy = match &inv.checkpoint {
        Some(path) => Checkpoint::from_json(&fs::read_to_string(path)?)?.policy()?,
        None => cfg.initial_policy(env.spec().p)?,
    };
    let mut rng = seeding::stream(cfg.seed, seeding::EVAL, 0);
    let (mean, se) = evaluate_policy(env.as_ref(), &policy, 1.0, cfg.eval_episodes, &mut rng)?;
    fs::create_dir_all(&inv.out_dir)?;
    let report = json!({
        "episodes": cfg.eval_episodes,
        "mean_return": mean,
        "std_error": se,
        "model_order": policy.mean().len(),
        "seed": cfg.seed,
    });
    fs::write(inv.out_dir.join("eval.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    writeln!(out, "mean_return {mean} std_error {se} episodes {}", cfg.eval_episodes)?;
    Ok(())
}

enum Loaded {
    Checkpoint(Checkpoint),
    Function(RkhsFunction),
}

fn load_policy_file(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path)?;
    match Checkpoint::from_json(&text) {
        Ok(c) => Ok(Loaded::Checkpoint(c)),
        Err(_) => RkhsFunction::from_json(&text)
            .map(Loaded::Function)
            .map_err(|e| Error::Malformed(format!("{}: {e}", path.display()))),
    }
}

/// Prunes a checkpoint (or bare function document) with KOMP and writes
/// `pruned.json` in the same format.
pub fn run_prune(inv: &CliInvocation, out: &mut dyn Write) -> Result<()> {
    let path = inv
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::config("checkpoint", "--checkpoint is required for prune"))?;
    let epsilon = match inv.epsilon {
        Some(e) => e,
        None if inv.config_path.is_some() => inv.config()?.epsilon,
        None => return Err(Error::config("epsilon", "--epsilon is required for prune")),
    };
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::config("epsilon", format!("must be nonnegative, got {epsilon}")));
    }
    let loaded = load_policy_file(path)?;
    let h = match &loaded {
        Loaded::Checkpoint(c) => &c.mean,
        Loaded::Function(f) => f,
    };
    let result = komp(h, epsilon)?;
    let before = h.len();
    let text = match loaded {
        Loaded::Checkpoint(mut c) => {
            c.mean = result.pruned.clone();
            c.to_json()?
        }
        Loaded::Function(_) => result.pruned.to_json()?,
    };
    fs::create_dir_all(&inv.out_dir)?;
    fs::write(inv.out_dir.join("pruned.json"), text + "\n")?;
    writeln!(
        out,
        "M_before {} M_after {} final_error {}",
        before,
        result.pruned.len(),
        result.final_error
    )?;
    Ok(())
}

/// Prints the analysis constants for the config's reward bound, discount,
/// exploration variances, step size and budget.
pub fn run_constants(inv: &CliInvocation, out: &mut dyn Write) -> Result<()> {
    let cfg = inv.config()?;
    let env = cfg.build_env()?;
    let spec = env.spec();
    let k = theoretical_constants(spec.reward_bound, cfg.gamma, &cfg.sigma, spec.p, cfg.eta0, cfg.epsilon)?;
    writeln!(out, "sigma_bound = {}", k.sigma_bound)?;
    writeln!(out, "L1 = {}", k.l1)?;
    writeln!(out, "L2 = {}", k.l2)?;
    writeln!(out, "C = {}", k.c)?;
    writeln!(out, "radius = {}", k.radius)?;
    Ok(())
}

/// Splits `out_dir/metrics.csv` into `avg_return.dat` and `model_order.dat`,
/// two whitespace-separated columns each.
pub fn run_plot_data(inv: &CliInvocation, out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(inv.out_dir.join(METRICS_FILE))?;
    let records = parse_metrics_csv(&text)?;
    let mut avg = String::new();
    let mut order = String::new();
    for r in &records {
        avg.push_str(&format!("{} {}\n", r.episode, r.avg_return));
        order.push_str(&format!("{} {}\n", r.episode, r.model_order));
    }
    fs::write(inv.out_dir.join("avg_return.dat"), avg)?;
    fs::write(inv.out_dir.join("model_order.dat"), order)?;
    writeln!(out, "rows {}", records.len())?;
    Ok(())
}
