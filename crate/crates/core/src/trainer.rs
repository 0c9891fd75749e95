//! Training loops, step-size schedules, evaluation and run artifacts.
//!
//! Each episode draws a fresh initial state, builds one stochastic gradient
//! and appends `eta_k * coeff` at the visited state. The projected variant
//! then compresses the iterate with KOMP at budget `epsilon`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use crate::config::{Algorithm, Schedule, TrainConfig};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::estimators::{stochastic_gradient, EstimatorConfig};
use crate::kernel::RkhsFunction;
use crate::komp::komp;
use crate::policy::GaussianPolicy;
use crate::rollout::{episode_return, fan_out, mean_and_se};
use crate::seeding::{self, StreamRng};

/// Slack on the per-episode pruning bias check.
pub const BIAS_SLACK: f64 = 1e-8;

/// `eta_k`: `eta0` for the constant schedule, `eta0 (k + 1)^{-exponent}`
/// for the power schedule.
pub fn step_size(config: &TrainConfig, k: usize) -> f64 {
    match config.schedule {
        Schedule::Constant => config.eta0,
        Schedule::Power(e) => config.eta0 * ((k + 1) as f64).powf(-e),
    }
}

pub const CSV_HEADER: &str =
    "episode,return,avg_return,model_order,coeff_norm,q_steps,horizon_caps,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// 1-based episode number.
    pub episode: usize,
    /// Undiscounted return of the gradient rollout.
    pub episode_return: f64,
    /// Mean of the last `eval_window` episode returns.
    pub avg_return: f64,
    /// Dictionary size after the update.
    pub model_order: usize,
    /// `|eta_k coeff|`, the norm of the appended weight.
    pub coeff_norm: f64,
    pub q_steps: usize,
    pub horizon_caps: usize,
    pub wall_ms: u64,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.episode,
            self.episode_return,
            self.avg_return,
            self.model_order,
            self.coeff_norm,
            self.q_steps,
            self.horizon_caps,
            self.wall_ms
        )
    }

    fn parse_row(line: &str, lineno: usize) -> Result<Self> {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| Error::Malformed(format!("metrics line {lineno}: {what}"));
        if cols.len() != 8 {
            return Err(bad(&format!("expected 8 columns, got {}", cols.len())));
        }
        let int = |i: usize| cols[i].trim().parse::<usize>().map_err(|_| bad(&format!("bad integer `{}`", cols[i])));
        let real = |i: usize| cols[i].trim().parse::<f64>().map_err(|_| bad(&format!("bad number `{}`", cols[i])));
        Ok(Self {
            episode: int(0)?,
            episode_return: real(1)?,
            avg_return: real(2)?,
            model_order: int(3)?,
            coeff_norm: real(4)?,
            q_steps: int(5)?,
            horizon_caps: int(6)?,
            wall_ms: int(7)? as u64,
        })
    }
}

pub fn metrics_to_csv(records: &[MetricsRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

/// Parses a metrics CSV written by [`metrics_to_csv`].
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        Some(h) => return Err(Error::Malformed(format!("unexpected metrics header `{h}`"))),
        None => return Err(Error::Malformed("empty metrics file".into())),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| MetricsRecord::parse_row(l, i + 2))
        .collect()
}

/// Saved policy: the mean function, the exploration variances and the
/// configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub episode: usize,
    pub mean: RkhsFunction,
    pub sigma: Vec<f64>,
    pub config_echo: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn policy(&self) -> Result<GaussianPolicy> {
        GaussianPolicy::new(self.mean.clone(), self.sigma.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.policy()?;
        Ok(c)
    }
}

/// Episode-by-episode driver. Initial states come from the `"env"` stream of
/// the config seed; everything else draws from the rng passed to [`step`].
///
/// [`step`]: Trainer::step
pub struct Trainer<'a> {
    config: TrainConfig,
    env: &'a dyn Environment,
    policy: GaussianPolicy,
    estimator: EstimatorConfig,
    reset_rng: StreamRng,
    episode: usize,
    window: VecDeque<f64>,
    started: Instant,
}

impl<'a> Trainer<'a> {
    /// Starts from `h_0` as configured.
    pub fn new(config: &TrainConfig, env: &'a dyn Environment) -> Result<Self> {
        let policy = config.initial_policy(env.spec().p)?;
        Self::with_policy(config, env, policy)
    }

    pub fn with_policy(config: &TrainConfig, env: &'a dyn Environment, policy: GaussianPolicy) -> Result<Self> {
        config.validate()?;
        if policy.n() != env.spec().n || policy.p() != env.spec().p {
            return Err(Error::DimensionMismatch {
                expected: env.spec().n,
                got: policy.n(),
            });
        }
        let estimator = EstimatorConfig::new(config.gamma, config.max_horizon)?
            .with_legacy_q_scaling(config.legacy_q_scaling);
        Ok(Self {
            config: config.clone(),
            env,
            policy,
            estimator,
            reset_rng: seeding::stream(config.seed, seeding::ENV, 0),
            episode: 0,
            window: VecDeque::with_capacity(config.eval_window),
            started: Instant::now(),
        })
    }

    pub fn policy(&self) -> &GaussianPolicy {
        &self.policy
    }

    pub fn into_policy(self) -> GaussianPolicy {
        self.policy
    }

    /// Episodes completed so far.
    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// One gradient step (plus compression when projected).
    pub fn step(&mut self, rng: &mut dyn RngCore) -> Result<MetricsRecord> {
        let eta = step_size(&self.config, self.episode);
        let s0 = self.env.reset(&mut self.reset_rng);
        let g = stochastic_gradient(self.env, &self.policy, &self.estimator, rng, &s0)?;
        let weight: Vec<f64> = g.coeff.iter().map(|c| eta * c).collect();
        let coeff_norm = weight.iter().map(|w| w * w).sum::<f64>().sqrt();
        let mut mean = if g.is_zero() {
            self.policy.mean().clone()
        } else {
            self.policy.mean().add_scaled_kernel(&g.center, &weight)?
        };
        if self.config.algorithm == Algorithm::Projected {
            let pruned = komp(&mean, self.config.epsilon)?;
            if pruned.final_error > self.config.epsilon + BIAS_SLACK {
                return Err(Error::invalid(format!(
                    "pruning bias {} exceeds budget {}",
                    pruned.final_error, self.config.epsilon
                )));
            }
            mean = pruned.pruned;
        }
        self.policy = self.policy.with_mean(mean)?;
        self.episode += 1;

        if self.window.len() == self.config.eval_window {
            self.window.pop_front();
        }
        self.window.push_back(g.rollout_return);
        let avg_return = self.window.iter().sum::<f64>() / self.window.len() as f64;
        Ok(MetricsRecord {
            episode: self.episode,
            episode_return: g.rollout_return,
            avg_return,
            model_order: self.policy.mean().len(),
            coeff_norm,
            q_steps: g.q_steps(),
            horizon_caps: g.horizon_caps,
            wall_ms: if self.config.record_wall_ms {
                self.started.elapsed().as_millis() as u64
            } else {
                0
            },
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            episode: self.episode,
            mean: self.policy.mean().clone(),
            sigma: self.policy.sigma().to_vec(),
            config_echo: self.config.to_map(),
        }
    }
}

fn run(config: &TrainConfig, env: &dyn Environment, rng: &mut dyn RngCore) -> Result<(GaussianPolicy, Vec<MetricsRecord>)> {
    let mut trainer = Trainer::new(config, env)?;
    let mut metrics = Vec::with_capacity(config.episodes);
    for _ in 0..config.episodes {
        metrics.push(trainer.step(rng)?);
    }
    Ok((trainer.into_policy(), metrics))
}

/// Diminishing-step ascent with an unbounded dictionary. Needs the power
/// schedule.
pub fn train_unbiased(
    config: &TrainConfig,
    env: &dyn Environment,
    rng: &mut dyn RngCore,
) -> Result<(GaussianPolicy, Vec<MetricsRecord>)> {
    let mut cfg = config.clone();
    cfg.algorithm = Algorithm::Unbiased;
    if !matches!(cfg.schedule, Schedule::Power(_)) {
        return Err(Error::config("schedule", "unbiased training needs the power schedule"));
    }
    run(&cfg, env, rng)
}

/// Constant-step ascent with KOMP after every step. Needs the constant
/// schedule.
pub fn train_projected(
    config: &TrainConfig,
    env: &dyn Environment,
    rng: &mut dyn RngCore,
) -> Result<(GaussianPolicy, Vec<MetricsRecord>)> {
    let mut cfg = config.clone();
    cfg.algorithm = Algorithm::Projected;
    if cfg.schedule != Schedule::Constant {
        return Err(Error::config("schedule", "projected training needs the constant schedule"));
    }
    run(&cfg, env, rng)
}

/// Runs whichever algorithm `config.algorithm` names.
pub fn train(
    config: &TrainConfig,
    env: &dyn Environment,
    rng: &mut dyn RngCore,
) -> Result<(GaussianPolicy, Vec<MetricsRecord>)> {
    match config.algorithm {
        Algorithm::Unbiased => train_unbiased(config, env, rng),
        Algorithm::Projected => train_projected(config, env, rng),
    }
}

/// Mean and standard error of `sum_t discount^t r_t` over `episodes` fresh
/// episodes of at most `env.spec().max_horizon` steps. `discount = 1` gives
/// undiscounted returns. Rollouts run in parallel on derived streams and are
/// reduced in rollout order.
pub fn evaluate_policy(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    discount: f64,
    episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<(f64, f64)> {
    if episodes == 0 {
        return Err(Error::invalid("need at least one evaluation episode"));
    }
    if !(0.0..=1.0).contains(&discount) {
        return Err(Error::invalid(format!("discount must lie in [0, 1], got {discount}")));
    }
    let horizon = env.spec().max_horizon;
    let base = rng.next_u64();
    let returns = fan_out(base, episodes, |_, r| episode_return(env, policy, discount, horizon, r))?;
    Ok(mean_and_se(&returns))
}
