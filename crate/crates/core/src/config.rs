//! Flat `key = value` training configuration.
//!
//! ```text
//! # mountain car, projected training
//! env_id = mountain_car
//! gamma = 0.999
//! sigma = 1.3
//! bandwidths = 0.15, 0.015
//! initial_centers = 0.65, -0.02; -0.35, 0.02
//! initial_weights = 0.5; -0.5
//! ```
//!
//! Lists are comma separated; dictionaries list one center (or weight) per
//! `;`-separated row. `#` starts a comment. Unknown keys are rejected. Values
//! not given fall back to defaults chosen per `env_id`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::env::{make_env, ChainMdpSpec, EnvOptions, Environment, ENV_IDS};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, RkhsFunction};
use crate::policy::GaussianPolicy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant,
    /// `eta0 (k + 1)^{-exponent}` with exponent in (0.5, 1].
    Power(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Diminishing steps, dictionary grows by one element per episode.
    Unbiased,
    /// Constant step followed by KOMP each episode.
    Projected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub env_id: String,
    pub gamma: f64,
    pub sigma: Vec<f64>,
    pub bandwidths: Vec<f64>,
    pub eta0: f64,
    pub schedule: Schedule,
    pub epsilon: f64,
    pub episodes: usize,
    pub seed: u64,
    pub initial_centers: Vec<Vec<f64>>,
    pub initial_weights: Vec<Vec<f64>>,
    pub eval_window: usize,
    pub eval_episodes: usize,
    pub max_horizon: usize,
    pub legacy_q_scaling: bool,
    pub checkpoint_every: usize,
    pub goal_position: f64,
    /// Path of a chain JSON document, as written in the config.
    pub chain_spec: Option<String>,
    /// The loaded chain, when `chain_spec` is set.
    pub chain: Option<ChainMdpSpec>,
    pub algorithm: Algorithm,
    /// Write elapsed milliseconds into the metrics; off by default so
    /// reruns produce identical files.
    pub record_wall_ms: bool,
}

pub const KEYS: [&str; 21] = [
    "env_id",
    "algorithm",
    "gamma",
    "sigma",
    "bandwidths",
    "eta0",
    "schedule",
    "decay_exponent",
    "epsilon",
    "episodes",
    "seed",
    "initial_centers",
    "initial_weights",
    "eval_window",
    "eval_episodes",
    "max_horizon",
    "legacy_q_scaling",
    "checkpoint_every",
    "goal_position",
    "chain_spec",
    "record_wall_ms",
];

impl TrainConfig {
    /// Defaults for `env_id`: the standard experiment settings for mountain
    /// car and cartpole (including their `(1 - gamma)`-scaled Q estimates),
    /// and a small unbiased run for the chain.
    pub fn for_env(env_id: &str) -> Result<Self> {
        let base = Self {
            env_id: env_id.to_string(),
            gamma: 0.9,
            sigma: vec![1.0],
            bandwidths: vec![1.0],
            eta0: 0.01,
            schedule: Schedule::Constant,
            epsilon: 0.0,
            episodes: 1000,
            seed: 0,
            initial_centers: Vec::new(),
            initial_weights: Vec::new(),
            eval_window: 100,
            eval_episodes: 100,
            max_horizon: crate::env::DEFAULT_MAX_HORIZON,
            legacy_q_scaling: false,
            checkpoint_every: 1000,
            goal_position: 0.45,
            chain_spec: None,
            chain: None,
            algorithm: Algorithm::Projected,
            record_wall_ms: false,
        };
        match env_id {
            "mountain_car" => Ok(Self {
                gamma: 0.999,
                sigma: vec![1.3],
                bandwidths: vec![0.15, 0.015],
                eta0: 0.0005,
                epsilon: 0.000335,
                legacy_q_scaling: true,
                episodes: 5000,
                initial_centers: vec![vec![0.65, -0.02], vec![-0.35, 0.02]],
                initial_weights: vec![vec![0.5], vec![-0.5]],
                ..base
            }),
            "cartpole" => Ok(Self {
                gamma: 0.95,
                sigma: vec![0.01],
                bandwidths: vec![0.3, 0.1, 0.1, 0.1],
                eta0: 0.00005,
                epsilon: 8.839e-7,
                legacy_q_scaling: true,
                episodes: 10000,
                ..base
            }),
            "chain" => Ok(Self {
                bandwidths: vec![0.25],
                eta0: 0.02,
                schedule: Schedule::Power(0.6),
                episodes: 2000,
                max_horizon: 1000,
                algorithm: Algorithm::Unbiased,
                ..base
            }),
            other => Err(Error::config(
                "env_id",
                format!("unknown environment `{other}` (expected one of {ENV_IDS:?})"),
            )),
        }
    }

    pub fn env_options(&self) -> EnvOptions {
        EnvOptions {
            max_horizon: self.max_horizon,
            goal_position: self.goal_position,
            chain: self.chain.clone(),
        }
    }

    pub fn build_env(&self) -> Result<Box<dyn Environment>> {
        make_env(&self.env_id, &self.env_options())
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.bandwidths.clone()).map_err(|e| Error::config("bandwidths", e.to_string()))
    }

    /// `h_0` from `initial_centers` / `initial_weights` (zero when empty).
    pub fn initial_function(&self, p: usize) -> Result<RkhsFunction> {
        RkhsFunction::from_parts(self.kernel()?, p, &self.initial_centers, &self.initial_weights)
            .map_err(|e| Error::config("initial_centers", e.to_string()))
    }

    pub fn initial_policy(&self, p: usize) -> Result<GaussianPolicy> {
        GaussianPolicy::new(self.initial_function(p)?, self.sigma.clone())
            .map_err(|e| Error::config("sigma", e.to_string()))
    }

    /// Checks every invariant, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(key, msg));
        if !ENV_IDS.contains(&self.env_id.as_str()) {
            return bad("env_id", format!("unknown environment `{}`", self.env_id));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma", format!("must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad("eta0", format!("must be positive, got {}", self.eta0));
        }
        if let Schedule::Power(e) = self.schedule {
            if !(e > 0.5 && e <= 1.0) {
                return bad("decay_exponent", format!("must lie in (0.5, 1], got {e}"));
            }
        }
        match (self.algorithm, self.schedule) {
            (Algorithm::Unbiased, Schedule::Constant) => {
                return bad("schedule", "unbiased training needs the power schedule".into())
            }
            (Algorithm::Projected, Schedule::Power(_)) => {
                return bad("schedule", "projected training needs the constant schedule".into())
            }
            _ => {}
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", format!("must be nonnegative, got {}", self.epsilon));
        }
        if self.eval_window == 0 {
            return bad("eval_window", "must be positive".into());
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes", "must be positive".into());
        }
        if self.max_horizon == 0 {
            return bad("max_horizon", "must be positive".into());
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every", "must be positive".into());
        }
        if self.env_id == "mountain_car" && !(self.goal_position > -1.2 && self.goal_position <= 0.6) {
            return bad("goal_position", format!("must lie in (-1.2, 0.6], got {}", self.goal_position));
        }
        if self.env_id == "chain" && self.chain_spec.is_some() && self.chain.is_none() {
            return bad("chain_spec", "chain document was not loaded".into());
        }
        let env = self.build_env().map_err(|e| {
            let key = if self.env_id == "chain" { "chain_spec" } else { "env_id" };
            Error::config(key, e.to_string())
        })?;
        let spec = env.spec();
        let kernel = self.kernel()?;
        if kernel.dim() != spec.n {
            return bad(
                "bandwidths",
                format!("needs {} entries for `{}`, got {}", spec.n, self.env_id, kernel.dim()),
            );
        }
        if self.sigma.len() != 1 && self.sigma.len() != spec.p {
            return bad("sigma", format!("needs 1 or {} entries, got {}", spec.p, self.sigma.len()));
        }
        if self.initial_centers.len() != self.initial_weights.len() {
            return bad(
                "initial_weights",
                format!(
                    "{} weights for {} centers",
                    self.initial_weights.len(),
                    self.initial_centers.len()
                ),
            );
        }
        if self.initial_centers.iter().any(|c| c.len() != spec.n) {
            return bad("initial_centers", format!("every center needs {} entries", spec.n));
        }
        if self.initial_weights.iter().any(|w| w.len() != spec.p) {
            return bad("initial_weights", format!("every weight needs {} entries", spec.p));
        }
        self.initial_policy(spec.p)?;
        Ok(())
    }

    /// Canonical `(key, value)` pairs; parsing them back gives the same config.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let rows = |v: &[Vec<f64>]| v.iter().map(|r| list(r)).collect::<Vec<_>>().join("; ");
        let (schedule, exponent) = match self.schedule {
            Schedule::Constant => ("constant", None),
            Schedule::Power(e) => ("power", Some(e)),
        };
        let mut out = vec![
            ("env_id", self.env_id.clone()),
            (
                "algorithm",
                match self.algorithm {
                    Algorithm::Unbiased => "unbiased",
                    Algorithm::Projected => "projected",
                }
                .to_string(),
            ),
            ("gamma", self.gamma.to_string()),
            ("sigma", list(&self.sigma)),
            ("bandwidths", list(&self.bandwidths)),
            ("eta0", self.eta0.to_string()),
            ("schedule", schedule.to_string()),
        ];
        if let Some(e) = exponent {
            out.push(("decay_exponent", e.to_string()));
        }
        out.extend([
            ("epsilon", self.epsilon.to_string()),
            ("episodes", self.episodes.to_string()),
            ("seed", self.seed.to_string()),
            ("initial_centers", rows(&self.initial_centers)),
            ("initial_weights", rows(&self.initial_weights)),
            ("eval_window", self.eval_window.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("max_horizon", self.max_horizon.to_string()),
            ("legacy_q_scaling", self.legacy_q_scaling.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("goal_position", self.goal_position.to_string()),
        ]);
        if let Some(path) = &self.chain_spec {
            out.push(("chain_spec", path.clone()));
        }
        out.push(("record_wall_ms", self.record_wall_ms.to_string()));
        out
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.to_pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::config(key, format!("expected a finite number, got `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_f64(key, x)).collect()
}

fn parse_rows(key: &str, v: &str) -> Result<Vec<Vec<f64>>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(';').map(|row| parse_list(key, row)).collect()
}

fn parse_uint<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{v}`"))),
    }
}

/// Splits `key = value` text into ordered pairs, rejecting unknown keys and
/// malformed lines.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(line, format!("line {}: expected `key = value`", lineno + 1))
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    for (k, _) in &out {
        check_key(k)?;
    }
    Ok(out)
}

fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::config(key, "unknown key"))
    }
}

/// Parses one `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::config(s, "override must look like key=value"))?;
    let k = k.trim().to_string();
    check_key(&k)?;
    Ok((k, v.trim().to_string()))
}

/// Builds a validated config from ordered pairs. Later pairs win.
/// Relative `chain_spec` paths resolve against `base_dir`.
pub fn config_from_pairs(pairs: &[(String, String)], base_dir: &Path) -> Result<TrainConfig> {
    let mut map: BTreeMap<&str, &str> = BTreeMap::new();
    for (k, v) in pairs {
        check_key(k)?;
        map.insert(k.as_str(), v.as_str());
    }
    let env_id = map
        .get("env_id")
        .ok_or_else(|| Error::config("env_id", "required"))?;
    let mut cfg = TrainConfig::for_env(env_id.trim())?;
    let mut exponent = match cfg.schedule {
        Schedule::Power(e) => e,
        Schedule::Constant => 0.6,
    };
    let mut schedule = None;
    for (&key, &v) in &map {
        match key {
            "env_id" => {}
            "algorithm" => {
                cfg.algorithm = match v {
                    "unbiased" => Algorithm::Unbiased,
                    "projected" => Algorithm::Projected,
                    _ => return Err(Error::config(key, format!("expected unbiased or projected, got `{v}`"))),
                }
            }
            "gamma" => cfg.gamma = parse_f64(key, v)?,
            "sigma" => cfg.sigma = parse_list(key, v)?,
            "bandwidths" => cfg.bandwidths = parse_list(key, v)?,
            "eta0" => cfg.eta0 = parse_f64(key, v)?,
            "schedule" => schedule = Some(v),
            "decay_exponent" => exponent = parse_f64(key, v)?,
            "epsilon" => cfg.epsilon = parse_f64(key, v)?,
            "episodes" => cfg.episodes = parse_uint(key, v)?,
            "seed" => cfg.seed = parse_uint(key, v)?,
            "initial_centers" => cfg.initial_centers = parse_rows(key, v)?,
            "initial_weights" => cfg.initial_weights = parse_rows(key, v)?,
            "eval_window" => cfg.eval_window = parse_uint(key, v)?,
            "eval_episodes" => cfg.eval_episodes = parse_uint(key, v)?,
            "max_horizon" => cfg.max_horizon = parse_uint(key, v)?,
            "legacy_q_scaling" => cfg.legacy_q_scaling = parse_bool(key, v)?,
            "checkpoint_every" => cfg.checkpoint_every = parse_uint(key, v)?,
            "goal_position" => cfg.goal_position = parse_f64(key, v)?,
            "chain_spec" => cfg.chain_spec = Some(v.to_string()).filter(|s| !s.is_empty()),
            "record_wall_ms" => cfg.record_wall_ms = parse_bool(key, v)?,
            _ => unreachable!("keys checked above"),
        }
    }
    let kind = schedule.unwrap_or(match cfg.schedule {
        Schedule::Constant => "constant",
        Schedule::Power(_) => "power",
    });
    cfg.schedule = match kind {
        "constant" => Schedule::Constant,
        "power" => Schedule::Power(exponent),
        other => {
            return Err(Error::config("schedule", format!("expected constant or power, got `{other}`")))
        }
    };
    if let Some(path) = &cfg.chain_spec {
        let full: PathBuf = base_dir.join(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| Error::config("chain_spec", format!("{}: {e}", full.display())))?;
        cfg.chain =
            Some(ChainMdpSpec::from_json(&text).map_err(|e| Error::config("chain_spec", e.to_string()))?);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads `path`, applies `overrides` (`key=value`) after the file values and
/// validates the result.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
    let mut pairs = parse_pairs(&text)?;
    for o in overrides {
        pairs.push(parse_override(o)?);
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config_from_pairs(&pairs, base)
}
