//! Simulated MDPs with declared reward bounds.
//!
//! Environments are pure transition functions over an explicit state vector.
//! Terminal states are absorbing: stepping one returns the same state with
//! zero reward, so geometric-horizon sums stay well defined.

mod cartpole;
mod chain;
mod mountain_car;

pub use cartpole::CartPole;
pub use chain::{value_iteration, ChainMdp, ChainMdpSpec, ValueTable};
pub use mountain_car::MountainCar;

use rand::RngCore;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_HORIZON: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    /// State dimension.
    pub n: usize,
    /// Action dimension.
    pub p: usize,
    /// `B_r`: every emitted reward satisfies `|r| <= reward_bound`.
    pub reward_bound: f64,
    /// Cap on rollout lengths and geometric draws.
    pub max_horizon: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment: Send + Sync {
    fn spec(&self) -> &EnvSpec;

    /// Draws an initial state.
    fn reset(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Advances one step from `state` under `action`.
    fn step(&self, state: &[f64], action: &[f64], rng: &mut dyn RngCore) -> Result<StepResult>;
}

/// [`Environment::step`] plus a runtime check of the declared reward bound.
pub fn checked_step(
    env: &dyn Environment,
    state: &[f64],
    action: &[f64],
    rng: &mut dyn RngCore,
) -> Result<StepResult> {
    let out = env.step(state, action, rng)?;
    let bound = env.spec().reward_bound;
    if !(out.reward.abs() <= bound) {
        return Err(Error::RewardBound {
            reward: out.reward,
            bound,
        });
    }
    Ok(out)
}

pub(crate) fn check_action(action: &[f64], p: usize) -> Result<()> {
    crate::error::check_dim(p, action.len())?;
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("action must be finite"));
    }
    Ok(())
}

pub(crate) fn check_state(state: &[f64], n: usize) -> Result<()> {
    crate::error::check_dim(n, state.len())?;
    if state.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("state must be finite"));
    }
    Ok(())
}

/// Options used when building an environment from its string id.
#[derive(Debug, Clone)]
pub struct EnvOptions {
    pub max_horizon: usize,
    pub goal_position: f64,
    pub chain: Option<ChainMdpSpec>,
}

impl Default for EnvOptions {
    fn default() -> Self {
        Self {
            max_horizon: DEFAULT_MAX_HORIZON,
            goal_position: mountain_car::DEFAULT_GOAL,
            chain: None,
        }
    }
}

pub const ENV_IDS: [&str; 3] = ["mountain_car", "cartpole", "chain"];

/// Builds `"mountain_car"`, `"cartpole"` or `"chain"`.
pub fn make_env(id: &str, opts: &EnvOptions) -> Result<Box<dyn Environment>> {
    match id {
        "mountain_car" => Ok(Box::new(MountainCar::new(opts.goal_position, opts.max_horizon)?)),
        "cartpole" => Ok(Box::new(CartPole::new(opts.max_horizon))),
        "chain" => {
            let spec = opts.chain.clone().unwrap_or_else(ChainMdpSpec::five_state);
            Ok(Box::new(ChainMdp::new(spec, opts.max_horizon)?))
        }
        other => Err(Error::invalid(format!(
            "unknown environment `{other}` (expected one of {ENV_IDS:?})"
        ))),
    }
}
