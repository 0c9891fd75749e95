use rand::{Rng, RngCore};

use super::{check_action, check_state, EnvSpec, Environment, StepResult};
use crate::error::{Error, Result};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const DEFAULT_GOAL: f64 = 0.45;
const POWER: f64 = 0.0015;
const GRAVITY: f64 = 0.0025;
const GOAL_REWARD: f64 = 100.0;
const ACTION_COST: f64 = 0.1;

/// Continuous mountain car. State is `(position, velocity)`, action is a
/// scalar force clipped to `[-1, 1]`.
///
/// Reward per step is `-0.1 * a_clipped^2`, plus 100 on the step that reaches
/// the goal position, after which the state is absorbing.
#[derive(Debug, Clone)]
pub struct MountainCar {
    spec: EnvSpec,
    goal: f64,
}

impl MountainCar {
    pub fn new(goal_position: f64, max_horizon: usize) -> Result<Self> {
        if !(goal_position > MIN_POSITION && goal_position <= MAX_POSITION) {
            return Err(Error::invalid(format!(
                "goal position {goal_position} outside ({MIN_POSITION}, {MAX_POSITION}]"
            )));
        }
        Ok(Self {
            spec: EnvSpec {
                n: 2,
                p: 1,
                reward_bound: GOAL_REWARD,
                max_horizon,
            },
            goal: goal_position,
        })
    }

    pub fn goal(&self) -> f64 {
        self.goal
    }

    pub fn is_terminal(&self, state: &[f64]) -> bool {
        state[0] >= self.goal
    }
}

impl Environment for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.random_range(-0.6..-0.4), 0.0]
    }

    fn step(&self, state: &[f64], action: &[f64], _rng: &mut dyn RngCore) -> Result<StepResult> {
        check_state(state, 2)?;
        check_action(action, 1)?;
        if self.is_terminal(state) {
            return Ok(StepResult {
                next_state: state.to_vec(),
                reward: 0.0,
                terminal: true,
            });
        }
        let (x, v) = (state[0], state[1]);
        let force = action[0].clamp(-1.0, 1.0);
        let mut v = (v + force * POWER - GRAVITY * (3.0 * x).cos()).clamp(-MAX_SPEED, MAX_SPEED);
        let x = (x + v).clamp(MIN_POSITION, MAX_POSITION);
        if x == MIN_POSITION && v < 0.0 {
            v = 0.0;
        }
        let terminal = x >= self.goal;
        let mut reward = -ACTION_COST * force * force;
        if terminal {
            reward += GOAL_REWARD;
        }
        Ok(StepResult {
            next_state: vec![x, v],
            reward,
            terminal,
        })
    }
}
