use rand::{Rng, RngCore};

use super::{check_action, check_state, EnvSpec, Environment, StepResult};
use crate::error::Result;

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * HALF_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;

/// Cart-pole balancing with Euler integration.
///
/// State is `(x, x_dot, theta, theta_dot)`. The scalar action is mapped to a
/// force of `+10` when `a >= 0` and `-10` otherwise. Every surviving step pays
/// `+1`; the step that fails pays 0 and the failed state is absorbing.
#[derive(Debug, Clone)]
pub struct CartPole {
    spec: EnvSpec,
}

impl CartPole {
    pub fn new(max_horizon: usize) -> Self {
        Self {
            spec: EnvSpec {
                n: 4,
                p: 1,
                reward_bound: 1.0,
                max_horizon,
            },
        }
    }

    pub fn is_terminal(state: &[f64]) -> bool {
        state[0].abs() > X_THRESHOLD || state[2].abs() > THETA_THRESHOLD
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..4).map(|_| rng.random_range(-0.05..=0.05)).collect()
    }

    fn step(&self, state: &[f64], action: &[f64], _rng: &mut dyn RngCore) -> Result<StepResult> {
        check_state(state, 4)?;
        check_action(action, 1)?;
        if Self::is_terminal(state) {
            return Ok(StepResult {
                next_state: state.to_vec(),
                reward: 0.0,
                terminal: true,
            });
        }
        let [x, x_dot, theta, theta_dot] = [state[0], state[1], state[2], state[3]];
        let force = if action[0] >= 0.0 { FORCE_MAG } else { -FORCE_MAG };
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        let next_state = vec![
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        let terminal = Self::is_terminal(&next_state);
        Ok(StepResult {
            next_state,
            reward: if terminal { 0.0 } else { 1.0 },
            terminal,
        })
    }
}
