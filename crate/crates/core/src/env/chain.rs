use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_action, check_state, EnvSpec, Environment, StepResult};
use crate::error::{Error, Result};
use crate::policy::GaussianPolicy;

/// Finite chain MDP acting through the sign of a scalar action.
///
/// Action index 0 is taken when `a < 0`, index 1 when `a >= 0`. The policy
/// sees state `s` as the scalar `embedding[s]`, so embeddings must be
/// distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainMdpSpec {
    pub num_states: usize,
    /// `rewards[s] = [r(s, -), r(s, +)]`.
    pub rewards: Vec<[f64; 2]>,
    /// `transitions[s][a][s']` = P(s' | s, a).
    pub transitions: Vec<[Vec<f64>; 2]>,
    pub embedding: Vec<f64>,
}

impl ChainMdpSpec {
    /// Five states on a line. `+` moves right with probability 0.8 at a
    /// cost of 0.05, `-` moves left for free; `+` at the right end pays 1.
    pub fn five_state() -> Self {
        let n = 5;
        let mut transitions = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        for s in 0..n {
            let mut left = vec![0.0; n];
            let mut right = vec![0.0; n];
            left[s.saturating_sub(1)] += 0.8;
            left[s] += 0.2;
            right[(s + 1).min(n - 1)] += 0.8;
            right[s] += 0.2;
            transitions.push([left, right]);
            rewards.push(if s == n - 1 { [0.0, 1.0] } else { [0.0, -0.05] });
        }
        Self {
            num_states: n,
            rewards,
            transitions,
            embedding: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_states;
        if n == 0 {
            return Err(Error::invalid("chain needs at least one state"));
        }
        if self.rewards.len() != n || self.transitions.len() != n || self.embedding.len() != n {
            return Err(Error::invalid(
                "rewards, transitions and embedding must each have num_states entries",
            ));
        }
        if self.rewards.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::invalid("rewards must be finite"));
        }
        for (s, rows) in self.transitions.iter().enumerate() {
            for row in rows {
                if row.len() != n || row.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::invalid(format!("bad transition row for state {s}")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "transition row for state {s} sums to {total}"
                    )));
                }
            }
        }
        for (i, e) in self.embedding.iter().enumerate() {
            if !e.is_finite() || self.embedding[..i].contains(e) {
                return Err(Error::invalid("embeddings must be finite and distinct"));
            }
        }
        Ok(())
    }

    pub fn reward_bound(&self) -> f64 {
        let max = self.rewards.iter().flatten().fold(0.0f64, |m, r| m.max(r.abs()));
        max.max(f64::MIN_POSITIVE)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
pub struct ChainMdp {
    chain: ChainMdpSpec,
    spec: EnvSpec,
}

impl ChainMdp {
    pub fn new(chain: ChainMdpSpec, max_horizon: usize) -> Result<Self> {
        chain.validate()?;
        let spec = EnvSpec {
            n: 1,
            p: 1,
            reward_bound: chain.reward_bound(),
            max_horizon,
        };
        Ok(Self { chain, spec })
    }

    pub fn chain(&self) -> &ChainMdpSpec {
        &self.chain
    }

    pub fn state_vector(&self, index: usize) -> Vec<f64> {
        vec![self.chain.embedding[index]]
    }

    pub fn state_index(&self, state: &[f64]) -> Result<usize> {
        check_state(state, 1)?;
        self.chain
            .embedding
            .iter()
            .position(|e| *e == state[0])
            .ok_or_else(|| Error::invalid(format!("{} is not a chain state", state[0])))
    }

    /// `P(a >= 0 | s) = Phi(h(embedding[s]) / sqrt(sigma))` for each state.
    pub fn sign_probabilities(&self, policy: &GaussianPolicy) -> Result<Vec<f64>> {
        let normal = Normal::standard();
        let sd = policy.sigma()[0].sqrt();
        self.chain
            .embedding
            .iter()
            .map(|e| Ok(normal.cdf(policy.mean().evaluate(&[*e])?[0] / sd)))
            .collect()
    }
}

impl Environment for ChainMdp {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, _rng: &mut dyn RngCore) -> Vec<f64> {
        self.state_vector(0)
    }

    fn step(&self, state: &[f64], action: &[f64], rng: &mut dyn RngCore) -> Result<StepResult> {
        check_action(action, 1)?;
        let s = self.state_index(state)?;
        let a = usize::from(action[0] >= 0.0);
        let row = &self.chain.transitions[s][a];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = self.chain.num_states - 1;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        // Round-off can leave the tail short of 1; land on the last reachable state.
        if u >= acc {
            next = row.iter().rposition(|p| *p > 0.0).unwrap_or(next);
        }
        Ok(StepResult {
            next_state: self.state_vector(next),
            reward: self.chain.rewards[s][a],
            terminal: false,
        })
    }
}

/// Exact state values and sign-action values of a chain under a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub v: Vec<f64>,
    /// `q[s] = [Q(s, -), Q(s, +)]`.
    pub q: Vec<[f64; 2]>,
    pub iterations: usize,
}

impl ValueTable {
    /// Sup-norm Bellman residual of `v` under `sign_prob`.
    pub fn bellman_residual(&self, chain: &ChainMdpSpec, sign_prob: &[f64], gamma: f64) -> f64 {
        let backed = bellman(chain, sign_prob, gamma, &self.v);
        backed
            .iter()
            .zip(&self.v)
            .map(|(b, v)| (b - v).abs())
            .fold(0.0, f64::max)
    }
}

fn action_values(chain: &ChainMdpSpec, gamma: f64, v: &[f64], s: usize) -> [f64; 2] {
    let mut q = [0.0; 2];
    for (a, qa) in q.iter_mut().enumerate() {
        let future: f64 = chain.transitions[s][a].iter().zip(v).map(|(p, vn)| p * vn).sum();
        *qa = chain.rewards[s][a] + gamma * future;
    }
    q
}

fn bellman(chain: &ChainMdpSpec, sign_prob: &[f64], gamma: f64, v: &[f64]) -> Vec<f64> {
    (0..chain.num_states)
        .map(|s| {
            let q = action_values(chain, gamma, v, s);
            (1.0 - sign_prob[s]) * q[0] + sign_prob[s] * q[1]
        })
        .collect()
}

/// Iterates the Bellman operator of the sign-action policy to a fixed point
/// (sup-norm change below 1e-10).
pub fn value_iteration(chain: &ChainMdpSpec, sign_prob: &[f64], gamma: f64) -> Result<ValueTable> {
    chain.validate()?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if sign_prob.len() != chain.num_states || sign_prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("sign_prob must hold one probability per state"));
    }
    let mut v = vec![0.0; chain.num_states];
    let mut iterations = 0;
    loop {
        let next = bellman(chain, sign_prob, gamma, &v);
        iterations += 1;
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if change < 1e-10 {
            break;
        }
    }
    let q = (0..chain.num_states).map(|s| action_values(chain, gamma, &v, s)).collect();
    Ok(ValueTable { v, q, iterations })
}
