//! Geometric-horizon Monte Carlo estimators.
//!
//! A geometric stopping time `T` with `P(T = t) = (1 - gamma) gamma^t`
//! satisfies `P(T >= t) = gamma^t`, so the plain reward sum up to `T` has the
//! discounted return as its expectation. [`estimate_q`] uses this to estimate
//! `Q(s, a; h)` in finitely many steps, and [`stochastic_gradient`] combines
//! two such estimates at a state drawn from the discounted occupancy into a
//! rank-one functional gradient estimate.

use rand::{Rng, RngCore};

use crate::env::{checked_step, Environment};
use crate::error::{check_dim, Error, Result};
use crate::kernel::RkhsFunction;
use crate::policy::GaussianPolicy;
use crate::rollout::{self, fan_out, mean_and_se};

/// Draws `T ~ Geom(gamma)` with `P(T = t) = (1 - gamma) gamma^t` by inversion.
pub fn sample_geometric<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> Result<u64> {
    check_gamma_closed(gamma)?;
    Ok(draw_geometric(gamma, rng))
}

fn check_gamma_closed(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    Ok(())
}

fn draw_geometric<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> u64 {
    if gamma == 0.0 {
        return 0;
    }
    // u in (0, 1]; T = floor(ln u / ln gamma) gives P(T >= t) = P(u <= gamma^t).
    let u = 1.0 - rng.random::<f64>();
    let t = (u.ln() / gamma.ln()).floor();
    if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        t as u64
    }
}

/// Geometric horizon sampler with a hard cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricHorizon {
    gamma: f64,
    cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HorizonDraw {
    pub steps: usize,
    /// The raw draw exceeded the cap and was truncated to it.
    pub capped: bool,
}

impl GeometricHorizon {
    pub fn new(gamma: f64, cap: usize) -> Result<Self> {
        check_gamma_closed(gamma)?;
        Ok(Self { gamma, cap })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HorizonDraw {
        let raw = draw_geometric(self.gamma, rng);
        if raw > self.cap as u64 {
            HorizonDraw {
                steps: self.cap,
                capped: true,
            }
        } else {
            HorizonDraw {
                steps: raw as usize,
                capped: false,
            }
        }
    }
}

/// Settings shared by the Q and gradient estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub gamma: f64,
    /// Cap on every geometric draw.
    pub max_horizon: usize,
    /// Multiply Q estimates by `(1 - gamma)`. This biases `E[Q_hat]` to
    /// `(1 - gamma) Q` and is kept only to reproduce the legacy step-size
    /// scaling.
    pub legacy_q_scaling: bool,
}

impl EstimatorConfig {
    pub fn new(gamma: f64, max_horizon: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        Ok(Self {
            gamma,
            max_horizon,
            legacy_q_scaling: false,
        })
    }

    pub fn with_legacy_q_scaling(mut self, on: bool) -> Self {
        self.legacy_q_scaling = on;
        self
    }

    fn horizon(&self) -> GeometricHorizon {
        GeometricHorizon {
            gamma: self.gamma,
            cap: self.max_horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QEstimate {
    /// The Q estimate (scaled by `1 - gamma` only under legacy scaling).
    pub value: f64,
    /// Unscaled sum of the collected rewards.
    pub raw_sum: f64,
    /// `T_Q`.
    pub steps: usize,
    /// `s_{T_Q}`.
    pub end_state: Vec<f64>,
    pub capped: bool,
}

/// Unbiased estimate of `Q(s, a; h)`: start at `(s, a)`, follow the policy,
/// and sum the `T_Q + 1` rewards `r(s_0, a_0), ..., r(s_{T_Q}, a_{T_Q})`.
pub fn estimate_q(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    s: &[f64],
    a: &[f64],
    cfg: &EstimatorConfig,
    rng: &mut dyn RngCore,
) -> Result<QEstimate> {
    check_dim(env.spec().n, s.len())?;
    check_dim(env.spec().p, a.len())?;
    let draw = cfg.horizon().sample(rng);
    let mut state = s.to_vec();
    let mut action = a.to_vec();
    let mut total = 0.0;
    for t in 0..=draw.steps {
        if t > 0 {
            policy.sample_into(&state, rng, &mut action);
        }
        let out = checked_step(env, &state, &action, rng)?;
        total += out.reward;
        if t == draw.steps {
            break;
        }
        if out.terminal {
            // Absorbing from here on: every later reward is zero.
            state = out.next_state;
            break;
        }
        state = out.next_state;
    }
    let value = if cfg.legacy_q_scaling {
        (1.0 - cfg.gamma) * total
    } else {
        total
    };
    Ok(QEstimate {
        value,
        raw_sum: total,
        steps: draw.steps,
        end_state: state,
        capped: draw.capped,
    })
}

/// `(q_plus - q_minus) / (2 (1 - gamma)) * Sigma^{-1} (a - h(s))`.
pub fn symmetric_gradient_coeff(
    policy: &GaussianPolicy,
    state: &[f64],
    action: &[f64],
    q_plus: f64,
    q_minus: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    let scale = (q_plus - q_minus) / (2.0 * (1.0 - gamma));
    Ok(policy
        .score_direction(state, action)?
        .into_iter()
        .map(|z| scale * z)
        .collect())
}

/// Rank-one estimate `coeff * k(center, .)` of the functional gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    /// The visited state `s_T`.
    pub center: Vec<f64>,
    pub coeff: Vec<f64>,
    /// The sampled action `a_T`.
    pub action: Vec<f64>,
    pub q_plus: QEstimate,
    pub q_minus: QEstimate,
    /// `T`.
    pub steps: usize,
    /// Undiscounted return of the trajectory reset -> `s_T` followed by the
    /// `Q_hat(s_T, a_T)` rollout.
    pub rollout_return: f64,
    /// Geometric draws that hit the horizon cap (0 to 3).
    pub horizon_caps: usize,
}

impl GradientEstimate {
    /// `T + T_Q + T'_Q`.
    pub fn q_steps(&self) -> usize {
        self.steps + self.q_plus.steps + self.q_minus.steps
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.iter().all(|c| *c == 0.0)
    }

    /// The estimate as an RKHS element.
    pub fn to_function(&self, policy: &GaussianPolicy) -> Result<RkhsFunction> {
        RkhsFunction::zero(policy.mean().kernel().clone(), policy.p())
            .add_scaled_kernel(&self.center, &self.coeff)
    }
}

/// Symmetric two-sample stochastic gradient: run `T ~ Geom(gamma)` steps from
/// `start_state`, then difference independent Q estimates at `(s_T, a_T)` and
/// at the reflected action `(s_T, 2 h(s_T) - a_T)`.
pub fn stochastic_gradient(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    cfg: &EstimatorConfig,
    rng: &mut dyn RngCore,
    start_state: &[f64],
) -> Result<GradientEstimate> {
    check_dim(env.spec().n, start_state.len())?;
    let draw = cfg.horizon().sample(rng);
    let mut state = start_state.to_vec();
    let mut action = vec![0.0; policy.p()];
    policy.sample_into(&state, rng, &mut action);
    let mut prefix = 0.0;
    for _ in 0..draw.steps {
        let out = checked_step(env, &state, &action, rng)?;
        prefix += out.reward;
        state = out.next_state;
        policy.sample_into(&state, rng, &mut action);
    }
    let q_plus = estimate_q(env, policy, &state, &action, cfg, rng)?;
    let mirrored = policy.symmetric_action(&state, &action)?;
    let q_minus = estimate_q(env, policy, &state, &mirrored, cfg, rng)?;
    let coeff =
        symmetric_gradient_coeff(policy, &state, &action, q_plus.value, q_minus.value, cfg.gamma)?;
    if coeff.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("non-finite gradient coefficient"));
    }
    let horizon_caps =
        usize::from(draw.capped) + usize::from(q_plus.capped) + usize::from(q_minus.capped);
    Ok(GradientEstimate {
        rollout_return: prefix + q_plus.raw_sum,
        center: state,
        coeff,
        action,
        q_plus,
        q_minus,
        steps: draw.steps,
        horizon_caps,
    })
}

/// Truncated Monte Carlo estimate of `U(h) = E[sum_t gamma^t r_t]` from
/// fresh resets. Returns `(mean, standard error)`.
///
/// Fails when the truncation bias bound `gamma^horizon B_r / (1 - gamma)`
/// exceeds `tolerance`.
pub fn estimate_u(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    gamma: f64,
    rng: &mut dyn RngCore,
    num_rollouts: usize,
    horizon: usize,
    tolerance: f64,
) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let bias = gamma.powf(horizon as f64) * env.spec().reward_bound / (1.0 - gamma);
    if bias > tolerance {
        return Err(Error::invalid(format!(
            "horizon {horizon} too short: truncation bias bound {bias:e} exceeds {tolerance:e}"
        )));
    }
    let base = rng.next_u64();
    let returns = fan_out(base, num_rollouts, |_, r| {
        rollout::episode_return(env, policy, gamma, horizon, r)
    })?;
    Ok(mean_and_se(&returns))
}
