//! Closed-form constants of the convergence analysis, as diagnostics.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalConstants {
    /// Second-moment bound on the stochastic gradient norm.
    pub sigma_bound: f64,
    /// Lipschitz constant of the functional gradient.
    pub l1: f64,
    /// Lipschitz constant of the gradient's Hessian-like term.
    pub l2: f64,
    pub c: f64,
    /// Radius of the neighborhood `liminf ||grad U||` is driven into.
    pub radius: f64,
}

/// `(4 Gamma(2 + p/2) / Gamma(p/2))^{1/4}`, evaluated in log space.
pub fn gamma_factor(p: usize) -> f64 {
    let half = p as f64 / 2.0;
    ((4.0f64).ln() + ln_gamma(2.0 + half) - ln_gamma(half)).exp().powf(0.25)
}

/// Radius `eps/(2 eta) + sqrt(eps^2 + 4 eta^3 C)/(2 eta)`.
pub fn radius(eta: f64, epsilon: f64, c: f64) -> f64 {
    epsilon / (2.0 * eta) + (epsilon * epsilon + 4.0 * eta.powi(3) * c).sqrt() / (2.0 * eta)
}

/// Evaluates the bounds for reward bound `b_r`, discount `gamma`, diagonal
/// exploration variances `sigma` (length `p`, or one entry broadcast), step
/// size `eta` and compression budget `epsilon`.
///
/// The moment bound carries the factor `b_r` from its derivation (the reward
/// enters the gradient estimate linearly).
pub fn theoretical_constants(
    b_r: f64,
    gamma: f64,
    sigma: &[f64],
    p: usize,
    eta: f64,
    epsilon: f64,
) -> Result<TheoreticalConstants> {
    if !(b_r > 0.0 && b_r.is_finite()) {
        return Err(Error::invalid(format!("reward bound must be positive, got {b_r}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if p == 0 {
        return Err(Error::invalid("p must be positive"));
    }
    if sigma.is_empty() || (sigma.len() != 1 && sigma.len() != p) {
        return Err(Error::invalid(format!(
            "sigma needs 1 or {p} entries, got {}",
            sigma.len()
        )));
    }
    if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("sigma entries must be positive and finite"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let lmin = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    let pf = p as f64;
    let g1 = 1.0 - gamma;
    let l1 = b_r * (g1 + pf * (1.0 + gamma)) / (lmin * g1.powi(3));
    let l2 = b_r * (1.0 + gamma) * pf.sqrt() / (lmin.powf(1.5) * g1.powi(3));
    let sigma_bound = b_r * (3.0 * gamma).cbrt() / (g1 * g1) / lmin.sqrt() * gamma_factor(p);
    let r = epsilon / eta;
    let inner = sigma_bound * sigma_bound + 2.0 * r * sigma_bound + r * r;
    let c = l1 * inner + eta * l2 * inner.powf(1.5);
    Ok(TheoreticalConstants {
        sigma_bound,
        l1,
        l2,
        c,
        radius: radius(eta, epsilon, c),
    })
}
