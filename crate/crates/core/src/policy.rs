//! Gaussian exploration policy `a ~ N(h(s), diag(sigma))`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::kernel::RkhsFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    mean: RkhsFunction,
    sigma: Vec<f64>,
    sigma_sqrt: Vec<f64>,
}

impl GaussianPolicy {
    /// `sigma` holds the diagonal of the exploration covariance (variances).
    /// A length-one `sigma` is broadcast to every action coordinate.
    pub fn new(mean: RkhsFunction, sigma: Vec<f64>) -> Result<Self> {
        let sigma = if sigma.len() == 1 && mean.p() > 1 {
            vec![sigma[0]; mean.p()]
        } else {
            sigma
        };
        check_dim(mean.p(), sigma.len())?;
        if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!("sigma entries must be positive, got {s}")));
        }
        let sigma_sqrt = sigma.iter().map(|s| s.sqrt()).collect();
        Ok(Self {
            mean,
            sigma,
            sigma_sqrt,
        })
    }

    pub fn mean(&self) -> &RkhsFunction {
        &self.mean
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Smallest eigenvalue of the (diagonal) covariance.
    pub fn lambda_min(&self) -> f64 {
        self.sigma.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn with_mean(&self, mean: RkhsFunction) -> Result<Self> {
        Self::new(mean, self.sigma.clone())
    }

    pub fn n(&self) -> usize {
        self.mean.n()
    }

    pub fn p(&self) -> usize {
        self.mean.p()
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, s: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        check_dim(self.n(), s.len())?;
        let mut a = vec![0.0; self.p()];
        self.sample_into(s, rng, &mut a);
        Ok(a)
    }

    /// `a = h(s) + sigma^{1/2} z`, writing into `out`.
    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, s: &[f64], rng: &mut R, out: &mut [f64]) {
        self.mean.evaluate_into(s, out);
        for (o, sd) in out.iter_mut().zip(&self.sigma_sqrt) {
            let z: f64 = rng.sample(StandardNormal);
            *o += sd * z;
        }
    }

    /// Reflection of `a` about the mean: `h(s) - (a - h(s))`.
    pub fn symmetric_action(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.p(), a.len())?;
        let h = self.mean.evaluate(s)?;
        Ok(h.iter().zip(a).map(|(hi, ai)| hi - (ai - hi)).collect())
    }

    /// Score direction `zeta = Sigma^{-1} (a - h(s))`.
    pub fn score_direction(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.p(), a.len())?;
        let h = self.mean.evaluate(s)?;
        Ok(h.iter()
            .zip(a)
            .zip(&self.sigma)
            .map(|((hi, ai), si)| (ai - hi) / si)
            .collect())
    }
}
