//! Rollout helpers shared by estimators and evaluation, including the
//! deterministic parallel fan-out used for Monte Carlo batches.

use rand::RngCore;
use rayon::prelude::*;

use crate::env::{checked_step, Environment};
use crate::error::Result;
use crate::policy::GaussianPolicy;
use crate::seeding;

/// Environment variable capping evaluation parallelism.
pub const THREADS_ENV: &str = "RKHS_PG_THREADS";

/// Worker count: `RKHS_PG_THREADS` when set to a positive integer, otherwise
/// rayon's default.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f(i, rng_i)` for `i in 0..count`, where `rng_i` is the `"rollout"`
/// stream `i` of `base_seed`. Results come back in index order regardless of
/// scheduling, so reductions over them are deterministic.
pub fn fan_out<T, F>(base_seed: u64, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut seeding::StreamRng) -> Result<T> + Send + Sync,
{
    let run = || {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = seeding::stream(base_seed, "rollout", i as u64);
                f(i, &mut rng)
            })
            .collect::<Result<Vec<T>>>()
    };
    let threads = thread_cap();
    if threads == rayon::current_num_threads() {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::invalid(e.to_string()))?
            .install(run)
    }
}

/// Sample mean and standard error (n - 1 denominator; 0 for a single sample).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// One episode from a fresh reset, at most `horizon` steps, stopping at the
/// first terminal. Returns `sum_t discount^t r_t`.
pub fn episode_return(
    env: &dyn Environment,
    policy: &GaussianPolicy,
    discount: f64,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut s = env.reset(rng);
    let mut a = vec![0.0; policy.p()];
    let mut total = 0.0;
    let mut weight = 1.0;
    for _ in 0..horizon {
        policy.sample_into(&s, rng, &mut a);
        let out = checked_step(env, &s, &a, rng)?;
        total += weight * out.reward;
        weight *= discount;
        if out.terminal {
            break;
        }
        s = out.next_state;
    }
    Ok(total)
}
