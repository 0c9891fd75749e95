//! Policy gradient in reproducing kernel Hilbert spaces.
//!
//! Gaussian policies whose mean is a vector-valued kernel expansion are
//! trained by stochastic functional gradient ascent. Each step adds one kernel
//! element, and kernel orthogonal matching pursuit keeps the dictionary small.
//!
//! Start with the runnable programs under `examples/`.

pub mod config;
pub mod constants;
pub mod env;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod komp;
pub mod policy;
pub mod rollout;
pub mod seeding;
pub mod trainer;

#[doc(hidden)]
pub mod cli;

pub use env::{make_env, EnvOptions, Environment};
pub use error::{Error, Result};
pub use estimators::{estimate_q, stochastic_gradient, EstimatorConfig};
pub use kernel::{KernelSpec, RkhsFunction};
pub use komp::{komp, PruneResult};
pub use policy::GaussianPolicy;
