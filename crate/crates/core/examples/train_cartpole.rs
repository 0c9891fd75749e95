//! Projected training on cart-pole, evaluated periodically with a 200-step cap.
//!
//! `cargo run --release --example train_cartpole -- 1000`
//!
//! The dictionary grows quickly at the configured budget, so keep runs short.

use std::path::Path;

use rkhs_pg::config::parse_config;
use rkhs_pg::env::CartPole;
use rkhs_pg::seeding;
use rkhs_pg::trainer::{evaluate_policy, Trainer};

fn main() -> rkhs_pg::Result<()> {
    let episodes: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(300);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/cartpole.cfg");
    let cfg = parse_config(&path, &[format!("episodes={episodes}")])?;
    let env = cfg.build_env()?;
    let eval_env = CartPole::new(200);
    let mut trainer = Trainer::new(&cfg, env.as_ref())?;
    let mut rng = seeding::stream(cfg.seed, seeding::TRAIN, 0);
    let mut eval_rng = seeding::stream(cfg.seed, seeding::EVAL, 0);

    for _ in 0..cfg.episodes {
        let r = trainer.step(&mut rng)?;
        if r.episode % 100 == 0 {
            let (mean, se) = evaluate_policy(&eval_env, trainer.policy(), 1.0, 50, &mut eval_rng)?;
            println!("episode {:5}  eval {mean:6.1} +- {se:4.1}  M = {}", r.episode, r.model_order);
        }
    }
    Ok(())
}
