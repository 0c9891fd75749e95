//! Projected training on mountain car with the shipped configuration.
//!
//! `cargo run --release --example train_mountain_car -- 5000`

use std::path::Path;

use rkhs_pg::config::parse_config;
use rkhs_pg::seeding;
use rkhs_pg::trainer::Trainer;

fn main() -> rkhs_pg::Result<()> {
    let episodes: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/mountain_car.cfg");
    let cfg = parse_config(&path, &[format!("episodes={episodes}")])?;
    let env = cfg.build_env()?;
    let mut trainer = Trainer::new(&cfg, env.as_ref())?;
    let mut rng = seeding::stream(cfg.seed, seeding::TRAIN, 0);

    println!("episode  avg_return  model_order");
    for _ in 0..cfg.episodes {
        let r = trainer.step(&mut rng)?;
        if r.episode % 250 == 0 {
            println!("{:7}  {:10.2}  {:11}", r.episode, r.avg_return, r.model_order);
        }
    }
    Ok(())
}
