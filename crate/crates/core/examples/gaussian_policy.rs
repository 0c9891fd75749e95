//! Sampling from a Gaussian policy and forming the mirrored action pair.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkhs_pg::{GaussianPolicy, KernelSpec, RkhsFunction};

fn main() -> rkhs_pg::Result<()> {
    let mean = RkhsFunction::zero(KernelSpec::new(vec![0.25])?, 2)
        .add_scaled_kernel(&[0.0], &[1.0, -1.0])?;
    let policy = GaussianPolicy::new(mean, vec![0.5, 2.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let s = [0.2];
    println!("h(s) = {:?}", policy.mean().evaluate(&s)?);
    for _ in 0..3 {
        let a = policy.sample_action(&s, &mut rng)?;
        let bar = policy.symmetric_action(&s, &a)?;
        let zeta = policy.score_direction(&s, &a)?;
        println!("a = {a:.3?}  mirrored = {bar:.3?}  score = {zeta:.3?}");
    }
    Ok(())
}
