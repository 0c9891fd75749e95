//! Compressing a redundant expansion with kernel orthogonal matching pursuit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rkhs_pg::{komp, KernelSpec, RkhsFunction};

fn main() -> rkhs_pg::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut h = RkhsFunction::zero(KernelSpec::new(vec![0.5, 0.5])?, 1);
    // Many nearby centers: heavily redundant.
    for _ in 0..60 {
        let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        h = h.add_scaled_kernel(&c, &[rng.random_range(-0.1..0.1)])?;
    }
    let norm = h.hilbert_norm()?;
    println!("M = {}, ||h|| = {norm:.4}", h.len());
    for frac in [0.0, 0.001, 0.01, 0.05, 0.2, 1.0] {
        let eps = frac * norm;
        let r = komp(&h, eps)?;
        println!("eps = {eps:.5}: M = {:2}, error = {:.5}", r.pruned.len(), r.final_error);
    }
    Ok(())
}
