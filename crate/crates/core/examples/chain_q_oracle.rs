//! Monte Carlo Q estimates on the five-state chain next to the exact values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkhs_pg::env::{value_iteration, ChainMdp, ChainMdpSpec};
use rkhs_pg::rollout::mean_and_se;
use rkhs_pg::{estimate_q, EstimatorConfig, GaussianPolicy, KernelSpec, RkhsFunction};

fn main() -> rkhs_pg::Result<()> {
    let gamma = 0.9;
    let chain = ChainMdp::new(ChainMdpSpec::five_state(), 1000)?;
    let mean = RkhsFunction::from_parts(
        KernelSpec::new(vec![0.25])?,
        1,
        &[vec![-0.5], vec![0.5]],
        &[vec![0.4], vec![-0.3]],
    )?;
    let policy = GaussianPolicy::new(mean, vec![1.0])?;

    let probs = chain.sign_probabilities(&policy)?;
    let exact = value_iteration(chain.chain(), &probs, gamma)?;
    let cfg = EstimatorConfig::new(gamma, 1000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    println!("state  sign  exact     estimate  (se)");
    for s in 0..5 {
        for (k, a) in [-1.0, 1.0].into_iter().enumerate() {
            let x = chain.state_vector(s);
            let draws: Vec<f64> = (0..20_000)
                .map(|_| estimate_q(&chain, &policy, &x, &[a], &cfg, &mut rng).map(|q| q.value))
                .collect::<rkhs_pg::Result<_>>()?;
            let (m, se) = mean_and_se(&draws);
            let sign = if k == 0 { '-' } else { '+' };
            println!("{s:5}  {sign:4}  {:8.4}  {m:8.4}  ({se:.4})", exact.q[s][k]);
        }
    }
    Ok(())
}
