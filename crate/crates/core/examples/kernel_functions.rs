//! Building, evaluating and combining vector-valued kernel expansions.

use rkhs_pg::{KernelSpec, RkhsFunction};

fn main() -> rkhs_pg::Result<()> {
    let kernel = KernelSpec::new(vec![0.15, 0.015])?;
    let h = RkhsFunction::zero(kernel, 1)
        .add_scaled_kernel(&[0.65, -0.02], &[0.5])?
        .add_scaled_kernel(&[-0.35, 0.02], &[-0.5])?;

    for s in [[-0.5, 0.0], [0.0, 0.01], [0.6, -0.02]] {
        println!("h({:?}) = {:?}", s, h.evaluate(&s)?);
    }
    println!("||h|| = {:.6}", h.hilbert_norm()?);

    let g = h.add_scaled_kernel(&[0.1, 0.0], &[0.25])?;
    let d = g.difference(&h)?;
    println!("||g - h|| = {:.6} with {} centers", d.hilbert_norm()?, d.len());
    println!("<g, h> = {:.6}", g.inner_product(&h)?);

    println!("{}", h.to_json()?);
    Ok(())
}
