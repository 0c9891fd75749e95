//! Convergence constants and the stationary-neighborhood radius over a
//! grid of step sizes.

use rkhs_pg::constants::theoretical_constants;

fn main() -> rkhs_pg::Result<()> {
    let k = theoretical_constants(100.0, 0.999, &[1.3], 1, 0.0005, 0.000335)?;
    println!("mountain car: {}", serde_json::to_string_pretty(&k)?);

    println!("\neta       radius(eps=0)  radius(eps=eta^1.5)");
    for eta in [1e-2, 1e-3, 1e-4, 1e-5] {
        let a = theoretical_constants(1.0, 0.9, &[1.0], 1, eta, 0.0)?;
        let b = theoretical_constants(1.0, 0.9, &[1.0], 1, eta, eta.powf(1.5))?;
        println!("{eta:<8.0e}  {:<13.6}  {:.6}", a.radius, b.radius);
    }
    Ok(())
}
