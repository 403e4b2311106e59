//! Builds A_q kernels for several orders and prints their moment residuals.
//!
//! ```text
//! cargo run --example kernel_moments
//! ```

use colombeau_hyperbolic::kernels::build_kernel;

fn main() -> anyhow::Result<()> {
    println!("{:>3} {:>12} {:>12} {:>12} {:>10}", "q", "|m0 - 1|", "max |m_k|", "chi(0)", "cond");
    for q in [0, 1, 2, 4, 6] {
        let k = build_kernel(q, 1.0)?;
        let (mass, worst) = k.moment_residuals();
        println!("{q:>3} {mass:>12.3e} {worst:>12.3e} {:>12.6} {:>10.2e}", k.eval(0.0), k.condition_number());
    }

    // every kernel of order >= 2 must take negative values somewhere
    let k = build_kernel(2, 1.0)?;
    let min = k.samples().iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    println!("\nq = 2: min chi = {min:.4}, nonnegative = {}", k.is_nonnegative());
    Ok(())
}
