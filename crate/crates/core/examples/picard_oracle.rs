//! Compares the marching solver with the fixed-point iteration of the
//! integral formulation on shared lattices.
//!
//! ```text
//! cargo run --release --example picard_oracle
//! ```

use colombeau_hyperbolic::piecewise::unit_bump;
use colombeau_hyperbolic::solver::{
    picard_solve, solve_on_lattice, Coef, Signal, SolveOptions, SystemSpec, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

fn main() -> anyhow::Result<()> {
    let spec = SystemSpec::new(2, 1, 2.0, 1.0)?
        .with_speed(0, Coef::Constant(1.0))
        .with_speed(1, Coef::Constant(-1.0))
        .with_coupling(0, 1, Coef::Constant(0.5))
        .with_coupling(1, 0, Coef::Constant(0.5))
        .with_boundary_coupling(0, 1, Signal::Constant(1.0))
        .with_initial(0, Signal::func(|x| unit_bump((x - 1.0) / 0.5)))
        .with_initial(1, Signal::func(|x| 0.5 * unit_bump((x - 1.2) / 0.6)));

    for n in [25, 50, 100] {
        let oracle = picard_solve(&spec, n, n, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
        let marched = solve_on_lattice(&spec, n, n, &SolveOptions::default())?;
        let diff = oracle.values().iter().zip(marched.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{n:>4} x {n:<4} iterations {:>3}  sup difference {diff:.3e}", oracle.meta.iterations.unwrap_or(0));
    }
    Ok(())
}
