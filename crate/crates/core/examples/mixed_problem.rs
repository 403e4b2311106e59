//! Solves a coupled 2x2 mixed problem with reflection at x = 0 and checks the
//! a-priori sup bound over the determination domain.
//!
//! ```text
//! cargo run --release --example mixed_problem
//! ```

use colombeau_hyperbolic::piecewise::unit_bump;
use colombeau_hyperbolic::solver::{
    check_bound, determination_domain, solve_mixed, Coef, GronwallInputs, Signal, SolveOptions, SystemSpec,
};

fn main() -> anyhow::Result<()> {
    let spec = SystemSpec::new(2, 1, 2.0, 1.0)?
        .with_speed(0, Coef::of_x(|x| 1.0 + 0.2 * x))
        .with_speed(1, Coef::Constant(-1.0))
        .with_coupling(0, 1, Coef::Constant(0.5))
        .with_coupling(1, 0, Coef::Constant(0.5))
        .with_source(0, Coef::func(|x, t| 0.1 * (x * t).sin()))
        .with_boundary_coupling(0, 1, Signal::Constant(1.0))
        .with_initial(0, Signal::func(|x| unit_bump((x - 1.0) / 0.5)))
        .with_initial(1, Signal::func(|x| 0.5 * unit_bump((x - 1.2) / 0.6)));
    for w in spec.validate()? {
        println!("warning: {w}");
    }

    let field = solve_mixed(&spec, &SolveOptions::new(200, 0.9))?;
    println!("grid {} x {}, {:?}", field.nx(), field.nt(), field.meta);

    let domain = determination_domain((0.0, spec.extent), spec.max_speed(field.nx()), spec.horizon)?;
    let inputs = GronwallInputs::measure(&spec, &domain, 512);
    let report = check_bound(&field, &inputs, &domain)?;
    println!("{inputs:?}");
    println!("component sups {:?} <= bound {:.4}: {}", report.component_sups, report.bound, report.pass);

    for t in [0.0, 0.5, 1.0] {
        println!("u(0, {t}) = {:.6}, v(0, {t}) = {:.6}", field.interpolate(0, 0.0, t), field.interpolate(1, 0.0, t));
    }
    Ok(())
}
