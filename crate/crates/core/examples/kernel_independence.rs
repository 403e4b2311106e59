//! Solves one regularized system with two different second-order kernels and
//! measures how fast the two solution families approach each other.
//!
//! ```text
//! cargo run --release --example kernel_independence
//! ```

use std::sync::Arc;

use colombeau_hyperbolic::embedding::{
    check_negligible, embed_linf, EpsilonFamily, Region, WidthLaw, DEFAULT_SCHEDULE,
};
use colombeau_hyperbolic::kernels::{build_kernel, Kernel};
use colombeau_hyperbolic::piecewise::PiecewiseFn;
use colombeau_hyperbolic::solver::{solve_mixed, Coef, Signal, SolutionField, SolveOptions, SystemSpec};

const NX: usize = 64;
const LAW: WidthLaw = WidthLaw::Linear { factor: 0.1 };

fn regularized(k: &Arc<Kernel>, eps: f64) -> anyhow::Result<SystemSpec> {
    let mollify = |f: PiecewiseFn| -> anyhow::Result<_> { Ok(embed_linf(&f, k, LAW, 0.0, 2.0)?.at(eps)) };
    let c = mollify(PiecewiseFn::smooth(|x| 1.0 + 0.3 * (2.0 * x).sin()))?;
    let minus = c.clone();
    let u0 = mollify(PiecewiseFn::bump(1.0, 0.6, 1.0))?;
    let v0 = mollify(PiecewiseFn::bump(1.2, 0.5, 0.8))?;
    Ok(SystemSpec::new(2, 1, 2.0, 1.0)?
        .with_speed(0, Coef::of_x(move |x| c(x, 0.0)))
        .with_speed(1, Coef::of_x(move |x| -minus(x, 0.0)))
        .with_coupling(0, 1, Coef::Constant(0.5))
        .with_coupling(1, 0, Coef::Constant(0.5))
        .with_boundary_coupling(0, 1, Signal::Constant(1.0))
        .with_initial(0, Signal::func(move |x| u0(x, 0.0)))
        .with_initial(1, Signal::func(move |x| v0(x, 0.0)))
        .with_epsilon(eps))
}

fn family(k: &Arc<Kernel>) -> anyhow::Result<Vec<SolutionField>> {
    let opts = SolveOptions::new(NX, 0.9).with_trace_spacing(2.0 / NX as f64);
    DEFAULT_SCHEDULE.iter().map(|&eps| Ok(solve_mixed(&regularized(k, eps)?, &opts)?)).collect()
}

fn main() -> anyhow::Result<()> {
    let narrow = Arc::new(build_kernel(2, 1.0)?);
    let wide = Arc::new(build_kernel(2, 1.5)?);
    let (a, b) = (family(&narrow)?, family(&wide)?);
    let region = Region::Rectangle { x: (0.0, 2.0), t: (0.0, 1.0) };
    for comp in 0..2 {
        let fa = EpsilonFamily::from_fields(&a, comp)?;
        let fb = EpsilonFamily::from_fields(&b, comp)?;
        let r = check_negligible(&fa, &fb, region, &DEFAULT_SCHEDULE, 2)?;
        println!("component {comp}: sup |difference| {:?}", r.sup_norms);
        println!("  {:?}, exponent {:?}, fit residual {:.3}", r.fitted_class, r.decay_exponent, r.fit_residual);
    }
    Ok(())
}
