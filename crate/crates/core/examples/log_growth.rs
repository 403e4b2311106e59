//! Mollifies a unit step at width 1/|log eps| and classifies the growth of the
//! family and of its x-derivative.
//!
//! ```text
//! cargo run --release --example log_growth
//! ```

use std::sync::Arc;

use colombeau_hyperbolic::embedding::{classify_growth, embed_linf, Region, WidthLaw};
use colombeau_hyperbolic::kernels::build_kernel;
use colombeau_hyperbolic::piecewise::PiecewiseFn;

fn main() -> anyhow::Result<()> {
    let kernel = Arc::new(build_kernel(0, 1.0)?);
    let step = PiecewiseFn::step(1.0, 0.0, 1.0);
    let fam = embed_linf(&step, &kernel, WidthLaw::LogInverse, 0.0, 2.0)?;
    let schedule = [1e-1, 1e-2, 1e-3, 1e-4];
    let region = Region::Interval { lo: 0.0, hi: 2.0 };

    let values = classify_growth(&fam, region, &schedule, 2048)?;
    println!("sup |c^eps|     : {:?}", values.fitted_class);

    let slope = classify_growth(&fam.x_derivative(1e-6), region, &schedule, 2048)?;
    println!("sup |d/dx c^eps|: {:?}  (chi(0) = {:.6})", slope.fitted_class, kernel.eval(0.0));
    for (eps, s) in schedule.iter().zip(&slope.sup_norms) {
        let predicted = kernel.eval(0.0) * eps.ln().abs();
        println!("  eps = {eps:.0e}: sup = {s:.6}, chi(0)|log eps| = {predicted:.6}");
    }
    Ok(())
}
