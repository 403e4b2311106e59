//! Traces the mollified `+` characteristic through the interface of a
//! two-speed medium and compares its foot with the broken ray.
//!
//! ```text
//! cargo run --release --example broken_characteristic
//! ```

use std::sync::Arc;

use colombeau_hyperbolic::characteristics::{bracket_bounds, broken_foot, Family, TwoSpeedMedium, SPEED_MARGIN};
use colombeau_hyperbolic::embedding::DEFAULT_SCHEDULE;
use colombeau_hyperbolic::kernels::build_kernel;
use colombeau_hyperbolic::piecewise::PiecewiseFn;
use colombeau_hyperbolic::transmission::{characteristic_convergence, TransmissionProblem};

fn main() -> anyhow::Result<()> {
    let medium = TwoSpeedMedium::new(1.0, 2.0, 1.0)?;
    let start = (1.5, 0.5);
    println!("broken foot from {start:?}: {:?}", broken_foot(&medium, start, Family::Plus));
    println!("bracket at eta = 0.1: {:?}", bracket_bounds(&medium, start, 0.1, SPEED_MARGIN * medium.max_speed())?);

    let zero = PiecewiseFn::constant(0.0);
    let p = TransmissionProblem::new(medium, zero.clone(), zero, start.1, 4.0)?;
    for q in [0, 2] {
        let kernel = Arc::new(build_kernel(q, 1.0)?);
        let r = characteristic_convergence(&p, &kernel, start, &DEFAULT_SCHEDULE)?;
        println!("\nq = {q}");
        println!("{:>8} {:>8} {:>10} {:>10} {:>10} {:>10}", "eps", "eta", "foot", "x1", "x2", "error");
        for row in &r.rows {
            let (x1, x2) = row.bracket.unwrap_or((f64::NAN, f64::NAN));
            println!(
                "{:>8.0e} {:>8.4} {:>10.6} {:>10.6} {:>10.6} {:>10.3e}",
                row.epsilon, row.eta, row.foot, x1, x2, row.error
            );
        }
        println!("within [x1, x2]: {}, within 3 eta: {}", r.all_contained, r.all_within_three_eta);
    }
    Ok(())
}
