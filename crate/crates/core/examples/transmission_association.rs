//! Regularizes the two-speed transmission problem and pairs U^eps - u and
//! V^eps - v with interior test functions as eps decreases.
//!
//! ```text
//! cargo run --release --example transmission_association [nx]
//! ```

use std::sync::Arc;

use colombeau_hyperbolic::characteristics::TwoSpeedMedium;
use colombeau_hyperbolic::embedding::DEFAULT_SCHEDULE;
use colombeau_hyperbolic::kernels::build_kernel;
use colombeau_hyperbolic::piecewise::PiecewiseFn;
use colombeau_hyperbolic::transmission::{
    association_test, regularized_family, TestFunction, TransmissionProblem, Wave,
};

fn main() -> anyhow::Result<()> {
    let nx = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100);
    let medium = TwoSpeedMedium::new(1.0, 2.0, 1.0)?;
    let data = PiecewiseFn::bump(2.6, 2.2, 1.0);
    let p = TransmissionProblem::new(medium, data.clone(), data, 1.8, 4.0)?;
    let kernel = Arc::new(build_kernel(0, 1.0)?);

    let fields = regularized_family(&p, &kernel, &DEFAULT_SCHEDULE, nx)?;
    let tests = [
        (Wave::U, TestFunction::new((1.8, 0.7), (0.3, 0.2), 1.0)?),
        (Wave::V, TestFunction::new((0.7, 0.8), (0.2, 0.2), 1.0)?),
    ];
    for (wave, psi) in tests {
        let r = association_test(&fields, &p, &psi, wave)?;
        println!("{wave:?}: tolerance {:.3e}", r.tolerance);
        for (eps, i) in r.epsilon_schedule.iter().zip(&r.integrals) {
            println!("  eps = {eps:.0e}  I = {i:+.4e}");
        }
        println!("  monotone {}, final within tolerance {}", r.monotone, r.final_within_tolerance);
    }
    Ok(())
}
