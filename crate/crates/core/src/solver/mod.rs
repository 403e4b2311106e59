//! Mixed initial-boundary problems for strictly hyperbolic linear systems.

mod field;
mod gronwall;
mod mixed;
mod picard;
mod system;

pub use field::{SchemeMetadata, SolutionField};
pub use gronwall::{
    check_bound, determination_domain, gronwall_bound, refined_sup, BoundReport, DeterminationDomain, GronwallInputs,
};
pub use mixed::{solve_mixed, solve_on_lattice, SolveOptions, DEFAULT_CFL, DEFAULT_PASSES};
pub use picard::{picard_solve, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use system::{Coef, Compatibility, FieldFn, Signal, SystemSpec, Warning};
