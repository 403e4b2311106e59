use rayon::prelude::*;

use super::field::{SchemeMetadata, SolutionField};
use super::system::SystemSpec;
use crate::characteristics::{trace_backward, Terminal};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Trapezoid nodes `(x, t, weight)` along one traced path.
struct Segment {
    comp: usize,
    scale: f64,
    points: Vec<(f64, f64, f64)>,
}

struct Stencil {
    base: f64,
    segments: Vec<Segment>,
}

/// Fixed-point iteration of the integral representation on an `nx × nt` lattice.
///
/// Every node carries the full backward characteristic of its component.
/// Positive-speed components that reach `x = 0` at `t0` pick up
/// `h_i(t0) + Σ_k ν_ik(t0) u_k(0, t0)`, where each `u_k(0, t0)` is itself
/// expanded along the outgoing characteristic from `(0, t0)`. The iterate is
/// read by bilinear interpolation. The reported iteration count excludes the
/// final pass that confirms the change is below `tol`.
pub fn picard_solve(spec: &SystemSpec, nx: usize, nt: usize, max_iter: usize, tol: f64) -> Result<SolutionField> {
    if nx < 2 || nt < 1 {
        return Err(invalid("nx", "lattice too small"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    spec.validate()?;
    let n = spec.n;
    let width = nx + 1;
    let level_len = n * width;
    let dx = spec.extent / nx as f64;
    let dt = spec.horizon / nt as f64;
    let vmax = spec.max_speed(nx).max(f64::MIN_POSITIVE);
    let step = 0.5 * (dx / vmax).min(dt);

    let stencils: Vec<Stencil> = (level_len..(nt + 1) * level_len)
        .into_par_iter()
        .map(|idx| {
            let level = idx / level_len;
            let (i, j) = ((idx % level_len) / width, idx % width);
            stencil(spec, i, (j as f64 * dx, level as f64 * dt), step)
        })
        .collect::<Result<_>>()?;

    let mut values = vec![0.0; (nt + 1) * level_len];
    for (i, u0) in spec.initial_data.iter().enumerate() {
        for j in 0..width {
            values[i * width + j] = u0.eval(j as f64 * dx);
        }
    }
    let mut iterate =
        SolutionField::from_values(n, nx, nt, spec.extent, spec.horizon, values, spec.epsilon, Default::default());

    let mut residuals = Vec::new();
    for sweep in 1..=max_iter + 1 {
        let next: Vec<f64> = stencils.par_iter().map(|s| apply(spec, s, &iterate)).collect();
        let mut values = iterate.values().to_vec();
        let mut change = 0.0f64;
        for (slot, v) in values[level_len..].iter_mut().zip(next) {
            if !v.is_finite() {
                return Err(Error::NonConvergence { iterations: sweep, residuals, last: f64::INFINITY });
            }
            change = change.max((v - *slot).abs());
            *slot = v;
        }
        residuals.push(change);
        iterate =
            SolutionField::from_values(n, nx, nt, spec.extent, spec.horizon, values, spec.epsilon, Default::default());
        if change <= tol {
            iterate.meta = SchemeMetadata {
                method: "picard".into(),
                substeps: 0,
                passes: 0,
                iterations: Some(sweep - 1),
                residuals,
            };
            return Ok(iterate);
        }
    }
    let last = residuals.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::NonConvergence { iterations: max_iter, residuals, last })
}

fn apply(spec: &SystemSpec, s: &Stencil, u: &SolutionField) -> f64 {
    let mut v = s.base;
    for seg in &s.segments {
        let mut acc = 0.0;
        for &(x, t, w) in &seg.points {
            let mut src = 0.0;
            for (l, f) in spec.coupling[seg.comp].iter().enumerate() {
                if !f.is_zero() {
                    src += f.eval(x, t) * u.interpolate(l, x, t);
                }
            }
            acc += w * src;
        }
        v += seg.scale * acc;
    }
    v
}

/// Path nodes with trapezoid weights plus the integral of the source `a`.
fn path_quadrature(spec: &SystemSpec, comp: usize, path: &[(f64, f64)]) -> (Vec<(f64, f64, f64)>, f64) {
    let mut points: Vec<(f64, f64, f64)> = path.iter().map(|&(tau, x)| (x, tau, 0.0)).collect();
    for p in 0..path.len().saturating_sub(1) {
        let half = 0.5 * (path[p].0 - path[p + 1].0).abs();
        points[p].2 += half;
        points[p + 1].2 += half;
    }
    let a = &spec.sources[comp];
    let src = if a.is_zero() { 0.0 } else { points.iter().map(|&(x, t, w)| w * a.eval(x, t)).sum() };
    (points, src)
}

fn stencil(spec: &SystemSpec, i: usize, start: (f64, f64), step: f64) -> Result<Stencil> {
    let coupled = spec.coupling[i].iter().any(|f| !f.is_zero());
    let speed = |x: f64, t: f64| spec.speeds[i].eval(x, t);
    let trace = trace_backward(&speed, start, step)?;
    let (points, src) = path_quadrature(spec, i, &trace.path);
    let mut segments = Vec::new();
    if coupled {
        segments.push(Segment { comp: i, scale: 1.0, points });
    }
    let base = match trace.terminal {
        Terminal::Foot { x } => spec.initial_data[i].eval(x) + src,
        Terminal::BoundaryHit { t0 } => {
            let mut base = spec.boundary_data[i].eval(t0) + src;
            for (k, nu) in spec.boundary_matrix[i].iter().enumerate() {
                if nu.is_zero() {
                    continue;
                }
                let w = nu.eval(t0);
                let comp = spec.r + k;
                let out_speed = |x: f64, t: f64| spec.speeds[comp].eval(x, t);
                let out = trace_backward(&out_speed, (0.0, t0), step)?;
                let foot = out
                    .terminal
                    .foot()
                    .ok_or_else(|| invalid("speeds", "outgoing characteristic returned to x = 0"))?;
                let (points, src) = path_quadrature(spec, comp, &out.path);
                base += w * (spec.initial_data[comp].eval(foot) + src);
                if spec.coupling[comp].iter().any(|f| !f.is_zero()) {
                    segments.push(Segment { comp, scale: w, points });
                }
            }
            base
        }
    };
    Ok(Stencil { base, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::unit_bump;
    use crate::solver::mixed::{solve_on_lattice, SolveOptions};
    use crate::solver::system::{Coef, Signal};

    fn reflecting(f: f64, horizon: f64) -> SystemSpec {
        SystemSpec::new(2, 1, 2.0, horizon)
            .unwrap()
            .with_speed(0, Coef::Constant(1.0))
            .with_speed(1, Coef::Constant(-1.0))
            .with_initial(0, Signal::func(|x| unit_bump((x - 1.0) / 0.5)))
            .with_initial(1, Signal::func(|x| 0.5 * unit_bump((x - 1.2) / 0.6)))
            .with_boundary_coupling(0, 1, Signal::Constant(1.0))
            .with_coupling(0, 1, Coef::Constant(f))
            .with_coupling(1, 0, Coef::Constant(f))
    }

    #[test]
    fn uncoupled_converges_in_one_iteration() {
        let field = picard_solve(&reflecting(0.0, 1.0), 20, 20, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert_eq!(field.meta.iterations, Some(1));
        // reflected value at the boundary
        let top = field.nt();
        assert!((field.value(top, 0, 0) - field.value(top, 1, 0)).abs() < 1e-9);
    }

    #[test]
    fn coupled_agrees_with_march() {
        let spec = reflecting(0.5, 1.0);
        let p = picard_solve(&spec, 32, 32, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let m = solve_on_lattice(&spec, 32, 32, &SolveOptions::default()).unwrap();
        let diff = p.values().iter().zip(m.values()).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        assert!(diff < 5e-2, "{diff}");
        let r = &p.meta.residuals;
        assert!(r.windows(2).skip(1).all(|w| w[1] < w[0]), "{r:?}");
    }

    #[test]
    fn non_convergence_reports_residuals() {
        match picard_solve(&reflecting(0.5, 1.0), 16, 16, 2, 1e-14) {
            Err(Error::NonConvergence { iterations, residuals, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(residuals.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }
}
