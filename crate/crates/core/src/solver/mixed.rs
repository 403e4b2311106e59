use rayon::prelude::*;

use super::field::{cell, SchemeMetadata, SolutionField};
use super::system::SystemSpec;
use crate::characteristics::{locate_boundary_hit, midpoint_back};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_PASSES: usize = 2;
pub const DEFAULT_CFL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub nx: usize,
    pub cfl: f64,
    /// Spatial length of one tracing sub-step; `dx / 4` when unset.
    pub trace_spacing: Option<f64>,
    pub passes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { nx: 200, cfl: DEFAULT_CFL, trace_spacing: None, passes: DEFAULT_PASSES }
    }
}

impl SolveOptions {
    pub fn new(nx: usize, cfl: f64) -> Self {
        Self { nx, cfl, ..Self::default() }
    }

    pub fn with_trace_spacing(mut self, spacing: f64) -> Self {
        self.trace_spacing = Some(spacing);
        self
    }
}

/// Backward trajectory from a node of the new level.
struct Trace {
    /// `pos[q]` is the position at level `top - q`.
    pos: Vec<f64>,
    /// Boundary hit time, reached below level `top - (pos.len() - 1)`.
    hit: Option<f64>,
}

/// Marches the mixed problem level by level.
///
/// Each node of a new level is traced back along its characteristic to
/// `t = 0` or to the boundary, with midpoint sub-steps aligned to the levels.
/// Stored levels are read by linear interpolation and the source is
/// integrated by the trapezoid rule, so smooth solutions converge at second
/// order and constant-speed transport is exact.
pub fn solve_mixed(spec: &SystemSpec, opts: &SolveOptions) -> Result<SolutionField> {
    if opts.nx < 2 {
        return Err(invalid("nx", "need at least 2 cells"));
    }
    if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
        return Err(invalid("cfl", "must lie in (0, 1]"));
    }
    if opts.passes == 0 {
        return Err(invalid("passes", "need at least one pass"));
    }
    spec.validate()?;

    let nx = opts.nx;
    let dx = spec.extent / nx as f64;
    let vmax = spec.max_speed(nx);
    let nt = ((spec.horizon * vmax / (opts.cfl * dx)) - 1e-9).ceil().max(1.0) as usize;
    let spacing = opts.trace_spacing.unwrap_or(0.25 * dx);
    if !(spacing > 0.0) {
        return Err(invalid("trace_spacing", "must be positive"));
    }
    march(spec, nx, nt, spacing, opts.passes)
}

/// Same scheme on an explicit `nx × nt` lattice.
pub fn solve_on_lattice(spec: &SystemSpec, nx: usize, nt: usize, opts: &SolveOptions) -> Result<SolutionField> {
    if nx < 2 || nt < 1 {
        return Err(invalid("nx", "lattice too small"));
    }
    spec.validate()?;
    let spacing = opts.trace_spacing.unwrap_or(0.25 * spec.extent / nx as f64);
    march(spec, nx, nt, spacing, opts.passes.max(1))
}

fn march(spec: &SystemSpec, nx: usize, nt: usize, spacing: f64, passes: usize) -> Result<SolutionField> {
    let n = spec.n;
    let dx = spec.extent / nx as f64;
    let dt = spec.horizon / nt as f64;
    let vmax = spec.max_speed(nx);
    let substeps = ((vmax * dt / spacing) - 1e-9).ceil().max(1.0) as usize;
    let width = nx + 1;
    let level_len = n * width;

    let mut values = vec![0.0; (nt + 1) * level_len];
    for (i, u0) in spec.initial_data.iter().enumerate() {
        for j in 0..width {
            values[i * width + j] = u0.eval(j as f64 * dx);
        }
    }

    let order: Vec<Vec<usize>> = vec![(spec.r..n).collect(), (0..spec.r).collect()];
    let integrate = spec.has_coupling() || spec.sources.iter().any(|a| !a.is_zero());

    for top in 1..=nt {
        let traces: Vec<Result<(Trace, f64)>> = (0..level_len)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / width, idx % width);
                trace_levels(spec, i, j as f64 * dx, top, dt, substeps)
            })
            .collect();
        let mut level_traces = Vec::with_capacity(level_len);
        let mut courant = 0.0f64;
        for t in traces {
            let (tr, disp) = t?;
            courant = courant.max(disp / dx);
            level_traces.push(tr);
        }
        if courant > 1.0 + 1e-9 {
            return Err(Error::CflViolation { courant });
        }

        let (past, rest) = values.split_at_mut(top * level_len);
        let current = &mut rest[..level_len];
        current.copy_from_slice(&past[(top - 1) * level_len..]);
        let past: &[f64] = past;

        for _ in 0..passes {
            for group in &order {
                let cur: &[f64] = current;
                let updates: Vec<(usize, f64)> = group
                    .par_iter()
                    .flat_map_iter(|&i| (0..width).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let ctx = Levels { spec, past, current: cur, top, nx, dx, dt, level_len, width, integrate };
                        let idx = i * width + j;
                        (idx, ctx.evaluate(i, &level_traces[idx]))
                    })
                    .collect();
                for (idx, v) in updates {
                    current[idx] = v;
                }
            }
        }
        if let Some(bad) = current.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSolution { component: bad / width, node: bad % width, step: top });
        }
    }

    let meta = SchemeMetadata {
        method: "characteristic-march".into(),
        substeps,
        passes,
        iterations: None,
        residuals: Vec::new(),
    };
    Ok(SolutionField::from_values(n, nx, nt, spec.extent, spec.horizon, values, spec.epsilon, meta))
}

/// Traces component `i` back from `(x, t_top)`; also returns the largest
/// displacement over one level.
fn trace_levels(spec: &SystemSpec, i: usize, x: f64, top: usize, dt: f64, substeps: usize) -> Result<(Trace, f64)> {
    let speed = |y: f64, tau: f64| spec.speeds[i].eval(y, tau);
    let hs = dt / substeps as f64;
    let mut pos = Vec::with_capacity(top + 1);
    pos.push(x);
    if i < spec.r && x == 0.0 {
        return Ok((Trace { pos, hit: Some(top as f64 * dt) }, 0.0));
    }
    let mut xc = x;
    let mut disp = 0.0f64;
    for q in 0..top {
        let t_start = (top - q) as f64 * dt;
        let x_level = xc;
        for s in 0..substeps {
            let tau = t_start - s as f64 * hs;
            let next = midpoint_back(&speed, xc, tau, hs);
            if !next.is_finite() {
                return Err(Error::NonFinite { epsilon: spec.epsilon.unwrap_or(f64::NAN), x: xc, t: tau });
            }
            if next < 0.0 {
                let hit = locate_boundary_hit(&speed, xc, tau, hs, 1e-3 * hs * hs);
                disp = disp.max(x_level.abs());
                return Ok((Trace { pos, hit: Some(hit) }, disp));
            }
            xc = next;
        }
        if x_level <= spec.extent {
            disp = disp.max((xc - x_level).abs());
        }
        pos.push(xc);
    }
    Ok((Trace { pos, hit: None }, disp))
}

struct Levels<'a> {
    spec: &'a SystemSpec,
    /// Levels `0..top`.
    past: &'a [f64],
    /// Working copy of level `top`.
    current: &'a [f64],
    top: usize,
    nx: usize,
    dx: f64,
    dt: f64,
    level_len: usize,
    width: usize,
    integrate: bool,
}

impl Levels<'_> {
    #[inline]
    fn row(&self, level: usize, comp: usize) -> &[f64] {
        let start = comp * self.width;
        if level == self.top {
            &self.current[start..start + self.width]
        } else {
            let base = level * self.level_len + start;
            &self.past[base..base + self.width]
        }
    }

    #[inline]
    fn at(&self, level: usize, comp: usize, (j, w): (usize, f64)) -> f64 {
        let row = self.row(level, comp);
        if w == 0.0 {
            row[j]
        } else {
            row[j] + w * (row[j + 1] - row[j])
        }
    }

    fn source(&self, i: usize, level: usize, x: f64) -> f64 {
        let t = level as f64 * self.dt;
        let mut s = self.spec.sources[i].eval(x, t);
        let c = cell(x / self.dx, self.nx);
        for (k, f) in self.spec.coupling[i].iter().enumerate() {
            if !f.is_zero() {
                s += f.eval(x, t) * self.at(level, k, c);
            }
        }
        s
    }

    /// `u_comp(0, t)` by linear interpolation in time.
    fn boundary_value(&self, comp: usize, t: f64) -> f64 {
        let (k, w) = cell(t / self.dt, self.top);
        let a = self.row(k, comp)[0];
        if w == 0.0 {
            a
        } else {
            a + w * (self.row(k + 1, comp)[0] - a)
        }
    }

    fn boundary_source(&self, i: usize, t: f64) -> f64 {
        let mut s = self.spec.sources[i].eval(0.0, t);
        for (k, f) in self.spec.coupling[i].iter().enumerate() {
            if !f.is_zero() {
                s += f.eval(0.0, t) * self.boundary_value(k, t);
            }
        }
        s
    }

    fn incoming_base(&self, i: usize, t0: f64) -> f64 {
        let r = self.spec.r;
        let mut v = self.spec.boundary_data[i].eval(t0);
        for (k, nu) in self.spec.boundary_matrix[i].iter().enumerate() {
            if !nu.is_zero() {
                v += nu.eval(t0) * self.boundary_value(r + k, t0);
            }
        }
        v
    }

    fn evaluate(&self, i: usize, tr: &Trace) -> f64 {
        let last = tr.pos.len() - 1;
        let mut integral = 0.0;
        if self.integrate {
            let mut prev = self.source(i, self.top, tr.pos[0]);
            for q in 0..last {
                let next = self.source(i, self.top - q - 1, tr.pos[q + 1]);
                integral += 0.5 * self.dt * (prev + next);
                prev = next;
            }
            if let Some(t0) = tr.hit {
                let len = (self.top - last) as f64 * self.dt - t0;
                integral += 0.5 * len * (prev + self.boundary_source(i, t0));
            }
        }
        match tr.hit {
            None => self.spec.initial_data[i].eval(tr.pos[last]) + integral,
            Some(t0) => self.incoming_base(i, t0) + integral,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::unit_bump;
    use crate::solver::system::{Coef, Signal};

    fn bump(x: f64) -> f64 {
        unit_bump((x - 1.5) / 0.8)
    }

    #[test]
    fn constant_transport_is_exact_at_nodes() {
        let spec = SystemSpec::new(1, 1, 4.0, 1.0)
            .unwrap()
            .with_speed(0, Coef::Constant(1.0))
            .with_initial(0, Signal::func(bump));
        let field = solve_mixed(&spec, &SolveOptions::new(100, 0.9)).unwrap();
        let top = field.nt();
        for j in 0..=100 {
            let want = bump(field.x(j) - 1.0);
            assert!((field.value(top, 0, j) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn source_only_gives_elapsed_time() {
        let spec = SystemSpec::new(2, 1, 2.0, 1.0)
            .unwrap()
            .with_speed(0, Coef::of_x(|x| 1.0 + 0.3 * x.sin()))
            .with_speed(1, Coef::Constant(-0.7))
            .with_source(0, Coef::Constant(1.0))
            .with_source(1, Coef::Constant(1.0));
        let field = solve_mixed(&spec, &SolveOptions::new(40, 0.9)).unwrap();
        for level in 0..=field.nt() {
            let t = field.t(level);
            for j in 0..=40 {
                let x = field.x(j);
                // outgoing never reaches the boundary; incoming stays interior when x > 1.3 t
                assert!((field.value(level, 1, j) - t).abs() < 1e-12);
                if x > 1.31 * t {
                    assert!((field.value(level, 0, j) - t).abs() < 1e-12, "{x} {t}");
                }
            }
        }
    }

    #[test]
    fn reflection_copies_outgoing_at_boundary() {
        let spec = SystemSpec::new(2, 1, 2.0, 1.0)
            .unwrap()
            .with_speed(0, Coef::Constant(1.0))
            .with_speed(1, Coef::Constant(-1.0))
            .with_initial(1, Signal::func(|x| unit_bump((x - 1.0) / 0.5)))
            .with_boundary_coupling(0, 1, Signal::Constant(1.0));
        let field = solve_mixed(&spec, &SolveOptions::new(50, 0.9)).unwrap();
        for level in 0..=field.nt() {
            assert_eq!(field.value(level, 0, 0), field.value(level, 1, 0));
        }
    }

    #[test]
    fn bad_options_rejected() {
        let spec = SystemSpec::new(1, 0, 1.0, 1.0).unwrap().with_speed(0, Coef::Constant(-1.0));
        assert!(solve_mixed(&spec, &SolveOptions::new(1, 0.5)).is_err());
        assert!(solve_mixed(&spec, &SolveOptions::new(10, 1.5)).is_err());
        assert!(solve_mixed(&spec, &SolveOptions::new(10, 0.0)).is_err());
    }

    #[test]
    fn speed_outside_domain_ignored_by_cfl() {
        // backward traces leave [0, 1] to the right, where |λ| keeps growing
        let spec = SystemSpec::new(1, 0, 1.0, 2.0).unwrap().with_speed(0, Coef::of_x(|x| -(1.0 + x)));
        let field = solve_mixed(&spec, &SolveOptions::new(20, 0.9)).unwrap();
        assert!(field.sup_abs().is_finite());
    }
}
