//! Two-speed transmission problem: `u` travels at `+c(x)`, `v` at `-c(x)`,
//! and the boundary row `u(0, t) = h(t) v(0, t) + b(t)` reflects `v` into `u`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::characteristics::{
    bracket_bounds, broken_foot, classify_region, trace_backward, Family, Region, Terminal, TwoSpeedMedium,
    SPEED_MARGIN,
};
use crate::embedding::{embed_linf, WidthLaw};
use crate::error::{invalid, Error, Result};
use crate::kernels::Kernel;
use crate::piecewise::{unit_bump, PiecewiseFn};
use crate::quadrature::integrate_refined;
use crate::solver::{solve_mixed, Coef, Signal, SolutionField, SolveOptions, SystemSpec};

pub const ASSOCIATION_SLACK: f64 = 0.10;
pub const ASSOCIATION_TOLERANCE: f64 = 1e-2;
/// Width law for the initial and boundary data; the speed uses [`WidthLaw::LogInverse`].
pub const DATA_LAW: WidthLaw = WidthLaw::Linear { factor: 1.0 };

#[derive(Debug, Clone)]
pub struct TransmissionProblem {
    pub medium: TwoSpeedMedium,
    pub u0: PiecewiseFn,
    pub v0: PiecewiseFn,
    pub h: PiecewiseFn,
    pub b: PiecewiseFn,
    pub horizon: f64,
    pub extent: f64,
    /// `u0` and `v0` vanish on `[0, corner_radius]`.
    pub corner_radius: f64,
}

const CORNER_PROBES: usize = 64;

impl TransmissionProblem {
    /// Defaults to `h ≡ 1`, `b ≡ 0` and a corner radius of `0.1 · extent`.
    pub fn new(medium: TwoSpeedMedium, u0: PiecewiseFn, v0: PiecewiseFn, horizon: f64, extent: f64) -> Result<Self> {
        let p = Self {
            medium,
            u0,
            v0,
            h: PiecewiseFn::constant(1.0),
            b: PiecewiseFn::constant(0.0),
            horizon,
            extent,
            corner_radius: 0.1 * extent,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_boundary(mut self, h: PiecewiseFn, b: PiecewiseFn) -> Self {
        self.h = h;
        self.b = b;
        self
    }

    pub fn with_corner_radius(mut self, r: f64) -> Result<Self> {
        self.corner_radius = r;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !(self.extent > 0.0) {
            return Err(invalid("horizon", "horizon and extent must be positive"));
        }
        if self.medium.interface() >= self.extent {
            return Err(invalid("interface", "must lie inside (0, extent)"));
        }
        if !(self.corner_radius > 0.0) {
            return Err(invalid("corner_radius", "must be positive"));
        }
        for (name, f) in [("u0", &self.u0), ("v0", &self.v0)] {
            for p in 0..=CORNER_PROBES {
                let x = self.corner_radius * p as f64 / CORNER_PROBES as f64;
                if f.eval(x) != 0.0 {
                    return Err(invalid(name, format!("must vanish on [0, {}], nonzero at {x}", self.corner_radius)));
                }
            }
        }
        Ok(())
    }
}

/// Classical piecewise solution `(u, v)` at `(x, t)`.
pub fn classical_eval(p: &TransmissionProblem, (x, t): (f64, f64)) -> (f64, f64) {
    let v_at = |pt: (f64, f64)| match broken_foot(&p.medium, pt, Family::Minus) {
        Terminal::Foot { x } => p.v0.eval(x),
        Terminal::BoundaryHit { .. } => unreachable!("Minus rays move away from the axis"),
    };
    let v = v_at((x, t));
    let u = match broken_foot(&p.medium, (x, t), Family::Plus) {
        Terminal::Foot { x } => p.u0.eval(x),
        Terminal::BoundaryHit { t0 } => p.h.eval(t0) * v_at((0.0, t0)) + p.b.eval(t0),
    };
    (u, v)
}

/// The classical solution sampled on an `nx × nt` lattice, tagged with `epsilon`.
pub fn classical_field(p: &TransmissionProblem, nx: usize, nt: usize, epsilon: Option<f64>) -> SolutionField {
    let mut f = SolutionField::zeros(2, nx, nt, p.extent, p.horizon);
    for level in 0..=nt {
        for j in 0..=nx {
            let (u, v) = classical_eval(p, (f.x(j), f.t(level)));
            f.set(level, 0, j, u);
            f.set(level, 1, j, v);
        }
    }
    f.set_epsilon(epsilon);
    f
}

/// Tensor bump `amplitude · β((x - cx)/rx) · β((t - ct)/rt)` with `β` the unit bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub center: (f64, f64),
    pub radii: (f64, f64),
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(center: (f64, f64), radii: (f64, f64), amplitude: f64) -> Result<Self> {
        if !(radii.0 > 0.0 && radii.1 > 0.0) {
            return Err(invalid("radii", "must be positive"));
        }
        if !amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        Ok(Self { center, radii, amplitude })
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.amplitude * unit_bump((x - self.center.0) / self.radii.0) * unit_bump((t - self.center.1) / self.radii.1)
    }

    pub fn l1_norm(&self) -> f64 {
        let m = integrate_refined(unit_bump, -1.0, 1.0, 64).value;
        self.amplitude.abs() * self.radii.0 * self.radii.1 * m * m
    }

    pub fn support(&self) -> ((f64, f64), (f64, f64)) {
        let (c, r) = (self.center, self.radii);
        ((c.0 - r.0, c.0 + r.0), (c.1 - r.1, c.1 + r.1))
    }

    /// Support strictly inside `(0, extent) × (0, horizon)`.
    pub fn is_interior(&self, extent: f64, horizon: f64) -> bool {
        let ((x0, x1), (t0, t1)) = self.support();
        x0 > 0.0 && x1 < extent && t0 > 0.0 && t1 < horizon
    }
}

/// Mollified speed `c^ε = c * φ_{η_ε}` with `η_ε = 1/|log ε|`.
pub fn regularized_speed(
    p: &TransmissionProblem,
    kernel: &Arc<Kernel>,
    eps: f64,
) -> Result<impl Fn(f64) -> f64 + Send + Sync + Clone + 'static> {
    WidthLaw::LogInverse.width(eps)?;
    let m = &p.medium;
    let c = PiecewiseFn::step(m.interface(), m.c_left(), m.c_right());
    let fam = embed_linf(&c, kernel, WidthLaw::LogInverse, 0.0, p.extent)?;
    let at = fam.at(eps);
    Ok(move |x: f64| at(x, 0.0))
}

/// System with `λ = (c^ε, -c^ε)`, `ν_12 = h^ε`, boundary data `b^ε` and data `u0^ε, v0^ε`.
pub fn regularized_spec(p: &TransmissionProblem, kernel: &Arc<Kernel>, eps: f64) -> Result<SystemSpec> {
    let c = regularized_speed(p, kernel, eps)?;
    let minus = c.clone();
    let signal = |f: &PiecewiseFn, extent: f64| -> Result<Signal> {
        if let Some(k) = constant_value(f) {
            return Ok(Signal::Constant(k));
        }
        let fam = embed_linf(f, kernel, DATA_LAW, 0.0, extent)?;
        let at = fam.at(eps);
        Ok(Signal::func(move |s| at(s, 0.0)))
    };
    let mut spec = SystemSpec::new(2, 1, p.extent, p.horizon)?
        .with_speed(0, Coef::of_x(c))
        .with_speed(1, Coef::of_x(move |x| -minus(x)))
        .with_initial(0, signal(&p.u0, p.extent)?)
        .with_initial(1, signal(&p.v0, p.extent)?)
        .with_boundary_coupling(0, 1, signal(&p.h, p.horizon)?)
        .with_boundary_data(0, signal(&p.b, p.horizon)?)
        .with_epsilon(eps);
    spec.compatibility.initial_radius = p.corner_radius;
    Ok(spec)
}

fn constant_value(f: &PiecewiseFn) -> Option<f64> {
    match f.pieces() {
        [crate::piecewise::Piece::Constant(c)] => Some(*c),
        _ => None,
    }
}

/// Tracing sub-steps resolve both the grid and the mollification layer.
pub fn solve_options(p: &TransmissionProblem, kernel: &Kernel, eps: f64, nx: usize) -> Result<SolveOptions> {
    let eta = WidthLaw::LogInverse.width(eps)? * kernel.support_radius();
    let dx = p.extent / nx as f64;
    Ok(SolveOptions::new(nx, 0.9).with_trace_spacing(0.25 * dx.min(eta)))
}

/// One solved field per ε, computed independently.
pub fn regularized_family(
    p: &TransmissionProblem,
    kernel: &Arc<Kernel>,
    schedule: &[f64],
    nx: usize,
) -> Result<Vec<SolutionField>> {
    check_schedule(schedule)?;
    schedule
        .par_iter()
        .map(|&eps| {
            let spec = regularized_spec(p, kernel, eps)?;
            solve_mixed(&spec, &solve_options(p, kernel, eps, nx)?)
        })
        .collect()
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(invalid("schedule", "empty"));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("schedule", "must be strictly decreasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Wave {
    U,
    V,
}

impl Wave {
    fn index(self) -> usize {
        match self {
            Wave::U => 0,
            Wave::V => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationReport {
    pub wave: Wave,
    pub epsilon_schedule: Vec<f64>,
    pub integrals: Vec<f64>,
    pub psi_l1: f64,
    pub data_sup: f64,
    /// `1e-2 · ‖ψ‖₁ · sup|data|`.
    pub tolerance: f64,
    pub monotone: bool,
    pub final_within_tolerance: bool,
    pub pass: bool,
}

/// `I(ε) = ∬ (w^ε - w) ψ` by the trapezoid rule on each field's lattice.
pub fn association_test(
    fields: &[SolutionField],
    p: &TransmissionProblem,
    psi: &TestFunction,
    wave: Wave,
) -> Result<AssociationReport> {
    let schedule: Vec<f64> = fields
        .iter()
        .map(|f| f.epsilon().ok_or_else(|| invalid("fields", "every field needs an epsilon")))
        .collect::<Result<_>>()?;
    check_schedule(&schedule)?;
    let comp = wave.index();
    let integrals: Vec<f64> = fields
        .par_iter()
        .map(|f| {
            if !psi.is_interior(f.extent(), f.horizon()) || f.components() <= comp {
                return Err(Error::NotCovered(format!(
                    "test function support {:?} not interior to [0, {}] x [0, {}]",
                    psi.support(),
                    f.extent(),
                    f.horizon()
                )));
            }
            Ok(pairing(f, p, psi, comp))
        })
        .collect::<Result<_>>()?;

    let data = match wave {
        Wave::U => &p.u0,
        Wave::V => &p.v0,
    };
    let data_sup = data.sup_abs(0.0, p.extent, 4096)?;
    let psi_l1 = psi.l1_norm();
    let tolerance = ASSOCIATION_TOLERANCE * psi_l1 * data_sup;
    let floor = 1e-12 * psi_l1 * data_sup.max(1.0);
    let monotone = integrals.windows(2).all(|w| w[1].abs() <= (1.0 + ASSOCIATION_SLACK) * w[0].abs() + floor);
    let last = integrals.last().copied().unwrap_or(f64::NAN).abs();
    let final_within_tolerance = last <= tolerance;
    Ok(AssociationReport {
        wave,
        epsilon_schedule: schedule,
        integrals,
        psi_l1,
        data_sup,
        tolerance,
        monotone,
        final_within_tolerance,
        pass: monotone && final_within_tolerance,
    })
}

fn pairing(f: &SolutionField, p: &TransmissionProblem, psi: &TestFunction, comp: usize) -> f64 {
    let ((x0, x1), (t0, t1)) = psi.support();
    let (dx, dt) = (f.dx(), f.dt());
    let (j0, j1) = ((x0 / dx).floor() as usize, ((x1 / dx).ceil() as usize).min(f.nx()));
    let (k0, k1) = ((t0 / dt).floor() as usize, ((t1 / dt).ceil() as usize).min(f.nt()));
    let mut sum = 0.0;
    for level in k0..=k1 {
        let t = f.t(level);
        for j in j0..=j1 {
            let x = f.x(j);
            let w = psi.eval(x, t);
            if w == 0.0 || classify_region(&p.medium, (x, t)) == Region::OnGamma {
                continue;
            }
            let classical = classical_eval(p, (x, t));
            let c = if comp == 0 { classical.0 } else { classical.1 };
            sum += (f.value(level, comp, j) - c) * w;
        }
    }
    // ψ vanishes on the lattice boundary, so all trapezoid weights are dx·dt
    sum * dx * dt
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub eta: f64,
    pub foot: f64,
    pub bracket: Option<(f64, f64)>,
    pub error: f64,
    pub contained: Option<bool>,
    pub within_three_eta: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub start: (f64, f64),
    pub limit: f64,
    pub rows: Vec<ConvergenceRow>,
    pub all_contained: bool,
    pub all_within_three_eta: bool,
    pub pass: bool,
}

/// Traces the `Plus` characteristic of `c^ε` from `start` for each ε and
/// compares its foot with the broken ray and with the bracket `[x1, x2]`
/// evaluated at the kernel's half-width `η_ε · R`.
pub fn characteristic_convergence(
    p: &TransmissionProblem,
    kernel: &Arc<Kernel>,
    start: (f64, f64),
    schedule: &[f64],
) -> Result<ConvergenceReport> {
    check_schedule(schedule)?;
    let limit =
        broken_foot(&p.medium, start, Family::Plus).foot().ok_or_else(|| invalid("start", "must lie in region I"))?;
    let bound = SPEED_MARGIN * p.medium.max_speed();
    let rows: Vec<ConvergenceRow> = schedule
        .par_iter()
        .map(|&eps| {
            let eta = WidthLaw::LogInverse.width(eps)? * kernel.support_radius();
            let c = regularized_speed(p, kernel, eps)?;
            let step = eta / (16.0 * bound);
            let tr = trace_backward(&|x: f64, _t: f64| c(x), start, step)?;
            let foot = tr
                .terminal
                .foot()
                .ok_or_else(|| invalid("start", format!("mollified ray reaches x = 0 at eps = {eps}")))?;
            let bracket = bracket_bounds(&p.medium, start, eta, bound).ok();
            let contained = bracket.map(|(x1, x2)| x1 <= foot && foot <= x2);
            let error = (foot - limit).abs();
            Ok(ConvergenceRow {
                epsilon: eps,
                eta,
                foot,
                bracket,
                error,
                contained,
                within_three_eta: error <= 3.0 * eta,
            })
        })
        .collect::<Result<_>>()?;
    let all_contained = rows.iter().all(|r| r.contained != Some(false));
    let all_within_three_eta = rows.iter().all(|r| r.within_three_eta);
    Ok(ConvergenceReport {
        start,
        limit,
        rows,
        all_contained,
        all_within_three_eta,
        pass: all_contained && all_within_three_eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::build_kernel;

    fn medium() -> TwoSpeedMedium {
        TwoSpeedMedium::new(1.0, 2.0, 1.0).unwrap()
    }

    fn tagged() -> TransmissionProblem {
        // tag functions: identity past the corner radius
        let tag = PiecewiseFn::new(
            vec![0.5],
            vec![crate::piecewise::Piece::Constant(0.0), crate::piecewise::Piece::Smooth(Arc::new(|x| x))],
        )
        .unwrap();
        TransmissionProblem::new(medium(), tag.clone(), tag, 2.0, 4.0).unwrap()
    }

    #[test]
    fn classical_reads_feet() {
        let p = tagged();
        let (_, v) = classical_eval(&p, (0.5, 1.0));
        assert!((v - 2.0).abs() < 1e-14);
        let (u, _) = classical_eval(&p, (1.5, 0.5));
        assert!((u - 0.75).abs() < 1e-14);
    }

    #[test]
    fn boundary_identity_for_unit_reflection() {
        let p = tagged();
        for k in 1..20 {
            let t = 0.1 * k as f64;
            let (u, v) = classical_eval(&p, (0.0, t));
            assert_eq!(u, v);
        }
    }

    #[test]
    fn data_must_vanish_near_corner() {
        let bad = PiecewiseFn::constant(1.0);
        assert!(TransmissionProblem::new(medium(), bad, PiecewiseFn::constant(0.0), 1.0, 4.0).is_err());
    }

    #[test]
    fn injected_oracle_family_has_zero_pairing() {
        let p = TransmissionProblem::new(
            medium(),
            PiecewiseFn::bump(2.0, 1.0, 1.0),
            PiecewiseFn::bump(2.5, 0.8, 1.0),
            1.0,
            4.0,
        )
        .unwrap();
        let fields: Vec<_> = [1e-1, 1e-2, 1e-3].iter().map(|&e| classical_field(&p, 40, 20, Some(e))).collect();
        let psi = TestFunction::new((1.8, 0.5), (0.3, 0.2), 1.0).unwrap();
        for wave in [Wave::U, Wave::V] {
            let r = association_test(&fields, &p, &psi, wave).unwrap();
            assert!(r.integrals.iter().all(|&i| i == 0.0));
            assert!(r.pass);
        }
        let outside = TestFunction::new((3.9, 0.5), (0.3, 0.2), 1.0).unwrap();
        assert!(matches!(association_test(&fields, &p, &outside, Wave::U), Err(Error::NotCovered(_))));
    }

    #[test]
    fn test_function_norm_matches_sum() {
        let psi = TestFunction::new((1.0, 1.0), (0.3, 0.2), 2.0).unwrap();
        let n = 400;
        let (hx, ht) = (0.6 / n as f64, 0.4 / n as f64);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += psi.eval(0.7 + (i as f64 + 0.5) * hx, 0.8 + (j as f64 + 0.5) * ht) * hx * ht;
            }
        }
        assert!((s - psi.l1_norm()).abs() < 1e-6 * s);
    }

    #[test]
    fn uniform_medium_foot_is_exact() {
        let m = TwoSpeedMedium::new(1.5, 1.5, 1.0).unwrap();
        let p = TransmissionProblem::new(m, PiecewiseFn::bump(2.0, 1.0, 1.0), PiecewiseFn::constant(0.0), 1.0, 4.0)
            .unwrap();
        let k = Arc::new(build_kernel(0, 1.0).unwrap());
        let r = characteristic_convergence(&p, &k, (1.5, 0.5), &[1e-1, 1e-2, 1e-3]).unwrap();
        for row in &r.rows {
            assert!((row.foot - 0.75).abs() < 1e-12, "{}", row.foot);
        }
    }
}
