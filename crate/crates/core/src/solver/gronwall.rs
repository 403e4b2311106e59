use serde::Serialize;

use super::field::SolutionField;
use super::system::SystemSpec;
use crate::error::{invalid, Error, Result};

/// Sup norms entering the a-priori bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallInputs {
    pub n: usize,
    pub sup_v: f64,
    pub sup_a: f64,
    pub sup_u0: f64,
    pub sup_h: f64,
    pub sup_f: f64,
    pub horizon: f64,
}

/// `M2 [sup_a T + sup_u0 + sup_h] exp(n M2 sup_f T)` with `M2 = max(n sup_v, 1)`.
pub fn gronwall_bound(g: &GronwallInputs) -> f64 {
    let n = g.n as f64;
    let m2 = (n * g.sup_v).max(1.0);
    m2 * (g.sup_a * g.horizon + g.sup_u0 + g.sup_h) * (n * m2 * g.sup_f * g.horizon).exp()
}

/// Trapezoid over `K0` whose sides move inward at slope `M`; the left side
/// stays at `x = 0` when `K0` starts there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeterminationDomain {
    pub base: (f64, f64),
    pub slope: f64,
    pub horizon: f64,
}

pub fn determination_domain(k0: (f64, f64), slope: f64, horizon: f64) -> Result<DeterminationDomain> {
    if !(k0.0 >= 0.0 && k0.0 <= k0.1) || !k0.1.is_finite() {
        return Err(invalid("k0", "need 0 <= lo <= hi"));
    }
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(invalid("slope", "must be positive"));
    }
    if !(horizon >= 0.0) {
        return Err(invalid("horizon", "must be non-negative"));
    }
    Ok(DeterminationDomain { base: k0, slope, horizon })
}

impl DeterminationDomain {
    pub fn pinned(&self) -> bool {
        self.base.0 == 0.0
    }

    /// Cross-section at time `t`, `None` once the sides have met.
    pub fn edge_at(&self, t: f64) -> Option<(f64, f64)> {
        if t < 0.0 || t > self.horizon {
            return None;
        }
        let lo = if self.pinned() { 0.0 } else { self.base.0 + self.slope * t };
        let hi = self.base.1 - self.slope * t;
        (lo <= hi).then_some((lo, hi))
    }

    pub fn top_edge(&self) -> Option<(f64, f64)> {
        self.edge_at(self.horizon)
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        self.edge_at(t).is_some_and(|(lo, hi)| x >= lo && x <= hi)
    }

    /// Time at which the cross-section becomes empty, if before the horizon.
    pub fn closes_at(&self) -> Option<f64> {
        let width = self.base.1 - self.base.0;
        let rate = if self.pinned() { self.slope } else { 2.0 * self.slope };
        let t = width / rate;
        (t < self.horizon).then_some(t)
    }
}

const REFINE_ITERS: usize = 60;

/// Sampled `sup |f|` on `[a, b]`, refined by golden-section search around the best sample.
pub fn refined_sup<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, samples: usize) -> f64 {
    if !(b > a) {
        return f(a).abs();
    }
    let samples = samples.max(2);
    let h = (b - a) / samples as f64;
    let (mut best, mut at) = (0.0f64, 0usize);
    for p in 0..=samples {
        let v = f(a + p as f64 * h).abs();
        if v > best {
            best = v;
            at = p;
        }
    }
    let (mut lo, mut hi) = (a + at.saturating_sub(1) as f64 * h, (a + (at + 1) as f64 * h).min(b));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..REFINE_ITERS {
        let (c, d) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (fc, fd) = (f(c).abs(), f(d).abs());
        best = best.max(fc).max(fd);
        if fc >= fd {
            hi = d;
        } else {
            lo = c;
        }
    }
    best
}

impl GronwallInputs {
    /// Measures every sup from the spec over the determination domain.
    pub fn measure(spec: &SystemSpec, domain: &DeterminationDomain, samples: usize) -> Self {
        let t_end = domain.horizon.min(spec.horizon);
        let (lo, hi) = domain.base;
        let sup_u0 = spec.initial_data.iter().map(|u| refined_sup(|x| u.eval(x), lo, hi, samples)).fold(0.0, f64::max);
        let sup_h = if domain.pinned() {
            spec.boundary_data.iter().map(|h| refined_sup(|t| h.eval(t), 0.0, t_end, samples)).fold(0.0, f64::max)
        } else {
            0.0
        };
        let sup_v = spec
            .boundary_matrix
            .iter()
            .flatten()
            .map(|nu| refined_sup(|t| nu.eval(t), 0.0, t_end, samples))
            .fold(0.0, f64::max);

        let (mut sup_a, mut sup_f) = (0.0f64, 0.0f64);
        let rows = samples.clamp(2, 256);
        for k in 0..=rows {
            let t = t_end * k as f64 / rows as f64;
            let Some((a, b)) = domain.edge_at(t) else { continue };
            for p in 0..=rows {
                let x = a + (b - a) * p as f64 / rows as f64;
                for i in 0..spec.n {
                    sup_a = sup_a.max(spec.sources[i].eval(x, t).abs());
                    for f in &spec.coupling[i] {
                        sup_f = sup_f.max(f.eval(x, t).abs());
                    }
                }
            }
        }
        Self { n: spec.n, sup_v, sup_a, sup_u0, sup_h, sup_f, horizon: t_end }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub component_sups: Vec<f64>,
    pub bound: f64,
    pub nodes_sampled: usize,
    /// Upper edge of `K_T` is empty.
    pub degenerate: bool,
    pub pass: bool,
}

/// Sup of every component over the lattice nodes inside `K_T` against the bound.
pub fn check_bound(field: &SolutionField, g: &GronwallInputs, domain: &DeterminationDomain) -> Result<BoundReport> {
    let slack = 1e-12 * field.extent().max(1.0);
    if domain.base.1 > field.extent() + slack || domain.horizon > field.horizon() + 1e-12 * field.horizon().max(1.0) {
        return Err(Error::NotCovered(format!(
            "field [0, {}] x [0, {}] does not cover K_T over [{}, {}] up to t = {}",
            field.extent(),
            field.horizon(),
            domain.base.0,
            domain.base.1,
            domain.horizon
        )));
    }
    let bound = gronwall_bound(g);
    let mut sups = vec![0.0f64; field.components()];
    let mut nodes = 0;
    for level in 0..=field.nt() {
        let t = field.t(level);
        let Some((lo, hi)) = domain.edge_at(t) else { continue };
        for j in 0..=field.nx() {
            let x = field.x(j);
            if x < lo - slack || x > hi + slack {
                continue;
            }
            nodes += 1;
            for (c, s) in sups.iter_mut().enumerate() {
                *s = s.max(field.value(level, c, j).abs());
            }
        }
    }
    let pass = sups.iter().all(|&s| s <= bound * (1.0 + 1e-9));
    Ok(BoundReport { component_sups: sups, bound, nodes_sampled: nodes, degenerate: domain.top_edge().is_none(), pass })
}
