//! Compactly supported mollifier kernels with vanishing moments.
//!
//! A kernel of moment order `q` has unit mass and `∫ x^k χ(x) dx = 0` for
//! `1 <= k <= q`. It is built as `χ(x) = P((x/R)^2) ρ(x/R) / R`, where `ρ` is
//! the standard bump `exp(-1/(1 - s^2))` and `P` is an even polynomial whose
//! coefficients solve the (Hankel) moment system. Odd moments vanish by
//! symmetry, so only `floor(q/2) + 1` unknowns are needed.
//!
//! Kernels also carry a tabulated cumulative distribution so that convolving
//! a piecewise-constant function costs a few table lookups.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::piecewise::{Piece, PiecewiseFn};
use crate::quadrature::{gauss_legendre, gauss_nodes, integrate_refined};

pub const MASS_TOLERANCE: f64 = 1e-10;
pub const MOMENT_TOLERANCE: f64 = 1e-8;
const CONDITION_LIMIT: f64 = 1e12;
const MOMENT_PANELS: usize = 64;
const CDF_CELLS: usize = 4096;
const CONVOLVE_PANELS: usize = 16;

/// Unnormalized standard bump on `(-1, 1)`.
#[inline]
pub fn standard_bump(s: f64) -> f64 {
    let d = 1.0 - s * s;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    /// Panels for the moment quadrature (doubled once on a singular system).
    pub panels: usize,
    /// Points in the exported tabulation.
    pub resolution: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { panels: MOMENT_PANELS, resolution: 401 }
    }
}

/// Hermite-interpolated CDF of the base profile on `[-1, 1]`.
#[derive(Debug, Clone)]
struct CdfTable {
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    monotone: bool,
}

impl CdfTable {
    #[inline]
    fn eval(&self, s: f64) -> f64 {
        if s <= -1.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        let pos = (s + 1.0) / self.h;
        let i = (pos as usize).min(self.values.len() - 2);
        let u = pos - i as f64;
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let u2 = u * u;
        let u3 = u2 * u;
        let v =
            (2.0 * u3 - 3.0 * u2 + 1.0) * v0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * v1 + (u3 - u2) * m1;
        if self.monotone {
            v.clamp(v0, v1)
        } else {
            v
        }
    }
}

/// A mollifier `χ` in the class of unit-mass kernels with `q` vanishing moments.
#[derive(Debug, Clone)]
pub struct Kernel {
    moment_order: usize,
    support_radius: f64,
    /// Coefficients of `P` in powers of `s^2`.
    coefficients: Vec<f64>,
    condition: f64,
    samples: Vec<(f64, f64)>,
    cdf: CdfTable,
}

impl Kernel {
    pub fn moment_order(&self) -> usize {
        self.moment_order
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Condition number (1-norm) of the moment system solved at construction.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Uniform tabulation `(x, χ(x))` over the support.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// True when `χ >= 0` everywhere (no vanishing even moments required).
    pub fn is_nonnegative(&self) -> bool {
        self.cdf.monotone
    }

    #[inline]
    fn profile(&self, s: f64) -> f64 {
        let rho = standard_bump(s);
        if rho == 0.0 {
            return 0.0;
        }
        let s2 = s * s;
        let mut p = 0.0;
        for &c in self.coefficients.iter().rev() {
            p = p * s2 + c;
        }
        p * rho
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.profile(x / self.support_radius) / self.support_radius
    }

    /// `∫_{-inf}^{x} χ`, normalized so the total is exactly 1.
    #[inline]
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf.eval(x / self.support_radius)
    }

    /// `∫ x^k χ(x) dx` by split Gauss-Legendre quadrature (split at 0).
    pub fn moment(&self, k: usize) -> f64 {
        let r = self.support_radius;
        let f = |x: f64| x.powi(k as i32) * self.eval(x);
        integrate_refined(f, -r, 0.0, MOMENT_PANELS).value + integrate_refined(f, 0.0, r, MOMENT_PANELS).value
    }

    /// Largest `|∫ x^k χ|` over `1 <= k <= q` and `|∫χ - 1|`.
    pub fn moment_residuals(&self) -> (f64, f64) {
        let mass = (self.moment(0) - 1.0).abs();
        let worst = (1..=self.moment_order).map(|k| self.moment(k).abs()).fold(0.0, f64::max);
        (mass, worst)
    }

    pub fn scaled(self: &Arc<Self>, scale: f64) -> Result<ScaledKernel> {
        scale_kernel(self, scale)
    }
}

/// Builds a kernel with default quadrature and tabulation settings.
pub fn build_kernel(q: usize, support_radius: f64) -> Result<Kernel> {
    build_kernel_with(q, support_radius, KernelOptions::default())
}

pub fn build_kernel_with(q: usize, support_radius: f64, opts: KernelOptions) -> Result<Kernel> {
    if !(support_radius > 0.0) || !support_radius.is_finite() {
        return Err(invalid("support_radius", "must be positive and finite"));
    }
    if opts.resolution < 2 {
        return Err(invalid("resolution", "need at least 2 samples"));
    }
    let coefficients = match solve_moment_system(q, opts.panels) {
        Err(Error::SingularMoments { .. }) => solve_moment_system(q, opts.panels * 4)?,
        other => other?,
    };
    let (coefficients, condition) = coefficients;
    let mut kernel = Kernel {
        moment_order: q,
        support_radius,
        coefficients,
        condition,
        samples: Vec::new(),
        cdf: CdfTable { h: 0.0, values: Vec::new(), slopes: Vec::new(), monotone: false },
    };
    kernel.cdf = tabulate_cdf(&kernel);
    kernel.samples = (0..opts.resolution)
        .map(|i| {
            let x = -support_radius + 2.0 * support_radius * i as f64 / (opts.resolution - 1) as f64;
            (x, kernel.eval(x))
        })
        .collect();

    let mass = kernel.moment(0);
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::MomentResidual { k: 0, residual: (mass - 1.0).abs(), tolerance: MASS_TOLERANCE });
    }
    for k in 1..=q {
        let m = kernel.moment(k);
        if m.abs() > MOMENT_TOLERANCE {
            return Err(Error::MomentResidual { k, residual: m.abs(), tolerance: MOMENT_TOLERANCE });
        }
    }
    Ok(kernel)
}

/// Even moments `∫ s^k ρ(s) ds` of the standard bump, `k = 0, 2, ..., 2 * count - 2`.
fn bump_moments(count: usize, panels: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let k = 2 * i as i32;
            // even integrand: integrate on [0, 1] and double
            2.0 * integrate_refined(|s| s.powi(k) * standard_bump(s), 0.0, 1.0, panels).value
        })
        .collect()
}

fn solve_moment_system(q: usize, panels: usize) -> Result<(Vec<f64>, f64)> {
    let m = q / 2 + 1;
    let mu = bump_moments(2 * m - 1, panels);
    let a: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|l| mu[i + l]).collect()).collect();
    let mut rhs = vec![0.0; m];
    rhs[0] = 1.0;

    let inv = invert(&a).map_err(|pivot| Error::SingularMoments { q, pivot })?;
    let norm1 = |mat: &[Vec<f64>]| (0..m).map(|j| (0..m).map(|i| mat[i][j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let condition = norm1(&a) * norm1(&inv);
    if condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned { q, condition });
    }
    let coeffs = (0..m).map(|i| inv[i][0] * rhs[0]).collect();
    Ok((coeffs, condition))
}

/// Gauss-Jordan inversion with partial pivoting; `Err(pivot)` when singular.
fn invert(a: &[Vec<f64>]) -> std::result::Result<Vec<Vec<f64>>, f64> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut work: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| work[i][col].abs().total_cmp(&work[j][col].abs())).unwrap();
        let pivot = work[piv][col];
        if pivot.abs() <= scale * 1e-300_f64.max(f64::EPSILON * 1e-6) {
            return Err(pivot);
        }
        work.swap(col, piv);
        for v in work[col].iter_mut() {
            *v /= pivot;
        }
        for row in 0..n {
            if row != col {
                let factor = work[row][col];
                if factor != 0.0 {
                    let pivot_row = work[col].clone();
                    for (w, p) in work[row].iter_mut().zip(&pivot_row) {
                        *w -= factor * p;
                    }
                }
            }
        }
    }
    Ok(work.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn tabulate_cdf(kernel: &Kernel) -> CdfTable {
    let h = 2.0 / CDF_CELLS as f64;
    let mut values = Vec::with_capacity(CDF_CELLS + 1);
    let mut slopes = Vec::with_capacity(CDF_CELLS + 1);
    let mut acc = 0.0;
    let mut monotone = true;
    values.push(0.0);
    slopes.push(0.0);
    for i in 0..CDF_CELLS {
        let a = -1.0 + i as f64 * h;
        acc += gauss_legendre(|s| kernel.profile(s), a, a + h, 1);
        values.push(acc);
        let s = a + h;
        let d = kernel.profile(s);
        if d < 0.0 {
            monotone = false;
        }
        slopes.push(d);
    }
    let total = acc;
    for v in values.iter_mut() {
        *v /= total;
    }
    for d in slopes.iter_mut() {
        *d /= total;
    }
    *values.last_mut().unwrap() = 1.0;
    CdfTable { h, values, slopes, monotone }
}

/// `φ_s(x) = χ(x / s) / s`.
#[derive(Debug, Clone)]
pub struct ScaledKernel {
    base: Arc<Kernel>,
    scale: f64,
}

/// Rescales a kernel to width `s`; mass is preserved and support shrinks linearly.
pub fn scale_kernel(k: &Arc<Kernel>, s: f64) -> Result<ScaledKernel> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid("scale", "must be positive and finite"));
    }
    Ok(ScaledKernel { base: Arc::clone(k), scale: s })
}

impl ScaledKernel {
    pub fn base(&self) -> &Kernel {
        &self.base
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn support_radius(&self) -> f64 {
        self.base.support_radius * self.scale
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.base.eval(x / self.scale) / self.scale
    }

    #[inline]
    pub fn cdf(&self, x: f64) -> f64 {
        self.base.cdf(x / self.scale)
    }

    pub fn moment(&self, k: usize) -> f64 {
        let r = self.support_radius();
        let f = |x: f64| x.powi(k as i32) * self.eval(x);
        integrate_refined(f, -r, 0.0, MOMENT_PANELS).value + integrate_refined(f, 0.0, r, MOMENT_PANELS).value
    }
}

/// `∫ f(x - y) φ(y) dy`, split at the images of the jump points of `f`.
pub fn convolve(f: &PiecewiseFn, k: &ScaledKernel, x: f64) -> Result<f64> {
    convolve_raw(f, &k.base, k.scale, x)
}

/// Same as [`convolve`] without going through a [`ScaledKernel`]; used in hot loops.
pub fn convolve_raw(f: &PiecewiseFn, kernel: &Kernel, scale: f64, x: f64) -> Result<f64> {
    let r = kernel.support_radius * scale;
    let breaks = f.breaks();
    // pieces of f touched by the window x - y, y in [-r, r]
    let lo = breaks.partition_point(|&b| b <= x - r);
    let hi = breaks.partition_point(|&b| b < x + r);
    let pieces = f.pieces();

    if lo == hi {
        // the window sits in one piece
        let v = match &pieces[lo] {
            Piece::Constant(c) => *c,
            Piece::Smooth(g) => smooth_window(g.as_ref(), kernel, scale, x, r),
        };
        return finite(v, x);
    }

    let cdf = |y: f64| kernel.cdf(y / scale);
    let mut total = 0.0;
    let (mut lo_v, mut hi_v) = (f64::INFINITY, f64::NEG_INFINITY);
    // piece i covers x - y in [breaks[i-1], breaks[i]) i.e. y in (x - breaks[i], x - breaks[i-1]]
    for i in lo..=hi {
        let y_hi = if i == lo { r } else { x - breaks[i - 1] };
        let y_lo = if i == hi { -r } else { x - breaks[i] };
        if y_hi <= y_lo {
            continue;
        }
        match &pieces[i] {
            Piece::Constant(c) => {
                total += c * (cdf(y_hi) - cdf(y_lo));
                lo_v = lo_v.min(*c);
                hi_v = hi_v.max(*c);
            }
            Piece::Smooth(g) => {
                gauss_nodes(y_lo, y_hi, CONVOLVE_PANELS, |y, w| {
                    let v = g(x - y);
                    total += w * v * kernel.eval(y / scale) / scale;
                    lo_v = lo_v.min(v);
                    hi_v = hi_v.max(v);
                });
            }
        }
    }
    if kernel.is_nonnegative() && lo_v <= hi_v {
        // convex combination of the sampled values
        total = total.clamp(lo_v, hi_v);
    }
    finite(total, x)
}

/// Whole window inside one smooth piece: divide by the discrete kernel mass on
/// the same nodes, so constants pass through exactly.
fn smooth_window(g: &(dyn Fn(f64) -> f64 + Send + Sync), kernel: &Kernel, scale: f64, x: f64, r: f64) -> f64 {
    let (mut num, mut mass) = (0.0, 0.0);
    let (mut lo_v, mut hi_v) = (f64::INFINITY, f64::NEG_INFINITY);
    gauss_nodes(-r, r, CONVOLVE_PANELS, |y, w| {
        let k = w * kernel.eval(y / scale);
        let v = g(x - y);
        num += v * k;
        mass += k;
        lo_v = lo_v.min(v);
        hi_v = hi_v.max(v);
    });
    let v = num / mass;
    if kernel.is_nonnegative() && lo_v <= hi_v {
        v.clamp(lo_v, hi_v)
    } else {
        v
    }
}

#[inline]
fn finite(v: f64, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Unbounded { x })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson, independent of the Gauss-Legendre machinery.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    #[test]
    fn q0_is_normalized_bump() {
        let k = build_kernel(0, 1.0).unwrap();
        let (mass, _) = k.moment_residuals();
        assert!(mass <= MASS_TOLERANCE);
        assert_eq!(k.coefficients().len(), 1);
        assert!(k.is_nonnegative());
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(-1.5), 0.0);
    }

    #[test]
    fn q2_coefficients_match_simpson_oracle() {
        let m: Vec<f64> =
            [0, 2, 4].iter().map(|&p| simpson(&|s: f64| s.powi(p) * standard_bump(s), -1.0, 1.0, 1e-14)).collect();
        // a m0 + b m2 = 1, a m2 + b m4 = 0
        let det = m[0] * m[2] - m[1] * m[1];
        let a = m[2] / det;
        let b = -m[1] / det;
        let k = build_kernel(2, 1.0).unwrap();
        let c = k.coefficients();
        assert!((c[0] - a).abs() < 1e-8 * a.abs(), "{} vs {a}", c[0]);
        assert!((c[1] - b).abs() < 1e-8 * b.abs(), "{} vs {b}", c[1]);
        assert!(k.moment(2).abs() <= 1e-8);
        assert!(!k.is_nonnegative());
    }

    #[test]
    fn q1_equals_q0() {
        let k0 = build_kernel(0, 1.0).unwrap();
        let k1 = build_kernel(1, 1.0).unwrap();
        assert_eq!(k0.coefficients(), k1.coefficients());
        assert!(k1.moment(1).abs() < 1e-14);
    }

    #[test]
    fn invariants_hold_for_several_orders_and_radii() {
        for &q in &[0usize, 1, 2, 3, 4, 6] {
            for &r in &[0.5, 1.0, 2.0] {
                let k = build_kernel(q, r).unwrap();
                assert!((k.moment(0) - 1.0).abs() <= MASS_TOLERANCE, "q={q} r={r}");
                for j in 1..=q {
                    assert!(k.moment(j).abs() <= MOMENT_TOLERANCE, "q={q} r={r} k={j}");
                }
            }
        }
    }

    #[test]
    fn huge_order_is_reported() {
        match build_kernel(40, 1.0) {
            Err(Error::IllConditioned { .. })
            | Err(Error::MomentResidual { .. })
            | Err(Error::SingularMoments { .. }) => {}
            other => panic!("expected a conditioning failure, got {other:?}"),
        }
    }

    #[test]
    fn bad_radius_rejected() {
        assert!(build_kernel(0, 0.0).is_err());
        assert!(build_kernel(0, -1.0).is_err());
    }

    #[test]
    fn smooth_under_refinement() {
        let k = build_kernel(2, 1.0).unwrap();
        let x = 0.37;
        let d = |h: f64| (k.eval(x + h) - k.eval(x - h)) / (2.0 * h);
        let (d1, d2, d3) = (d(1e-2), d(5e-3), d(2.5e-3));
        // central differences converge at second order
        let ratio = (d1 - d2).abs() / (d2 - d3).abs();
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn unit_scale_is_identity() {
        let k = Arc::new(build_kernel(2, 1.0).unwrap());
        let s = scale_kernel(&k, 1.0).unwrap();
        for i in 0..50 {
            let x = -1.2 + 2.4 * i as f64 / 49.0;
            assert_eq!(s.eval(x), k.eval(x));
        }
    }

    #[test]
    fn small_scale_keeps_mass_and_shrinks_support() {
        let k = Arc::new(build_kernel(0, 1.0).unwrap());
        let s = scale_kernel(&k, 0.01).unwrap();
        assert!((s.support_radius() - 0.01).abs() < 1e-18);
        assert!((s.moment(0) - 1.0).abs() <= 1e-10);
        assert_eq!(s.eval(0.011), 0.0);
    }

    #[test]
    fn scaled_second_moment_follows_square_law() {
        let k = Arc::new(build_kernel(2, 1.0).unwrap());
        let s = scale_kernel(&k, 0.5).unwrap();
        // sampled quadrature on the scaled evaluator
        let n = 20_000;
        let r = s.support_radius();
        let h = 2.0 * r / n as f64;
        let m2: f64 = (0..n)
            .map(|i| {
                let y = -r + (i as f64 + 0.5) * h;
                y * y * s.eval(y) * h
            })
            .sum();
        assert!((m2 - 0.25 * k.moment(2)).abs() < 1e-8, "{m2}");
        assert!(scale_kernel(&k, 0.0).is_err());
    }

    #[test]
    fn convolve_constant_passes_through() {
        let k = Arc::new(build_kernel(2, 1.0).unwrap());
        let s = scale_kernel(&k, 0.3).unwrap();
        let f = PiecewiseFn::constant(5.0);
        assert_eq!(convolve(&f, &s, 0.7).unwrap(), 5.0);
        let g = PiecewiseFn::piecewise_constant(vec![0.0, 10.0], vec![5.0, 5.0, 5.0]).unwrap();
        assert!((convolve(&g, &s, 0.1).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn convolve_step_at_jump_gives_half() {
        for q in [0usize, 2] {
            let k = Arc::new(build_kernel(q, 1.0).unwrap());
            let s = scale_kernel(&k, 0.1).unwrap();
            let step = PiecewiseFn::step(1.0, 0.0, 1.0);
            let v = convolve(&step, &s, 1.0).unwrap();
            assert!((v - 0.5).abs() < 1e-12, "q={q}: {v}");
        }
    }

    #[test]
    fn convolve_step_away_from_jump_is_exact() {
        let k = Arc::new(build_kernel(0, 1.0).unwrap());
        let s = scale_kernel(&k, 0.01).unwrap();
        let step = PiecewiseFn::step(1.0, 0.0, 1.0);
        assert_eq!(convolve(&step, &s, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn convolve_smooth_piece_matches_simpson() {
        let k = Arc::new(build_kernel(2, 1.0).unwrap());
        let s = scale_kernel(&k, 0.2).unwrap();
        let f = PiecewiseFn::smooth(|x| (3.0 * x).sin());
        let x = 0.4;
        let want = simpson(&|y: f64| (3.0 * (x - y)).sin() * s.eval(y), -0.2, 0.2, 1e-14);
        let got = convolve(&f, &s, x).unwrap();
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn convolve_rejects_non_finite() {
        let k = Arc::new(build_kernel(0, 1.0).unwrap());
        let s = scale_kernel(&k, 0.1).unwrap();
        let f = PiecewiseFn::smooth(|x| if x > 0.5 { f64::INFINITY } else { 0.0 });
        assert!(convolve(&f, &s, 0.5).is_err());
        assert_eq!(convolve(&f, &s, 0.3).unwrap(), 0.0);
    }
}
