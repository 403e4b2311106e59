//! ε-indexed smooth families and their empirical growth classes.
//!
//! A raw bounded coefficient is turned into a family `ε ↦ f * φ_{w(ε)}`,
//! where `w` is a [`WidthLaw`]. The growth of `sup |u^ε|` along a schedule of
//! ε values is then fitted against three asymptotic models (bounded,
//! logarithmic, power) to label the family.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernels::{convolve_raw, Kernel};
use crate::piecewise::PiecewiseFn;
use crate::solver::SolutionField;

/// Relative slack under which two fit residuals count as a tie.
pub const TIE_SLACK: f64 = 0.10;
const TIE_FLOOR: f64 = 1e-9;
pub const DEFAULT_SCHEDULE: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
pub const DEFAULT_RESOLUTION: usize = 512;

/// How the mollification width depends on ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WidthLaw {
    /// `η_ε = 1 / |log ε|`, valid for `0 < ε < 1`.
    LogInverse,
    /// `η_ε = factor · ε`.
    Linear { factor: f64 },
}

impl WidthLaw {
    pub fn width(&self, eps: f64) -> Result<f64> {
        match *self {
            WidthLaw::LogInverse => {
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(invalid("epsilon", format!("{eps} outside (0, 1)")));
                }
                Ok(1.0 / eps.ln().abs())
            }
            WidthLaw::Linear { factor } => {
                if !(eps > 0.0) || !(factor > 0.0) {
                    return Err(invalid("epsilon", format!("{eps} (factor {factor}) must be positive")));
                }
                Ok(factor * eps)
            }
        }
    }
}

/// Where a family lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Rectangle { x: (f64, f64), t: (f64, f64) },
}

/// Compact set on which sup norms are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Interval { lo: f64, hi: f64 },
    Rectangle { x: (f64, f64), t: (f64, f64) },
}

impl Region {
    fn points(&self, resolution: usize) -> Vec<(f64, f64)> {
        let n = resolution.max(1);
        let lin = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / n as f64;
        match *self {
            Region::Interval { lo, hi } => (0..=n).map(|i| (lin(lo, hi, i), 0.0)).collect(),
            Region::Rectangle { x, t } => {
                (0..=n).flat_map(|j| (0..=n).map(move |i| (lin(x.0, x.1, i), lin(t.0, t.1, j)))).collect()
            }
        }
    }
}

/// How a family was constructed.
#[derive(Debug, Clone, Default)]
pub struct Recipe {
    pub kernel_q: Option<usize>,
    pub width_law: Option<WidthLaw>,
    pub description: String,
}

pub type FamilyFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// Representative `u^ε(x)` or `u^ε(x, t)` of a generalized function.
#[derive(Clone)]
pub struct EpsilonFamily {
    domain: Domain,
    evaluator: Arc<FamilyFn>,
    recipe: Recipe,
}

impl fmt::Debug for EpsilonFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EpsilonFamily")
            .field("domain", &self.domain)
            .field("recipe", &self.recipe)
            .finish_non_exhaustive()
    }
}

impl EpsilonFamily {
    /// `f(ε, x, t)`; one-dimensional families ignore `t`.
    pub fn new<F>(domain: Domain, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self { domain, evaluator: Arc::new(f), recipe: Recipe::default() }
    }

    pub fn with_recipe(mut self, recipe: Recipe) -> Self {
        self.recipe = recipe;
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn recipe(&self) -> &Recipe {
        &self.recipe
    }

    #[inline]
    pub fn eval(&self, eps: f64, x: f64, t: f64) -> f64 {
        (self.evaluator)(eps, x, t)
    }

    /// The smooth field for one fixed ε.
    pub fn at(&self, eps: f64) -> impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static {
        let f = Arc::clone(&self.evaluator);
        move |x, t| f(eps, x, t)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = Arc::clone(&self.evaluator);
        Self { domain: self.domain, evaluator: Arc::new(move |e, x, t| c * f(e, x, t)), recipe: self.recipe.clone() }
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        let (a, b) = (Arc::clone(&self.evaluator), Arc::clone(&other.evaluator));
        Ok(Self {
            domain: self.domain,
            evaluator: Arc::new(move |e, x, t| a(e, x, t) - b(e, x, t)),
            recipe: Recipe { description: "difference".into(), ..Recipe::default() },
        })
    }

    /// Central-difference `∂_x` with step `h`.
    pub fn x_derivative(&self, h: f64) -> Self {
        let f = Arc::clone(&self.evaluator);
        Self {
            domain: self.domain,
            evaluator: Arc::new(move |e, x, t| (f(e, x + h, t) - f(e, x - h, t)) / (2.0 * h)),
            recipe: Recipe { description: format!("d/dx of {}", self.recipe.description), ..self.recipe.clone() },
        }
    }

    /// Family over solved fields, one per ε, read by bilinear interpolation.
    /// Evaluating at an ε not in `fields` yields NaN.
    pub fn from_fields(fields: &[SolutionField], component: usize) -> Result<Self> {
        let first = fields.first().ok_or_else(|| invalid("fields", "empty"))?;
        if component >= first.components() {
            return Err(invalid("component", "out of range"));
        }
        let domain = Domain::Rectangle { x: (0.0, first.extent()), t: (0.0, first.horizon()) };
        let fields: Vec<SolutionField> = fields.to_vec();
        Ok(Self::new(domain, move |e, x, t| {
            fields.iter().find(|f| f.epsilon() == Some(e)).map_or(f64::NAN, |f| f.interpolate(component, x, t))
        }))
    }
}

/// Mollifies a bounded coefficient into `ε ↦ (f · cutoff) * φ_{law(ε)}` on `[0, extent]`.
///
/// The cutoff vanishes on `[0, zero_radius]` and equals 1 beyond `2 · zero_radius`.
pub fn embed_linf(
    f: &PiecewiseFn,
    kernel: &Arc<Kernel>,
    law: WidthLaw,
    zero_radius: f64,
    extent: f64,
) -> Result<EpsilonFamily> {
    if !(extent > 0.0) {
        return Err(invalid("extent", "must be positive"));
    }
    if zero_radius < 0.0 || !zero_radius.is_finite() {
        return Err(invalid("zero_radius", "must be finite and non-negative"));
    }
    if 2.0 * zero_radius > extent {
        return Err(invalid("zero_radius", format!("{zero_radius} exceeds the domain [0, {extent}]")));
    }
    let margin = kernel.support_radius() * 2.0 + 1.0;
    f.sup_abs(-margin, extent + margin, 4096)?;
    let g = f.with_zero_near_origin(zero_radius)?;
    let k = Arc::clone(kernel);
    let family = EpsilonFamily::new(Domain::Interval { lo: 0.0, hi: extent }, move |eps, x, _t| match law.width(eps) {
        Ok(w) => convolve_raw(&g, &k, w, x).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    });
    Ok(family.with_recipe(Recipe {
        kernel_q: Some(kernel.moment_order()),
        width_law: Some(law),
        description: "mollified coefficient".into(),
    }))
}

/// Empirical growth label of a family along an ε schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum GrowthClass {
    GloballyBounded,
    LogGrowth { slope: f64 },
    PowerGrowth { exponent: f64 },
    NegligibleToOrder { order: u32 },
}

impl GrowthClass {
    fn rank(&self) -> u8 {
        match self {
            GrowthClass::NegligibleToOrder { .. } => 0,
            GrowthClass::GloballyBounded => 1,
            GrowthClass::LogGrowth { .. } => 2,
            GrowthClass::PowerGrowth { .. } => 3,
        }
    }

    pub fn same_label(&self, other: &Self) -> bool {
        self.rank() == other.rank()
    }
}

/// Residuals of the three candidate models (RMS of log deviations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelResiduals {
    pub bounded: f64,
    pub log: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub epsilon_schedule: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub fitted_class: GrowthClass,
    pub fit_residual: f64,
    pub residuals: ModelResiduals,
    /// `p` in `sup ≈ C ε^p`, when fitted (negligibility checks).
    pub decay_exponent: Option<f64>,
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 4 {
        return Err(invalid("schedule", "needs at least 4 entries"));
    }
    if schedule.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(invalid("schedule", "entries must be positive"));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("schedule", "must be strictly decreasing"));
    }
    let span = schedule[0] / schedule[schedule.len() - 1];
    if span < 100.0 * (1.0 - 1e-9) {
        return Err(invalid("schedule", "must span at least two decades"));
    }
    Ok(())
}

fn sampled_sups(fam: &EpsilonFamily, region: Region, schedule: &[f64], resolution: usize) -> Result<Vec<f64>> {
    let pts = region.points(resolution);
    schedule
        .par_iter()
        .map(|&eps| {
            let mut sup = 0.0f64;
            for &(x, t) in &pts {
                let v = fam.eval(eps, x, t);
                if !v.is_finite() {
                    return Err(Error::NonFinite { epsilon: eps, x, t });
                }
                sup = sup.max(v.abs());
            }
            Ok(sup)
        })
        .collect()
}

/// Least squares `y ≈ a + b x`; returns `(a, b)`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (sum / n.max(1) as f64).sqrt()
}

/// Fits the three models to positive sups and applies the tie rule.
fn fit_models(schedule: &[f64], sups: &[f64]) -> (GrowthClass, f64, ModelResiduals) {
    let logs: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
    let big_l: Vec<f64> = schedule.iter().map(|e| (1.0 / e).ln()).collect();

    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let r_bounded = rms(logs.iter().map(|l| l - mean));

    let (b, a) = linear_fit(&big_l, sups);
    let r_log = if big_l.iter().any(|l| a * l + b <= 0.0) {
        f64::INFINITY
    } else {
        rms(big_l.iter().zip(&logs).map(|(l, y)| y - (a * l + b).ln()))
    };

    let (alpha, p) = linear_fit(&big_l, &logs);
    let r_power = rms(big_l.iter().zip(&logs).map(|(l, y)| y - (alpha + p * l)));

    let residuals = ModelResiduals { bounded: r_bounded, log: r_log, power: r_power };
    let candidates = [
        (GrowthClass::GloballyBounded, r_bounded),
        (GrowthClass::LogGrowth { slope: a }, r_log),
        (GrowthClass::PowerGrowth { exponent: p }, r_power),
    ];
    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    // weakest class whose residual ties with the best
    let chosen =
        candidates.iter().find(|c| c.1 <= best * (1.0 + TIE_SLACK) + TIE_FLOOR).copied().unwrap_or(candidates[0]);
    (chosen.0, chosen.1, residuals)
}

/// Samples `sup |u^ε|` on `region` for each ε and labels the growth.
pub fn classify_growth(
    fam: &EpsilonFamily,
    region: Region,
    schedule: &[f64],
    resolution: usize,
) -> Result<GrowthReport> {
    validate_schedule(schedule)?;
    let sups = sampled_sups(fam, region, schedule, resolution)?;
    Ok(report_from_sups(schedule, sups))
}

fn report_from_sups(schedule: &[f64], sups: Vec<f64>) -> GrowthReport {
    let positive: Vec<(f64, f64)> =
        schedule.iter().zip(&sups).filter(|(_, s)| **s > 0.0).map(|(e, s)| (*e, *s)).collect();
    let zero = ModelResiduals { bounded: 0.0, log: 0.0, power: 0.0 };
    if positive.len() < 3 {
        return GrowthReport {
            epsilon_schedule: schedule.to_vec(),
            sup_norms: sups,
            fitted_class: GrowthClass::GloballyBounded,
            fit_residual: 0.0,
            residuals: zero,
            decay_exponent: None,
        };
    }
    let (eps, s): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
    let (class, resid, residuals) = fit_models(&eps, &s);
    GrowthReport {
        epsilon_schedule: schedule.to_vec(),
        sup_norms: sups,
        fitted_class: class,
        fit_residual: resid,
        residuals,
        decay_exponent: None,
    }
}

/// Fits `sup |a^ε - b^ε| ≈ C ε^p` and reports negligibility to order `floor(p)`.
///
/// A difference that is exactly zero at the smallest ε vanishes identically
/// there and is reported negligible to order `q_max`.
pub fn check_negligible(
    a: &EpsilonFamily,
    b: &EpsilonFamily,
    region: Region,
    schedule: &[f64],
    q_max: u32,
) -> Result<GrowthReport> {
    check_negligible_with(a, b, region, schedule, q_max, DEFAULT_RESOLUTION)
}

pub fn check_negligible_with(
    a: &EpsilonFamily,
    b: &EpsilonFamily,
    region: Region,
    schedule: &[f64],
    q_max: u32,
    resolution: usize,
) -> Result<GrowthReport> {
    validate_schedule(schedule)?;
    let diff = a.difference(b)?;
    let sups = sampled_sups(&diff, region, schedule, resolution)?;

    let zero = ModelResiduals { bounded: 0.0, log: 0.0, power: 0.0 };
    if *sups.last().unwrap() == 0.0 {
        return Ok(GrowthReport {
            epsilon_schedule: schedule.to_vec(),
            sup_norms: sups,
            fitted_class: GrowthClass::NegligibleToOrder { order: q_max },
            fit_residual: 0.0,
            residuals: zero,
            decay_exponent: None,
        });
    }
    let pts: Vec<(f64, f64)> =
        schedule.iter().zip(&sups).filter(|(_, s)| **s > 0.0).map(|(e, s)| (e.ln(), s.ln())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let (c, p) = linear_fit(&xs, &ys);
    let resid = rms(xs.iter().zip(&ys).map(|(x, y)| y - (c + p * x)));

    let mut report = report_from_sups(schedule, sups);
    report.decay_exponent = Some(p);
    if p >= 1.0 {
        report.fitted_class = GrowthClass::NegligibleToOrder { order: (p.floor() as u32).min(q_max) };
        report.fit_residual = resid;
    }
    Ok(report)
}
