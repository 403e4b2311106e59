use std::sync::Arc;

use serde::Deserialize;

use crate::characteristics::TwoSpeedMedium;
use crate::embedding::{embed_linf, WidthLaw, DEFAULT_RESOLUTION, DEFAULT_SCHEDULE};
use crate::error::{invalid, Result};
use crate::kernels::{build_kernel_with, Kernel, KernelOptions};
use crate::piecewise::PiecewiseFn;
use crate::solver::{Coef, Signal, SystemSpec, DEFAULT_CFL, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::transmission::{TestFunction, TransmissionProblem};

/// Top-level experiment file; each subcommand reads the sections it needs.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output: Option<OutputConfig>,
    pub kernel: Option<KernelConfig>,
    pub embed: Option<EmbedConfig>,
    pub growth: Option<GrowthConfig>,
    pub medium: Option<MediumConfig>,
    pub characteristics: Option<CharacteristicsConfig>,
    pub system: Option<SystemConfig>,
    pub solve: Option<SolveConfig>,
    pub picard: Option<PicardConfig>,
    pub transmission: Option<TransmissionConfig>,
    pub association: Option<AssociationConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub q: usize,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "kernel_samples")]
    pub samples: usize,
}

/// Named built-in coefficient shapes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefConfig {
    Constant { value: f64 },
    Step { at: f64, left: f64, right: f64 },
    Bump { center: f64, radius: f64, height: f64 },
    Table { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    pub coefficient: CoefConfig,
    #[serde(default = "log_law")]
    pub law: String,
    #[serde(default = "one")]
    pub factor: f64,
    #[serde(default)]
    pub zero_radius: f64,
    pub extent: f64,
    #[serde(default = "default_schedule")]
    pub schedule: Vec<f64>,
    #[serde(default = "embed_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    /// Classify `∂x u^ε` instead of `u^ε`.
    #[serde(default = "yes")]
    pub derivative: bool,
    #[serde(default = "derivative_step")]
    pub step: f64,
    #[serde(default = "resolution")]
    pub resolution: usize,
    /// `bounded`, `log` or `power`; checked when present.
    pub expect: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub c_left: f64,
    pub c_right: f64,
    pub interface: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsConfig {
    pub start: [f64; 2],
    #[serde(default = "default_schedule")]
    pub schedule: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n: usize,
    pub r: usize,
    pub extent: f64,
    pub horizon: f64,
    pub speeds: Vec<CoefConfig>,
    #[serde(default)]
    pub initial: Vec<CoefConfig>,
    #[serde(default)]
    pub coupling: Vec<Vec<CoefConfig>>,
    #[serde(default)]
    pub sources: Vec<CoefConfig>,
    #[serde(default)]
    pub boundary_matrix: Vec<Vec<CoefConfig>>,
    #[serde(default)]
    pub boundary_data: Vec<CoefConfig>,
    pub initial_radius: Option<f64>,
    pub boundary_radius: Option<f64>,
    pub regularize: Option<RegularizeConfig>,
}

/// Mollify every non-constant coefficient with the `[kernel]` kernel at one ε.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizeConfig {
    pub epsilon: f64,
    #[serde(default = "log_law")]
    pub law: String,
    #[serde(default = "one")]
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub nx: usize,
    #[serde(default = "cfl")]
    pub cfl: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub nx: usize,
    pub nt: usize,
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    #[serde(default = "tol")]
    pub tol: f64,
    /// Allowed sup-difference against the marching solver on the same lattice.
    #[serde(default = "agreement")]
    pub agreement: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionConfig {
    pub u0: CoefConfig,
    pub v0: CoefConfig,
    pub h: Option<CoefConfig>,
    pub b: Option<CoefConfig>,
    pub horizon: f64,
    pub extent: f64,
    pub corner_radius: Option<f64>,
    pub nx: usize,
    #[serde(default = "default_schedule")]
    pub schedule: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionConfig {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    #[serde(default = "one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssociationConfig {
    pub psi_u: TestFunctionConfig,
    pub psi_v: Option<TestFunctionConfig>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn kernel_samples() -> usize {
    401
}
fn embed_samples() -> usize {
    201
}
fn resolution() -> usize {
    DEFAULT_RESOLUTION
}
fn derivative_step() -> f64 {
    1e-6
}
fn log_law() -> String {
    "log".into()
}
fn default_schedule() -> Vec<f64> {
    DEFAULT_SCHEDULE.to_vec()
}
fn cfl() -> f64 {
    DEFAULT_CFL
}
fn max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn tol() -> f64 {
    DEFAULT_TOL
}
fn agreement() -> f64 {
    5e-2
}

impl CoefConfig {
    pub fn to_fn(&self) -> Result<PiecewiseFn> {
        Ok(match self {
            CoefConfig::Constant { value } => PiecewiseFn::constant(*value),
            CoefConfig::Step { at, left, right } => PiecewiseFn::step(*at, *left, *right),
            CoefConfig::Bump { center, radius, height } => {
                if !(*radius > 0.0) {
                    return Err(invalid("radius", "bump radius must be positive"));
                }
                PiecewiseFn::bump(*center, *radius, *height)
            }
            CoefConfig::Table { x, y } => PiecewiseFn::table(x.clone(), y.clone())?,
        })
    }

    fn constant(&self) -> Option<f64> {
        match self {
            CoefConfig::Constant { value } => Some(*value),
            _ => None,
        }
    }
}

pub fn parse_law(law: &str, factor: f64) -> Result<WidthLaw> {
    match law {
        "log" => Ok(WidthLaw::LogInverse),
        "linear" => {
            if !(factor > 0.0) {
                return Err(invalid("factor", "must be positive"));
            }
            Ok(WidthLaw::Linear { factor })
        }
        other => Err(invalid("law", format!("expected \"log\" or \"linear\", got {other:?}"))),
    }
}

impl KernelConfig {
    pub fn build(&self) -> Result<Arc<Kernel>> {
        let opts = KernelOptions { resolution: self.samples, ..KernelOptions::default() };
        Ok(Arc::new(build_kernel_with(self.q, self.radius, opts)?))
    }
}

impl MediumConfig {
    pub fn build(&self) -> Result<TwoSpeedMedium> {
        TwoSpeedMedium::new(self.c_left, self.c_right, self.interface)
    }
}

impl TestFunctionConfig {
    pub fn build(&self) -> Result<TestFunction> {
        TestFunction::new((self.center[0], self.center[1]), (self.radii[0], self.radii[1]), self.amplitude)
    }
}

impl TransmissionConfig {
    pub fn build(&self, medium: TwoSpeedMedium) -> Result<TransmissionProblem> {
        let h = self.h.as_ref().map(CoefConfig::to_fn).transpose()?.unwrap_or_else(|| PiecewiseFn::constant(1.0));
        let b = self.b.as_ref().map(CoefConfig::to_fn).transpose()?.unwrap_or_else(|| PiecewiseFn::constant(0.0));
        let p = TransmissionProblem {
            medium,
            u0: self.u0.to_fn()?,
            v0: self.v0.to_fn()?,
            h,
            b,
            horizon: self.horizon,
            extent: self.extent,
            corner_radius: self.corner_radius.unwrap_or(0.1 * self.extent),
        };
        p.validate()?;
        Ok(p)
    }
}

impl SystemConfig {
    /// Builds the spec, mollifying non-constant coefficients when `[system.regularize]` is set.
    pub fn build(&self, kernel: Option<&Arc<Kernel>>) -> Result<SystemSpec> {
        let (n, r) = (self.n, self.r);
        let mut spec = SystemSpec::new(n, r, self.extent, self.horizon)?;
        let reg = match &self.regularize {
            Some(cfg) => {
                let k = kernel.ok_or_else(|| invalid("kernel", "[system.regularize] needs a [kernel] section"))?;
                let law = parse_law(&cfg.law, cfg.factor)?;
                law.width(cfg.epsilon)?;
                spec = spec.with_epsilon(cfg.epsilon);
                Some((Arc::clone(k), law, cfg.epsilon))
            }
            None => None,
        };
        let extent = self.extent;
        let horizon = self.horizon;
        let space = |c: &CoefConfig| -> Result<Coef> {
            if let Some(v) = c.constant() {
                return Ok(Coef::Constant(v));
            }
            let f = c.to_fn()?;
            Ok(match &reg {
                Some((k, law, eps)) => {
                    let at = embed_linf(&f, k, *law, 0.0, extent)?.at(*eps);
                    Coef::of_x(move |x| at(x, 0.0))
                }
                None => Coef::of_x(move |x| f.eval(x)),
            })
        };
        let signal = |c: &CoefConfig, span: f64| -> Result<Signal> {
            if let Some(v) = c.constant() {
                return Ok(Signal::Constant(v));
            }
            let f = c.to_fn()?;
            Ok(match &reg {
                Some((k, law, eps)) => {
                    let at = embed_linf(&f, k, *law, 0.0, span)?.at(*eps);
                    Signal::func(move |s| at(s, 0.0))
                }
                None => Signal::func(move |s| f.eval(s)),
            })
        };

        if self.speeds.len() != n {
            return Err(invalid("speeds", format!("expected {n} entries, got {}", self.speeds.len())));
        }
        for (i, c) in self.speeds.iter().enumerate() {
            spec = spec.with_speed(i, space(c)?);
        }
        if !self.initial.is_empty() {
            if self.initial.len() != n {
                return Err(invalid("initial", format!("expected {n} entries, got {}", self.initial.len())));
            }
            for (i, c) in self.initial.iter().enumerate() {
                spec = spec.with_initial(i, signal(c, extent)?);
            }
        }
        if !self.sources.is_empty() {
            if self.sources.len() != n {
                return Err(invalid("sources", format!("expected {n} entries, got {}", self.sources.len())));
            }
            for (i, c) in self.sources.iter().enumerate() {
                spec = spec.with_source(i, space(c)?);
            }
        }
        if !self.coupling.is_empty() {
            if self.coupling.len() != n || self.coupling.iter().any(|row| row.len() != n) {
                return Err(invalid("coupling", format!("expected a {n} x {n} matrix")));
            }
            for (i, row) in self.coupling.iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    spec = spec.with_coupling(i, k, space(c)?);
                }
            }
        }
        if !self.boundary_matrix.is_empty() {
            if self.boundary_matrix.len() != r || self.boundary_matrix.iter().any(|row| row.len() != n - r) {
                return Err(invalid("boundary_matrix", format!("expected a {r} x {} matrix", n - r)));
            }
            for (i, row) in self.boundary_matrix.iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    spec = spec.with_boundary_coupling(i, r + k, signal(c, horizon)?);
                }
            }
        }
        if !self.boundary_data.is_empty() {
            if self.boundary_data.len() != r {
                return Err(invalid(
                    "boundary_data",
                    format!("expected {r} entries, got {}", self.boundary_data.len()),
                ));
            }
            for (i, c) in self.boundary_data.iter().enumerate() {
                spec = spec.with_boundary_data(i, signal(c, horizon)?);
            }
        }
        if let Some(d) = self.initial_radius {
            spec.compatibility.initial_radius = d;
        }
        if let Some(d) = self.boundary_radius {
            spec.compatibility.boundary_radius = d;
        }
        Ok(spec)
    }
}
