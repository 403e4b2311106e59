//! Config-driven experiment runner behind the `colombeau` binary.
//!
//! Each [`Subcommand`] reads the sections of an [`ExperimentConfig`] it needs,
//! writes its CSV artifacts into the output directory and returns one
//! [`Check`] per invariant it verified.

mod config;

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

pub use config::{
    parse_law, AssociationConfig, CharacteristicsConfig, CoefConfig, EmbedConfig, ExperimentConfig, GrowthConfig,
    KernelConfig, MediumConfig, OutputConfig, PicardConfig, RegularizeConfig, SolveConfig, SystemConfig,
    TestFunctionConfig, TransmissionConfig,
};

use crate::characteristics::{trace_backward, TwoSpeedMedium};
use crate::embedding::{classify_growth, embed_linf, GrowthClass, Region, WidthLaw};
use crate::error::Error;
use crate::export::{
    fmt_num, write_association_csv, write_convergence_csv, write_growth_csv, write_kernel_csv, write_trace_csv,
};
use crate::kernels::{Kernel, MASS_TOLERANCE, MOMENT_TOLERANCE};
use crate::piecewise::PiecewiseFn;
use crate::solver::{
    check_bound, determination_domain, picard_solve, refined_sup, solve_mixed, solve_on_lattice, GronwallInputs,
    SolutionField, SolveOptions, SystemSpec,
};
use crate::transmission::{
    association_test, characteristic_convergence, regularized_family, regularized_spec, regularized_speed,
    AssociationReport, TransmissionProblem, Wave,
};

/// Environment variable that overrides `[output] dir`.
pub const OUT_DIR_ENV: &str = "COLOMBEAU_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "out";
const SUP_SAMPLES: usize = 512;
const BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Kernel,
    Embed,
    Growth,
    Characteristics,
    Solve,
    Picard,
    Transmit,
    Associate,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::Kernel,
        Subcommand::Embed,
        Subcommand::Growth,
        Subcommand::Characteristics,
        Subcommand::Solve,
        Subcommand::Picard,
        Subcommand::Transmit,
        Subcommand::Associate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Kernel => "kernel",
            Subcommand::Embed => "embed",
            Subcommand::Growth => "growth",
            Subcommand::Characteristics => "characteristics",
            Subcommand::Solve => "solve",
            Subcommand::Picard => "picard",
            Subcommand::Transmit => "transmit",
            Subcommand::Associate => "associate",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subcommand::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown subcommand {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Default)]
pub struct RunOutcome {
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    /// Unreadable or invalid configuration; the message names the key.
    Config(String),
    /// A numerical routine failed; details were written to `diagnostic`.
    Numerical {
        message: String,
        diagnostic: PathBuf,
    },
    Io(io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } | RunError::Io(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical { message, diagnostic } => {
                write!(f, "numerical failure: {message} (diagnostic: {})", diagnostic.display())
            }
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Failure inside a subcommand, classified once the output directory is known.
#[derive(Debug)]
enum Failure {
    Config(String),
    Lib(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => Failure::Io(e),
            other => Failure::Lib(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn missing(section: &str) -> Failure {
    Failure::Config(format!("missing section [{section}]"))
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::InvalidParameter { .. } | Error::SpeedOrdering { .. } | Error::DomainMismatch)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text =
        fs::read_to_string(path).map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| RunError::Config(e.to_string()))
}

/// Output directory: the environment override, else `[output] dir`, else `out`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(dir);
    }
    PathBuf::from(cfg.output.as_ref().map_or(DEFAULT_OUT_DIR, |o| o.dir.as_str()))
}

/// Loads the config at `config_path` and runs one subcommand.
pub fn run(config_path: &Path, sub: Subcommand) -> Result<RunOutcome, RunError> {
    let cfg = load_config(config_path)?;
    run_config(&cfg, sub)
}

pub fn run_config(cfg: &ExperimentConfig, sub: Subcommand) -> Result<RunOutcome, RunError> {
    let dir = output_dir(cfg);
    fs::create_dir_all(&dir)?;
    let mut ctx = Ctx { dir: dir.clone(), out: RunOutcome::default() };
    let result = match sub {
        Subcommand::Kernel => kernel(cfg, &mut ctx),
        Subcommand::Embed => embed(cfg, &mut ctx),
        Subcommand::Growth => growth(cfg, &mut ctx),
        Subcommand::Characteristics => characteristics(cfg, &mut ctx),
        Subcommand::Solve => solve(cfg, &mut ctx),
        Subcommand::Picard => picard(cfg, &mut ctx),
        Subcommand::Transmit => transmit(cfg, &mut ctx),
        Subcommand::Associate => associate(cfg, &mut ctx),
    };
    match result {
        Ok(()) => Ok(ctx.out),
        Err(Failure::Config(m)) => Err(RunError::Config(m)),
        Err(Failure::Lib(e)) if is_config_error(&e) => Err(RunError::Config(e.to_string())),
        Err(Failure::Lib(e)) => {
            let diagnostic = dir.join("diagnostic.txt");
            let mut text = format!("subcommand: {sub}\nerror: {e}\ndetail: {e:?}\n");
            if let Error::NonConvergence { residuals, .. } = &e {
                text.push_str("residuals:\n");
                for r in residuals {
                    text.push_str(&format!("{}\n", fmt_num(*r)));
                }
            }
            fs::write(&diagnostic, text)?;
            Err(RunError::Numerical { message: e.to_string(), diagnostic })
        }
        Err(Failure::Io(e)) => Err(RunError::Io(e)),
    }
}

struct Ctx {
    dir: PathBuf,
    out: RunOutcome,
}

impl Ctx {
    fn write<F>(&mut self, name: &str, body: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        self.out.artifacts.push(path);
        Ok(())
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.out.checks.push(Check::new(name, pass, detail));
    }
}

fn build_kernel(cfg: &ExperimentConfig) -> Result<Arc<Kernel>, Failure> {
    Ok(cfg.kernel.as_ref().ok_or_else(|| missing("kernel"))?.build()?)
}

fn kernel(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let k = build_kernel(cfg)?;
    ctx.write("kernel.csv", |w| write_kernel_csv(w, k.samples()))?;
    let (mass, worst) = k.moment_residuals();
    ctx.check("mass", mass <= MASS_TOLERANCE, format!("q = {}, |int chi - 1| = {mass:.3e}", k.moment_order()));
    ctx.check("moments", worst <= MOMENT_TOLERANCE, format!("max |int x^k chi| = {worst:.3e}"));
    Ok(())
}

fn embed(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let k = build_kernel(cfg)?;
    let e = cfg.embed.as_ref().ok_or_else(|| missing("embed"))?;
    let f = e.coefficient.to_fn()?;
    let fam = embed_linf(&f, &k, parse_law(&e.law, e.factor)?, e.zero_radius, e.extent)?;
    let margin = 2.0 * k.support_radius() + 1.0;
    let sup_f = refined_sup(|x| f.eval(x), -margin, e.extent + margin, 4096);
    let n = e.samples.max(2);
    let xs: Vec<f64> = (0..n).map(|j| e.extent * j as f64 / (n - 1) as f64).collect();
    let rows: Vec<(f64, Vec<f64>)> =
        e.schedule.iter().map(|&eps| (eps, xs.iter().map(|&x| fam.eval(eps, x, 0.0)).collect())).collect();
    ctx.write("embed.csv", |w| {
        writeln!(w, "epsilon,x,t,component,value")?;
        for (eps, vals) in &rows {
            for (x, v) in xs.iter().zip(vals) {
                writeln!(w, "{},{},{},0,{}", fmt_num(*eps), fmt_num(*x), fmt_num(0.0), fmt_num(*v))?;
            }
        }
        Ok(())
    })?;
    let sup = rows.iter().flat_map(|(_, v)| v.iter().map(|y| y.abs())).fold(0.0, f64::max);
    let finite = rows.iter().all(|(_, v)| v.iter().all(|y| y.is_finite()));
    ctx.check("bounded", finite && sup <= sup_f, format!("sup |f^eps| = {sup:.6e}, sup |f| = {sup_f:.6e}"));
    Ok(())
}

fn growth(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let k = build_kernel(cfg)?;
    let e = cfg.embed.as_ref().ok_or_else(|| missing("embed"))?;
    let g = cfg.growth.as_ref().ok_or_else(|| missing("growth"))?;
    let f = e.coefficient.to_fn()?;
    let mut fam = embed_linf(&f, &k, parse_law(&e.law, e.factor)?, e.zero_radius, e.extent)?;
    if g.derivative {
        if !(g.step > 0.0) {
            return Err(Failure::Config("growth.step must be positive".into()));
        }
        fam = fam.x_derivative(g.step);
    }
    let report = classify_growth(&fam, Region::Interval { lo: 0.0, hi: e.extent }, &e.schedule, g.resolution)?;
    ctx.write("growth.csv", |w| write_growth_csv(w, &report))?;
    let detail = format!("class {:?}, fit residual {:.3e}", report.fitted_class, report.fit_residual);
    match g.expect.as_deref() {
        None => ctx.check("growth", report.fit_residual.is_finite(), detail),
        Some(want) => {
            let got = match report.fitted_class {
                GrowthClass::GloballyBounded => "bounded",
                GrowthClass::LogGrowth { .. } => "log",
                GrowthClass::PowerGrowth { .. } => "power",
                GrowthClass::NegligibleToOrder { .. } => "negligible",
            };
            if !["bounded", "log", "power", "negligible"].contains(&want) {
                return Err(Failure::Config(format!("growth.expect: unknown class {want:?}")));
            }
            ctx.check("growth", got == want, format!("{detail}, expected {want}"));
        }
    }
    Ok(())
}

fn medium(cfg: &ExperimentConfig) -> Result<TwoSpeedMedium, Failure> {
    Ok(cfg.medium.as_ref().ok_or_else(|| missing("medium"))?.build()?)
}

fn characteristics(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let k = build_kernel(cfg)?;
    let m = medium(cfg)?;
    let c = cfg.characteristics.as_ref().ok_or_else(|| missing("characteristics"))?;
    let start = (c.start[0], c.start[1]);
    if !(start.0 > 0.0 && start.1 > 0.0) {
        return Err(Failure::Config("characteristics.start must have positive x and t".into()));
    }
    let extent = 2.0 * (start.0 + m.max_speed() * start.1).max(m.interface());
    let zero = PiecewiseFn::constant(0.0);
    let p = TransmissionProblem::new(m, zero.clone(), zero, start.1, extent)?;
    let report = characteristic_convergence(&p, &k, start, &c.schedule)?;
    ctx.write("convergence.csv", |w| {
        write_convergence_csv(w, report.rows.iter().map(|r| (r.epsilon, r.eta, r.foot, r.bracket, r.error)))
    })?;

    let eps = *c.schedule.last().expect("schedule checked non-empty");
    let eta = WidthLaw::LogInverse.width(eps)? * k.support_radius();
    let speed = regularized_speed(&p, &k, eps)?;
    let trace = trace_backward(&|x: f64, _t: f64| speed(x), start, eta / (16.0 * m.max_speed()))?;
    ctx.write("trace.csv", |w| write_trace_csv(w, &trace.path))?;

    let worst = report.rows.iter().map(|r| r.error).fold(0.0, f64::max);
    let outside = report.rows.iter().filter(|r| r.contained == Some(false)).count();
    ctx.check("bracket", report.all_contained, format!("{outside} of {} feet outside [x1, x2]", report.rows.len()));
    ctx.check(
        "limit",
        report.all_within_three_eta,
        format!("broken foot {:.6}, max |foot - limit| = {worst:.3e}", report.limit),
    );
    Ok(())
}

fn system(cfg: &ExperimentConfig) -> Result<(SystemSpec, Vec<String>), Failure> {
    let s = cfg.system.as_ref().ok_or_else(|| missing("system"))?;
    let kernel = match (&s.regularize, &cfg.kernel) {
        (Some(_), Some(k)) => Some(k.build()?),
        _ => None,
    };
    let spec = s.build(kernel.as_ref())?;
    let warnings = spec.validate()?.iter().map(ToString::to_string).collect();
    Ok((spec, warnings))
}

/// Gronwall check over the determination domain of the whole quarter-strip.
fn gronwall_check(spec: &SystemSpec, field: &SolutionField) -> Result<Check, Failure> {
    let slope = spec.max_speed(field.nx()).max(f64::MIN_POSITIVE);
    let domain = determination_domain((0.0, spec.extent), slope, spec.horizon)?;
    let g = GronwallInputs::measure(spec, &domain, SUP_SAMPLES);
    let r = check_bound(field, &g, &domain)?;
    let sup = r.component_sups.iter().copied().fold(0.0, f64::max);
    let label = field.epsilon().map_or_else(|| "gronwall".to_string(), |e| format!("gronwall eps={e:e}"));
    Ok(Check::new(label, r.pass, format!("sup |u| = {sup:.6e} <= bound {:.6e} ({} nodes)", r.bound, r.nodes_sampled)))
}

fn solve(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let (spec, warnings) = system(cfg)?;
    ctx.out.warnings.extend(warnings);
    let s = cfg.solve.as_ref().ok_or_else(|| missing("solve"))?;
    let field = solve_mixed(&spec, &SolveOptions::new(s.nx, s.cfl))?;
    ctx.write("solution.csv", |w| field.write_csv(w))?;
    let check = gronwall_check(&spec, &field)?;
    ctx.out.checks.push(check);
    Ok(())
}

fn picard(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let (spec, warnings) = system(cfg)?;
    ctx.out.warnings.extend(warnings);
    let p = cfg.picard.as_ref().ok_or_else(|| missing("picard"))?;
    let oracle = picard_solve(&spec, p.nx, p.nt, p.max_iter, p.tol)?;
    ctx.write("picard.csv", |w| oracle.write_csv(w))?;
    let iterations = oracle.meta.iterations.unwrap_or(0);
    let last = oracle.meta.residuals.last().copied().unwrap_or(0.0);
    ctx.check("converged", true, format!("{iterations} iterations, last change {last:.3e}"));

    let cfl = cfg.solve.as_ref().map_or(crate::solver::DEFAULT_CFL, |s| s.cfl);
    let marched = solve_on_lattice(&spec, p.nx, p.nt, &SolveOptions::new(p.nx, cfl))?;
    let diff = oracle.values().iter().zip(marched.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ctx.check(
        "agreement",
        diff <= p.agreement,
        format!("sup |picard - marching| = {diff:.3e} on {}x{} (limit {:.1e})", p.nx, p.nt, p.agreement),
    );
    Ok(())
}

fn transmission(cfg: &ExperimentConfig) -> Result<(Arc<Kernel>, TransmissionProblem, Vec<f64>, usize), Failure> {
    let k = build_kernel(cfg)?;
    let m = medium(cfg)?;
    let t = cfg.transmission.as_ref().ok_or_else(|| missing("transmission"))?;
    Ok((k, t.build(m)?, t.schedule.clone(), t.nx))
}

fn transmit(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let (k, p, schedule, nx) = transmission(cfg)?;
    let fields = regularized_family(&p, &k, &schedule, nx)?;
    ctx.write("transmission.csv", |w| {
        writeln!(w, "epsilon,x,t,component,value")?;
        for f in &fields {
            f.write_rows(w)?;
        }
        Ok(())
    })?;
    for (f, &eps) in fields.iter().zip(&schedule) {
        let spec = regularized_spec(&p, &k, eps)?;
        let (nu, h) = (&spec.boundary_matrix[0][0], &spec.boundary_data[0]);
        let gap = (0..=f.nt())
            .map(|l| {
                let t = f.t(l);
                let want = nu.eval(t) * f.value(l, 1, 0) + h.eval(t);
                (f.value(l, 0, 0) - want).abs() / want.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        ctx.check(
            format!("boundary eps={eps:e}"),
            gap <= BOUNDARY_TOLERANCE,
            format!("max |u(0,t) - h v(0,t) - b| = {gap:.3e}"),
        );
        let check = gronwall_check(&spec, f)?;
        ctx.out.checks.push(check);
    }
    Ok(())
}

fn association_check(r: &AssociationReport) -> Check {
    let last = r.integrals.last().copied().unwrap_or(f64::NAN);
    Check::new(
        format!("association {:?}", r.wave),
        r.pass,
        format!(
            "|I(eps_min)| = {:.3e} (tolerance {:.3e}), monotone within 10%: {}",
            last.abs(),
            r.tolerance,
            r.monotone
        ),
    )
}

fn associate(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let (k, p, schedule, nx) = transmission(cfg)?;
    let a = cfg.association.as_ref().ok_or_else(|| missing("association"))?;
    let psi_u = a.psi_u.build()?;
    let psi_v = a.psi_v.map(|c| c.build()).transpose()?;
    let fields = regularized_family(&p, &k, &schedule, nx)?;
    let u = association_test(&fields, &p, &psi_u, Wave::U)?;
    ctx.write("association.csv", |w| write_association_csv(w, &u.epsilon_schedule, &u.integrals))?;
    ctx.out.checks.push(association_check(&u));
    if let Some(psi) = psi_v {
        let v = association_test(&fields, &p, &psi, Wave::V)?;
        ctx.write("association_v.csv", |w| write_association_csv(w, &v.epsilon_schedule, &v.integrals))?;
        ctx.out.checks.push(association_check(&v));
    }
    Ok(())
}
