use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::piecewise::ScalarFn;

pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Coefficient of `(x, t)`.
#[derive(Clone)]
pub enum Coef {
    Zero,
    Constant(f64),
    Func(FieldFn),
}

impl Coef {
    pub fn func<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Coef::Func(Arc::new(f))
    }

    /// Time-independent coefficient `g(x)`.
    pub fn of_x<F: Fn(f64) -> f64 + Send + Sync + 'static>(g: F) -> Self {
        Coef::Func(Arc::new(move |x, _| g(x)))
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Coef::Zero => 0.0,
            Coef::Constant(c) => *c,
            Coef::Func(f) => f(x, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coef::Zero) || matches!(self, Coef::Constant(c) if *c == 0.0)
    }
}

impl fmt::Debug for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coef::Zero => write!(f, "Zero"),
            Coef::Constant(c) => write!(f, "Constant({c})"),
            Coef::Func(_) => write!(f, "Func(..)"),
        }
    }
}

/// Function of one variable (time for boundary rows, space for initial data).
#[derive(Clone)]
pub enum Signal {
    Zero,
    Constant(f64),
    Func(ScalarFn),
}

impl Signal {
    pub fn func<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Signal::Func(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant(c) => *c,
            Signal::Func(f) => f(s),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Signal::Zero) || matches!(self, Signal::Constant(c) if *c == 0.0)
    }
}

impl fmt::Debug for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Zero => write!(f, "Zero"),
            Signal::Constant(c) => write!(f, "Constant({c})"),
            Signal::Func(_) => write!(f, "Func(..)"),
        }
    }
}

/// Radii on which data must vanish so the corner `(0, 0)` is compatible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compatibility {
    pub initial_radius: f64,
    pub boundary_radius: f64,
}

/// Mixed problem `(∂t + λ_i ∂x) u_i = Σ_k f_ik u_k + a_i` on `[0, X] × [0, T]`
/// with `u(x, 0) = u0(x)` and, for the `r` positive-speed components,
/// `u_i(0, t) = Σ_{k >= r} ν_ik(t) u_k(0, t) + h_i(t)`.
///
/// Components are 0-based: `0..r` have positive speed, `r..n` negative.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub n: usize,
    pub r: usize,
    pub extent: f64,
    pub horizon: f64,
    pub speeds: Vec<Coef>,
    pub coupling: Vec<Vec<Coef>>,
    pub sources: Vec<Coef>,
    /// `r × (n - r)`; entry `[i][k]` multiplies outgoing component `r + k`.
    pub boundary_matrix: Vec<Vec<Signal>>,
    pub boundary_data: Vec<Signal>,
    pub initial_data: Vec<Signal>,
    pub compatibility: Compatibility,
    /// Regularization parameter the coefficients were built with, if any.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    InitialDataNearCorner { component: usize, x: f64, value: f64 },
    BoundaryDataNearCorner { component: usize, t: f64, value: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::InitialDataNearCorner { component, x, value } => {
                write!(f, "initial data of component {component} is {value:e} at x = {x} inside the corner radius")
            }
            Warning::BoundaryDataNearCorner { component, t, value } => {
                write!(f, "boundary data of component {component} is {value:e} at t = {t} inside the corner radius")
            }
        }
    }
}

const ORDER_SAMPLES: usize = 64;

impl SystemSpec {
    /// Zero coefficients everywhere; speeds must be set before solving.
    pub fn new(n: usize, r: usize, extent: f64, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "need at least one component"));
        }
        if r > n {
            return Err(invalid("r", "r exceeds n"));
        }
        if !(extent > 0.0) || !(horizon > 0.0) {
            return Err(invalid("extent", "extent and horizon must be positive"));
        }
        Ok(Self {
            n,
            r,
            extent,
            horizon,
            speeds: vec![Coef::Zero; n],
            coupling: vec![vec![Coef::Zero; n]; n],
            sources: vec![Coef::Zero; n],
            boundary_matrix: vec![vec![Signal::Zero; n - r]; r],
            boundary_data: vec![Signal::Zero; r],
            initial_data: vec![Signal::Zero; n],
            compatibility: Compatibility { initial_radius: 0.1 * extent, boundary_radius: 0.1 * horizon },
            epsilon: None,
        })
    }

    pub fn with_speed(mut self, i: usize, c: Coef) -> Self {
        self.speeds[i] = c;
        self
    }

    pub fn with_coupling(mut self, i: usize, k: usize, c: Coef) -> Self {
        self.coupling[i][k] = c;
        self
    }

    pub fn with_source(mut self, i: usize, c: Coef) -> Self {
        self.sources[i] = c;
        self
    }

    /// `ν_{i, outgoing}` for incoming `i < r` and outgoing `outgoing >= r`.
    pub fn with_boundary_coupling(mut self, i: usize, outgoing: usize, s: Signal) -> Self {
        self.boundary_matrix[i][outgoing - self.r] = s;
        self
    }

    pub fn with_boundary_data(mut self, i: usize, s: Signal) -> Self {
        self.boundary_data[i] = s;
        self
    }

    pub fn with_initial(mut self, i: usize, s: Signal) -> Self {
        self.initial_data[i] = s;
        self
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn has_coupling(&self) -> bool {
        self.coupling.iter().flatten().any(|c| !c.is_zero())
    }

    /// Checks shapes and the speed ordering; returns corner-compatibility warnings.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        let (n, r) = (self.n, self.r);
        if r > n {
            return Err(invalid("r", "r exceeds n"));
        }
        let shapes_ok = self.speeds.len() == n
            && self.sources.len() == n
            && self.initial_data.len() == n
            && self.coupling.len() == n
            && self.coupling.iter().all(|row| row.len() == n)
            && self.boundary_matrix.len() == r
            && self.boundary_matrix.iter().all(|row| row.len() == n - r)
            && self.boundary_data.len() == r;
        if !shapes_ok {
            return Err(invalid("spec", "coefficient arrays do not match n and r"));
        }
        self.check_ordering()?;
        Ok(self.compatibility_warnings())
    }

    fn check_ordering(&self) -> Result<()> {
        for jt in 0..=ORDER_SAMPLES {
            let t = self.horizon * jt as f64 / ORDER_SAMPLES as f64;
            for jx in 0..=ORDER_SAMPLES {
                let x = self.extent * jx as f64 / ORDER_SAMPLES as f64;
                let lam: Vec<f64> = self.speeds.iter().map(|c| c.eval(x, t)).collect();
                if lam.iter().any(|v| !v.is_finite()) {
                    return Err(Error::SpeedOrdering { x, t, detail: "non-finite speed".into() });
                }
                for i in 0..self.n {
                    let sign_ok = if i < self.r { lam[i] > 0.0 } else { lam[i] < 0.0 };
                    if !sign_ok {
                        return Err(Error::SpeedOrdering {
                            x,
                            t,
                            detail: format!("speed {i} = {} has the wrong sign for r = {}", lam[i], self.r),
                        });
                    }
                    if i + 1 < self.n && lam[i] <= lam[i + 1] {
                        return Err(Error::SpeedOrdering {
                            x,
                            t,
                            detail: format!("speed {i} = {} not above speed {} = {}", lam[i], i + 1, lam[i + 1]),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn compatibility_warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        let probes = 32;
        for (i, u0) in self.initial_data.iter().enumerate() {
            for p in 0..=probes {
                let x = self.compatibility.initial_radius * p as f64 / probes as f64;
                let v = u0.eval(x);
                if v != 0.0 {
                    out.push(Warning::InitialDataNearCorner { component: i, x, value: v });
                    break;
                }
            }
        }
        for (i, h) in self.boundary_data.iter().enumerate() {
            for p in 0..=probes {
                let t = self.compatibility.boundary_radius * p as f64 / probes as f64;
                let v = h.eval(t);
                if v != 0.0 {
                    out.push(Warning::BoundaryDataNearCorner { component: i, t, value: v });
                    break;
                }
            }
        }
        out
    }

    /// Sampled `max_i |λ_i|` on a grid over the domain.
    pub fn max_speed(&self, nx: usize) -> f64 {
        let mut vmax = 0.0f64;
        for jt in 0..=ORDER_SAMPLES / 2 {
            let t = self.horizon * jt as f64 / (ORDER_SAMPLES / 2) as f64;
            for jx in 0..=nx {
                let x = self.extent * jx as f64 / nx as f64;
                for c in &self.speeds {
                    vmax = vmax.max(c.eval(x, t).abs());
                }
            }
        }
        vmax
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> SystemSpec {
        SystemSpec::new(2, 1, 4.0, 1.0).unwrap().with_speed(0, Coef::Constant(1.0)).with_speed(1, Coef::Constant(-1.0))
    }

    #[test]
    fn r_exceeding_n_rejected() {
        let e = SystemSpec::new(2, 3, 1.0, 1.0).unwrap_err();
        assert!(e.to_string().contains("r exceeds n"));
    }

    #[test]
    fn ordering_checked() {
        assert!(two_by_two().validate().unwrap().is_empty());
        let bad = two_by_two().with_speed(1, Coef::Constant(0.5));
        assert!(matches!(bad.validate(), Err(Error::SpeedOrdering { .. })));
        let unset = SystemSpec::new(1, 1, 1.0, 1.0).unwrap();
        assert!(unset.validate().is_err());
    }

    #[test]
    fn corner_warnings() {
        let spec = two_by_two().with_initial(0, Signal::Constant(1.0)).with_boundary_data(0, Signal::func(|t| t));
        let w = spec.validate().unwrap();
        assert_eq!(w.len(), 2);
        assert!(matches!(w[0], Warning::InitialDataNearCorner { component: 0, .. }));
        assert!(matches!(w[1], Warning::BoundaryDataNearCorner { component: 0, .. }));
    }
}
