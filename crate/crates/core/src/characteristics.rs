//! Backward characteristics, boundary hits, and the two-speed medium geometry.

use crate::error::{invalid, Error, Result};

pub const DEFAULT_MAX_STEPS: usize = 10_000_000;
pub const ON_GAMMA_TOLERANCE: f64 = 1e-12;
/// Factor on the sampled max speed used as the Lipschitz bound `M`.
pub const SPEED_MARGIN: f64 = 1.01;

/// Where a backward characteristic ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal {
    /// Reached the initial line `t = 0` at `x`.
    Foot { x: f64 },
    /// Reached the boundary `x = 0` at time `t0 > 0`.
    BoundaryHit { t0: f64 },
}

impl Terminal {
    pub fn foot(&self) -> Option<f64> {
        match *self {
            Terminal::Foot { x } => Some(x),
            Terminal::BoundaryHit { .. } => None,
        }
    }

    pub fn hit_time(&self) -> Option<f64> {
        match *self {
            Terminal::BoundaryHit { t0 } => Some(t0),
            Terminal::Foot { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CharacteristicTrace {
    pub origin: (f64, f64),
    /// `+1` for positive speed at the origin, `-1` otherwise.
    pub speed_sign: i8,
    /// `(τ, γ(τ))` from `τ = t` down to the terminal.
    pub path: Vec<(f64, f64)>,
    pub terminal: Terminal,
}

impl CharacteristicTrace {
    /// Largest `|Δγ / Δτ|` between consecutive path samples.
    pub fn max_slope(&self) -> f64 {
        self.path.windows(2).map(|w| (w[1].1 - w[0].1).abs() / (w[0].0 - w[1].0)).fold(0.0, f64::max)
    }
}

/// One explicit midpoint step backward in time by `h` for `dγ/dτ = λ(γ, τ)`.
#[inline]
pub fn midpoint_back<F: Fn(f64, f64) -> f64 + ?Sized>(speed: &F, x: f64, tau: f64, h: f64) -> f64 {
    let half = x - 0.5 * h * speed(x, tau);
    x - h * speed(half, tau - 0.5 * h)
}

/// Bisection on the sub-step length `s in (0, h]` for the root of `γ(τ - s) = 0`.
pub fn locate_boundary_hit<F: Fn(f64, f64) -> f64 + ?Sized>(speed: &F, x: f64, tau: f64, h: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, h);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if midpoint_back(speed, x, tau, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    tau - 0.5 * (lo + hi)
}

/// Traces `dγ/dτ = λ(γ, τ)` backward from `start = (x, t)` with midpoint steps.
///
/// Stops at `τ = 0` or when `γ` crosses `x = 0`, whose time is located by
/// bisection to `step^2`.
pub fn trace_backward<F: Fn(f64, f64) -> f64 + ?Sized>(
    speed: &F,
    start: (f64, f64),
    step: f64,
) -> Result<CharacteristicTrace> {
    trace_backward_with(speed, start, step, DEFAULT_MAX_STEPS)
}

pub fn trace_backward_with<F: Fn(f64, f64) -> f64 + ?Sized>(
    speed: &F,
    start: (f64, f64),
    step: f64,
    max_steps: usize,
) -> Result<CharacteristicTrace> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid("step", "must be positive"));
    }
    let (x0, t0) = start;
    if !(x0 >= 0.0 && t0 >= 0.0) || !x0.is_finite() || !t0.is_finite() {
        return Err(invalid("start", "must lie in the closed quarter plane"));
    }
    let s0 = speed(x0, t0);
    if !s0.is_finite() {
        return Err(Error::NonFinite { epsilon: f64::NAN, x: x0, t: t0 });
    }
    let speed_sign = if s0 >= 0.0 { 1 } else { -1 };
    let mut path = vec![(t0, x0)];

    if t0 == 0.0 {
        return Ok(CharacteristicTrace { origin: start, speed_sign, path, terminal: Terminal::Foot { x: x0 } });
    }
    if x0 == 0.0 && s0 > 0.0 {
        return Ok(CharacteristicTrace { origin: start, speed_sign, path, terminal: Terminal::BoundaryHit { t0 } });
    }

    let (mut x, mut tau) = (x0, t0);
    for _ in 0..max_steps {
        let h = step.min(tau);
        let next = midpoint_back(speed, x, tau, h);
        if !next.is_finite() {
            return Err(Error::NonFinite { epsilon: f64::NAN, x, t: tau });
        }
        if next < 0.0 {
            let hit = locate_boundary_hit(speed, x, tau, h, step * step);
            path.push((hit, 0.0));
            return Ok(CharacteristicTrace {
                origin: start,
                speed_sign,
                path,
                terminal: Terminal::BoundaryHit { t0: hit },
            });
        }
        x = next;
        tau = if h == tau { 0.0 } else { tau - h };
        path.push((tau, x));
        if tau == 0.0 {
            return Ok(CharacteristicTrace { origin: start, speed_sign, path, terminal: Terminal::Foot { x } });
        }
    }
    Err(Error::TraceTooLong { max_steps })
}

/// Piecewise constant speed: `c_left` on `(0, interface)`, `c_right` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSpeedMedium {
    c_left: f64,
    c_right: f64,
    interface: f64,
}

impl TwoSpeedMedium {
    pub fn new(c_left: f64, c_right: f64, interface: f64) -> Result<Self> {
        for (name, v) in [("c_left", c_left), ("c_right", c_right), ("interface", interface)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(Self { c_left, c_right, interface })
    }

    pub fn c_left(&self) -> f64 {
        self.c_left
    }

    pub fn c_right(&self) -> f64 {
        self.c_right
    }

    pub fn interface(&self) -> f64 {
        self.interface
    }

    pub fn speed(&self, x: f64) -> f64 {
        if x < self.interface {
            self.c_left
        } else {
            self.c_right
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.c_left.max(self.c_right)
    }

    /// Position at time `t` of the forward characteristic from the origin.
    pub fn gamma(&self, t: f64) -> f64 {
        let t_cross = self.interface / self.c_left;
        if t <= t_cross {
            self.c_left * t
        } else {
            self.interface + self.c_right * (t - t_cross)
        }
    }
}

/// Direction of a backward ray: `+1` follows speed `+c`, `-1` follows `-c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Plus,
    Minus,
}

/// Exact backward ray tracing through the two-speed medium.
///
/// Speeds change at the interface but the path stays continuous; a `Plus` ray
/// that reaches `x = 0` before `τ = 0` is reported as a boundary hit.
pub fn broken_foot(m: &TwoSpeedMedium, start: (f64, f64), direction: Family) -> Terminal {
    let (x, t) = start;
    let x0 = m.interface;
    match direction {
        Family::Plus => {
            // moves left as τ decreases
            let (mut pos, mut remaining) = (x, t);
            if pos > x0 {
                let to_interface = (pos - x0) / m.c_right;
                if remaining <= to_interface {
                    return Terminal::Foot { x: pos - m.c_right * remaining };
                }
                remaining -= to_interface;
                pos = x0;
            }
            let to_axis = pos / m.c_left;
            if remaining <= to_axis {
                if pos == x0 && x > x0 {
                    // -c_L t + (c_L / c_R)(x - x0) + x0
                    return Terminal::Foot { x: -m.c_left * t + m.c_left / m.c_right * (x - x0) + x0 };
                }
                Terminal::Foot { x: pos - m.c_left * remaining }
            } else {
                Terminal::BoundaryHit { t0: remaining - to_axis }
            }
        }
        Family::Minus => {
            // moves right as τ decreases
            let (mut pos, mut remaining) = (x, t);
            if pos < x0 {
                let to_interface = (x0 - pos) / m.c_left;
                if remaining <= to_interface {
                    return Terminal::Foot { x: pos + m.c_left * remaining };
                }
                remaining -= to_interface;
                pos = x0;
            }
            Terminal::Foot { x: pos + m.c_right * remaining }
        }
    }
}

/// The two endpoints `(x1, x2)` bracketing the foot of the mollified `Plus` ray
/// for a start point whose ray crosses the interface layer of half-width `eta`.
pub fn bracket_bounds(m: &TwoSpeedMedium, start: (f64, f64), eta: f64, speed_bound: f64) -> Result<(f64, f64)> {
    let (x, t) = start;
    let (cl, cr, x0) = (m.c_left, m.c_right, m.interface);
    if !(eta > 0.0) || eta >= x0 {
        return Err(invalid("eta", format!("must lie in (0, interface), got {eta}")));
    }
    if speed_bound < m.max_speed() {
        return Err(invalid("speed_bound", "must be at least max(c_left, c_right)"));
    }
    if x <= x0 + eta {
        return Err(invalid("start", "must lie right of the interface layer"));
    }
    let x1 = cl * (-2.0 * eta / speed_bound - (x0 + eta - x) / cr - t) - eta + x0;
    let x2 = -cl * (-2.0 * eta / speed_bound + (x0 + eta - x) / cr + t) - eta + x0;
    Ok((x1.min(x2), x1.max(x2)))
}

/// True when the backward `Plus` ray from `start` reaches the interface before `τ = 0`.
pub fn crosses_interface(m: &TwoSpeedMedium, start: (f64, f64)) -> bool {
    let (x, t) = start;
    x > m.interface && t > (x - m.interface) / m.c_right
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Below the forward characteristic from the origin: data from `t = 0`.
    RegionI,
    /// Above it: data reflected from `x = 0`.
    RegionII,
    OnGamma,
}

pub fn classify_region(m: &TwoSpeedMedium, p: (f64, f64)) -> Region {
    let d = p.0 - m.gamma(p.1);
    if d.abs() <= ON_GAMMA_TOLERANCE {
        Region::OnGamma
    } else if d > 0.0 {
        Region::RegionI
    } else {
        Region::RegionII
    }
}
