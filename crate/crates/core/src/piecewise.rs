//! Bounded piecewise-smooth functions of one variable with explicit jump points.
//!
//! These are the raw, possibly discontinuous, inputs (coefficients, initial
//! and boundary data) that get mollified into smooth families. The first
//! piece extends to `-inf` and the last to `+inf`, so convolution windows that
//! stick out of the quarter-line still see a defined value.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One smooth piece.
#[derive(Clone)]
pub enum Piece {
    Constant(f64),
    Smooth(ScalarFn),
}

impl Piece {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Piece::Constant(c) => *c,
            Piece::Smooth(f) => f(x),
        }
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Constant(c) => write!(f, "Constant({c})"),
            Piece::Smooth(_) => write!(f, "Smooth(..)"),
        }
    }
}

/// `pieces[i]` applies on `[breaks[i-1], breaks[i])`, with the outer pieces
/// extended to infinity. Right-continuous at the breaks.
#[derive(Clone, Debug)]
pub struct PiecewiseFn {
    breaks: Vec<f64>,
    pieces: Vec<Piece>,
}

/// Unit bump `exp(1 - 1/(1 - s^2))` on `|s| < 1`, peak value 1 at `s = 0`.
pub fn unit_bump(s: f64) -> f64 {
    let d = 1.0 - s * s;
    if d <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / d).exp()
    }
}

/// Smooth transition: 0 for `s <= 0`, 1 for `s >= 1`, built from `exp(-1/s)`.
pub fn smooth_transition(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let g = |u: f64| (-1.0 / u).exp();
    let a = g(s);
    a / (a + g(1.0 - s))
}

impl PiecewiseFn {
    pub fn new(breaks: Vec<f64>, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.len() != breaks.len() + 1 {
            return Err(invalid("pieces", format!("{} pieces for {} breaks", pieces.len(), breaks.len())));
        }
        if breaks.iter().any(|b| !b.is_finite()) {
            return Err(invalid("breaks", "non-finite break point"));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("breaks", "break points must be strictly increasing"));
        }
        Ok(Self { breaks, pieces })
    }

    pub fn constant(c: f64) -> Self {
        Self { breaks: Vec::new(), pieces: vec![Piece::Constant(c)] }
    }

    /// `left` for `x < at`, `right` for `x >= at`.
    pub fn step(at: f64, left: f64, right: f64) -> Self {
        Self { breaks: vec![at], pieces: vec![Piece::Constant(left), Piece::Constant(right)] }
    }

    /// Piecewise constant with `values.len() == breaks.len() + 1`.
    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(breaks, values.into_iter().map(Piece::Constant).collect())
    }

    pub fn smooth<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self { breaks: Vec::new(), pieces: vec![Piece::Smooth(Arc::new(f))] }
    }

    /// Smooth compactly supported bump with the given peak height.
    pub fn bump(center: f64, radius: f64, height: f64) -> Self {
        Self {
            breaks: vec![center - radius, center + radius],
            pieces: vec![
                Piece::Constant(0.0),
                Piece::Smooth(Arc::new(move |x| height * unit_bump((x - center) / radius))),
                Piece::Constant(0.0),
            ],
        }
    }

    /// Linear interpolation through `(xs, ys)`, constant outside the table.
    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(invalid("table", "x and y columns must be non-empty and equal length"));
        }
        if xs.len() == 1 {
            return Ok(Self::constant(ys[0]));
        }
        let mut pieces = vec![Piece::Constant(ys[0])];
        for i in 0..xs.len() - 1 {
            let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
            let slope = (y1 - y0) / (x1 - x0);
            pieces.push(Piece::Smooth(Arc::new(move |x| y0 + slope * (x - x0))));
        }
        pieces.push(Piece::Constant(ys[ys.len() - 1]));
        Self::new(xs, pieces)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Index of the piece containing `x`.
    #[inline]
    pub fn piece_index(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b <= x)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].eval(x)
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p, Piece::Constant(_)))
    }

    /// Sampled `sup |f|` on `[lo, hi]`; constant pieces contribute exactly.
    pub fn sup_abs(&self, lo: f64, hi: f64, samples: usize) -> Result<f64> {
        let mut sup = 0.0f64;
        let n = samples.max(2);
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = self.eval(x);
            if !v.is_finite() {
                return Err(Error::Unbounded { x });
            }
            sup = sup.max(v.abs());
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if let Piece::Constant(c) = p {
                let left = if i == 0 { f64::NEG_INFINITY } else { self.breaks[i - 1] };
                let right = self.breaks.get(i).copied().unwrap_or(f64::INFINITY);
                if right > lo && left < hi {
                    sup = sup.max(c.abs());
                }
            }
        }
        Ok(sup)
    }

    /// Product with a smooth cutoff vanishing on `(-inf, r]` and equal to 1 on `[2r, inf)`.
    pub fn with_zero_near_origin(&self, r: f64) -> Result<Self> {
        if r < 0.0 || !r.is_finite() {
            return Err(invalid("zero_radius", "must be finite and non-negative"));
        }
        if r == 0.0 {
            return Ok(self.clone());
        }
        let (a, b) = (r, 2.0 * r);
        let mut breaks: Vec<f64> = self.breaks.iter().copied().filter(|&x| x > a).collect();
        breaks.push(a);
        breaks.push(b);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut pieces = Vec::with_capacity(breaks.len() + 1);
        pieces.push(Piece::Constant(0.0));
        for i in 0..breaks.len() {
            let left = breaks[i];
            let right = breaks.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let probe = if right.is_finite() { 0.5 * (left + right) } else { left + 1.0 };
            let inner = self.pieces[self.piece_index(probe)].clone();
            if left >= b {
                pieces.push(inner);
            } else {
                pieces.push(Piece::Smooth(Arc::new(move |x| inner.eval(x) * smooth_transition((x - a) / (b - a)))));
            }
        }
        Self::new(breaks, pieces)
    }
}
