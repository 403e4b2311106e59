use std::io::Write;

use crate::export::fmt_num;

/// How a field was produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchemeMetadata {
    pub method: String,
    pub substeps: usize,
    pub passes: usize,
    pub iterations: Option<usize>,
    /// Sup-change per fixed-point iteration.
    pub residuals: Vec<f64>,
}

/// `n` components on the uniform lattice `(nx + 1) × (nt + 1)` over `[0, X] × [0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    nx: usize,
    nt: usize,
    n: usize,
    extent: f64,
    horizon: f64,
    /// Indexed `[level][component][node]`.
    values: Vec<f64>,
    epsilon: Option<f64>,
    pub meta: SchemeMetadata,
}

impl SolutionField {
    pub fn zeros(n: usize, nx: usize, nt: usize, extent: f64, horizon: f64) -> Self {
        Self {
            nx,
            nt,
            n,
            extent,
            horizon,
            values: vec![0.0; (nt + 1) * n * (nx + 1)],
            epsilon: None,
            meta: SchemeMetadata::default(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_values(
        n: usize,
        nx: usize,
        nt: usize,
        extent: f64,
        horizon: f64,
        values: Vec<f64>,
        epsilon: Option<f64>,
        meta: SchemeMetadata,
    ) -> Self {
        debug_assert_eq!(values.len(), (nt + 1) * n * (nx + 1));
        Self { nx, nt, n, extent, horizon, values, epsilon, meta }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.nx as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, eps: Option<f64>) {
        self.epsilon = eps;
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.extent * j as f64 / self.nx as f64
    }

    #[inline]
    pub fn t(&self, level: usize) -> f64 {
        self.horizon * level as f64 / self.nt as f64
    }

    #[inline]
    fn index(&self, level: usize, comp: usize, node: usize) -> usize {
        (level * self.n + comp) * (self.nx + 1) + node
    }

    #[inline]
    pub fn value(&self, level: usize, comp: usize, node: usize) -> f64 {
        self.values[self.index(level, comp, node)]
    }

    pub fn set(&mut self, level: usize, comp: usize, node: usize, v: f64) {
        let i = self.index(level, comp, node);
        self.values[i] = v;
    }

    /// All nodes of one component at one level.
    pub fn row(&self, level: usize, comp: usize) -> &[f64] {
        let start = self.index(level, comp, 0);
        &self.values[start..start + self.nx + 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bilinear interpolation, clamped to the lattice.
    pub fn interpolate(&self, comp: usize, x: f64, t: f64) -> f64 {
        let (j, wx) = cell(x / self.extent * self.nx as f64, self.nx);
        let (k, wt) = cell(t / self.horizon * self.nt as f64, self.nt);
        let lerp = |level: usize| {
            let a = self.value(level, comp, j);
            if wx == 0.0 {
                a
            } else {
                a + wx * (self.value(level, comp, j + 1) - a)
            }
        };
        let lo = lerp(k);
        if wt == 0.0 {
            lo
        } else {
            lo + wt * (lerp(k + 1) - lo)
        }
    }

    /// Largest `|u|` over every node and component.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with header `epsilon,x,t,component,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epsilon,x,t,component,value")?;
        self.write_rows(&mut w)
    }

    /// Rows only, for concatenating several fields under one header.
    pub fn write_rows<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let eps = self.epsilon.map(fmt_num).unwrap_or_default();
        for level in 0..=self.nt {
            let t = fmt_num(self.t(level));
            for comp in 0..self.n {
                for j in 0..=self.nx {
                    writeln!(w, "{eps},{},{t},{comp},{}", fmt_num(self.x(j)), fmt_num(self.value(level, comp, j)))?;
                }
            }
        }
        Ok(())
    }
}

/// Cell index and fractional weight for a clamped lattice coordinate.
#[inline]
pub(crate) fn cell(pos: f64, n: usize) -> (usize, f64) {
    if !(pos > 0.0) {
        return (0, 0.0);
    }
    if pos >= n as f64 {
        return (n, 0.0);
    }
    let j = (pos as usize).min(n - 1);
    (j, pos - j as f64)
}
