//! Composite Gauss-Legendre quadrature.

/// Nodes and weights of the 8-point Gauss-Legendre rule on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// An integral value with the difference against a coarser pass.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Composite 8-point Gauss-Legendre rule with `panels` equal panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let half = 0.5 * h;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut acc = 0.0;
        for &(node, weight) in &GL8 {
            acc += weight * f(mid + half * node);
        }
        total += acc * half;
    }
    total
}

/// Calls `visit(node, weight)` for every node of the composite rule on `[a, b]`.
pub fn gauss_nodes<V: FnMut(f64, f64)>(a: f64, b: f64, panels: usize, mut visit: V) {
    if b <= a {
        return;
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let half = 0.5 * h;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(node, weight) in &GL8 {
            visit(mid + half * node, weight * half);
        }
    }
}

/// Integrates with `panels` and `2 * panels`, returning the refined value.
pub fn integrate_refined<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> Estimate {
    let coarse = gauss_legendre(&f, a, b, panels);
    let fine = gauss_legendre(&f, a, b, 2 * panels.max(1));
    Estimate { value: fine, error: (fine - coarse).abs() }
}

/// Integrates across subintervals split at `breaks` (points outside `(a, b)` are ignored).
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], panels: usize) -> Estimate {
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let mut value = 0.0;
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let e = integrate_refined(&f, w[0], w[1], panels);
        value += e.value;
        error += e.error;
    }
    Estimate { value, error }
}
