//! Time and space quadrature shared by the adjustment integrals.

use crate::error::{Error, Result};

/// Composite trapezoid rule on arbitrary (sorted) abscissae.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Trapezoid rule for integrands with piecewise-constant rate factors.
///
/// `f(t, mid)` evaluates the integrand at node `t` using the short rates of
/// the interval whose midpoint is `mid`, so jumps at curve breakpoints that
/// sit on quadrature nodes are integrated without smearing.
pub(crate) fn interval_trapezoid<F: FnMut(f64, f64) -> f64>(times: &[f64], mut f: F) -> f64 {
    times
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            0.5 * (w[1] - w[0]) * (f(w[0], mid) + f(w[1], mid))
        })
        .sum()
}

/// `n` uniform intervals on `[0, horizon]` with every breakpoint inside the
/// interval inserted as an extra node.
pub fn uniform_times(horizon: f64, n: usize, breakpoints: &[f64]) -> Result<Vec<f64>> {
    if horizon.is_nan() || horizon <= 0.0 || n == 0 {
        return Err(Error::InvalidQuadrature(format!(
            "need horizon > 0 and at least one interval (horizon = {horizon}, n = {n})"
        )));
    }
    let mut t: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
    t.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < horizon));
    t.sort_by(|a, b| a.total_cmp(b));
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * horizon);
    Ok(t)
}

/// Validates a quadrature grid: starts at 0, strictly increasing, ends at `horizon`.
pub fn check_times(times: &[f64], horizon: f64) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidQuadrature("at least two nodes required".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidQuadrature(format!(
            "first node must be 0, got {}",
            times[0]
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidQuadrature("nodes must be strictly increasing".into()));
    }
    let last = times[times.len() - 1];
    if (last - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::InvalidQuadrature(format!(
            "last node {last} does not match horizon {horizon}"
        )));
    }
    Ok(())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`, with panel edges
/// at `cuts` (ignored outside the interval) and `panels` uniform sub-panels.
pub(crate) fn composite_gauss<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cuts: &[f64],
    panels: usize,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let mut edges: Vec<f64> = (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect();
    edges.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    edges.sort_by(|x, y| x.total_cmp(y));
    edges.dedup();
    let (nodes, weights) = rule;
    let mut acc = 0.0;
    for w in edges.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let mid = 0.5 * (w[1] + w[0]);
        if half <= 0.0 {
            continue;
        }
        acc += half
            * nodes
                .iter()
                .zip(weights)
                .map(|(&x, &wt)| wt * f(mid + half * x))
                .sum::<f64>();
    }
    acc
}
