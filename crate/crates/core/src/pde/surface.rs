use crate::error::{Error, Result};

/// Solver diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub steps: usize,
    pub total_picard_iterations: usize,
    pub max_picard_iterations: usize,
    /// Nodes whose final regime disagrees with the sign of the converged value.
    pub regime_mismatches: usize,
}

/// Solution `V(t_i, S_j)` on the solver grid, times ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    spot: f64,
    times: Vec<f64>,
    spots: Vec<f64>,
    values: Vec<f64>,
    stats: SolveStats,
}

impl ValueSurface {
    /// `values` is row-major: one row of `spots.len()` values per time.
    pub(crate) fn new(spot: f64, times: Vec<f64>, spots: Vec<f64>, values: Vec<f64>, stats: SolveStats) -> Self {
        debug_assert_eq!(values.len(), times.len() * spots.len());
        Self {
            spot,
            times,
            spots,
            values,
            stats,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn spots(&self) -> &[f64] {
        &self.spots
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    /// Spot the surface was solved around.
    pub fn spot(&self) -> f64 {
        self.spot
    }

    /// Node values at time index `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.spots.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spots.len() + j]
    }

    /// `V(0, S₀)`.
    pub fn price(&self) -> f64 {
        self.value_at(0.0, self.spot).unwrap_or(f64::NAN)
    }

    /// Whether `other` was solved on exactly the same nodes.
    pub fn same_grid(&self, other: &ValueSurface) -> bool {
        self.times == other.times && self.spots == other.spots
    }

    /// Bilinear interpolation.
    pub fn value_at(&self, t: f64, s: f64) -> Result<f64> {
        let (i, wt) = self.time_cell(t, s)?;
        let (j, ws) = self.space_cell(t, s)?;
        let at = |i: usize| (1.0 - ws) * self.node(i, j) + ws * self.node(i, j + 1);
        Ok(interp_rows(i, wt, at))
    }

    /// `∂V/∂S` from nodal three-point differences, interpolated bilinearly.
    pub fn delta_at(&self, t: f64, s: f64) -> Result<f64> {
        let (i, wt) = self.time_cell(t, s)?;
        let (j, ws) = self.space_cell(t, s)?;
        let at = |i: usize| (1.0 - ws) * self.nodal_delta(i, j) + ws * self.nodal_delta(i, j + 1);
        Ok(interp_rows(i, wt, at))
    }

    fn nodal_delta(&self, i: usize, j: usize) -> f64 {
        let x = &self.spots;
        let v = self.row(i);
        let n = x.len() - 1;
        if j == 0 {
            return (v[1] - v[0]) / (x[1] - x[0]);
        }
        if j == n {
            return (v[n] - v[n - 1]) / (x[n] - x[n - 1]);
        }
        let hm = x[j] - x[j - 1];
        let hp = x[j + 1] - x[j];
        -hp / (hm * (hm + hp)) * v[j - 1] + (hp - hm) / (hm * hp) * v[j] + hm / (hp * (hm + hp)) * v[j + 1]
    }

    fn time_cell(&self, t: f64, s: f64) -> Result<(usize, f64)> {
        locate(&self.times, t).ok_or(Error::OutOfDomain { t, spot: s })
    }

    fn space_cell(&self, t: f64, s: f64) -> Result<(usize, f64)> {
        locate(&self.spots, s).ok_or(Error::OutOfDomain { t, spot: s })
    }
}

fn interp_rows<F: Fn(usize) -> f64>(i: usize, w: f64, at: F) -> f64 {
    if w == 0.0 {
        at(i)
    } else {
        (1.0 - w) * at(i) + w * at(i + 1)
    }
}

/// Cell index `k` and weight `w` with `x = (1 − w)·xs[k] + w·xs[k+1]`.
/// The weight is exactly zero on a node.
fn locate(xs: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = xs.len();
    if n < 2 || !(x >= xs[0] && x <= xs[n - 1]) {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    if xs[k] == x {
        return Some((k, 0.0));
    }
    if xs[k + 1] == x {
        return Some((k, 1.0));
    }
    Some((k, (x - xs[k]) / (xs[k + 1] - xs[k])))
}
