use crate::error::{Error, Result};

/// Discretization controls for [`solve_pde`](super::solve_pde).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Number of intervals in S.
    pub num_space: usize,
    /// Number of time steps before Rannacher sub-stepping.
    pub num_time: usize,
    /// `S_max = S0 · exp(k σ √T)`.
    pub space_max_multiplier: f64,
    /// 0.5 is Crank–Nicolson, 1.0 fully implicit.
    pub scheme_theta: f64,
    /// Fully implicit half-steps at the start of the backward sweep.
    pub rannacher_steps: usize,
    /// Absolute max-norm change that ends the per-step regime iteration.
    pub picard_tol: f64,
    pub picard_max_iters: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            num_space: 1600,
            num_time: 800,
            space_max_multiplier: 5.0,
            scheme_theta: 0.5,
            rannacher_steps: 2,
            picard_tol: 1e-10,
            picard_max_iters: 50,
        }
    }
}

impl GridSpec {
    pub fn with_size(num_space: usize, num_time: usize) -> Self {
        Self {
            num_space,
            num_time,
            ..Self::default()
        }
    }

    /// The same spec with both dimensions multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            num_space: self.num_space * factor,
            num_time: self.num_time * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_space < 2 || self.num_time < 2 {
            return Err(Error::InvalidGrid(format!(
                "num_space and num_time must be at least 2 (got {} x {})",
                self.num_space, self.num_time
            )));
        }
        if !(self.space_max_multiplier > 0.0 && self.space_max_multiplier.is_finite()) {
            return Err(Error::InvalidGrid("space_max_multiplier must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.scheme_theta) {
            return Err(Error::InvalidGrid(format!(
                "scheme_theta {} outside [0, 1]",
                self.scheme_theta
            )));
        }
        if self.picard_tol.is_nan() || self.picard_tol <= 0.0 {
            return Err(Error::InvalidGrid("picard_tol must be positive".into()));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::InvalidGrid("picard_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform nodes on `[0, S_max]`, with the nearest interior node moved onto
/// each pin (strikes, then spot). A pin whose nearest node is already taken
/// by an earlier pin is skipped.
pub(crate) fn space_nodes(spec: &GridSpec, spot: f64, vol: f64, maturity: f64, pins: &[f64]) -> Vec<f64> {
    let n = spec.num_space;
    let s_max = spot * (spec.space_max_multiplier * vol * maturity.sqrt()).exp();
    let ds = s_max / n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|j| j as f64 * ds).collect();
    nodes[n] = s_max;
    let mut pinned = vec![false; n + 1];
    for &p in pins {
        if !(p > 0.0 && p < s_max) {
            continue;
        }
        let j = (p / ds).round() as usize;
        if j == 0 || j >= n || pinned[j] {
            continue;
        }
        nodes[j] = p;
        pinned[j] = true;
    }
    nodes
}

/// One backward step from `t_hi` to `t_lo` with weight `theta` on the earlier level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TimeStep {
    pub t_lo: f64,
    pub t_hi: f64,
    pub theta: f64,
}

/// Backward step sequence starting at maturity. The first
/// `ceil(rannacher_steps / 2)` full steps are replaced by `rannacher_steps`
/// fully implicit sub-steps of equal length.
pub(crate) fn time_steps(spec: &GridSpec, maturity: f64) -> Vec<TimeStep> {
    let n = spec.num_time;
    let dt = maturity / n as f64;
    let level = |i: usize| if i == n { 0.0 } else { maturity - i as f64 * dt };
    let replaced = spec.rannacher_steps.div_ceil(2).min(n);
    let mut steps = Vec::with_capacity(n + spec.rannacher_steps);
    if replaced > 0 && spec.rannacher_steps > 0 {
        let end = level(replaced);
        let sub = spec.rannacher_steps;
        for k in 0..sub {
            let hi = if k == 0 {
                maturity
            } else {
                maturity - (maturity - end) * k as f64 / sub as f64
            };
            let lo = if k + 1 == sub {
                end
            } else {
                maturity - (maturity - end) * (k + 1) as f64 / sub as f64
            };
            steps.push(TimeStep {
                t_lo: lo,
                t_hi: hi,
                theta: 1.0,
            });
        }
    }
    for i in replaced..n {
        steps.push(TimeStep {
            t_lo: level(i + 1),
            t_hi: level(i),
            theta: spec.scheme_theta,
        });
    }
    steps
}
