use std::sync::Arc;

use super::coefficients::{PdeCoefficients, PdeMode, PostedAmount};
use super::grid::{space_nodes, time_steps, GridSpec, TimeStep};
use super::surface::{SolveStats, ValueSurface};
use super::tridiag::solve_tridiagonal;
use crate::error::{Error, Result};
use crate::instruments::Instrument;

/// Backward Crank–Nicolson sweep with per-step regime iteration.
///
/// At every step the receivable/payable regime of each node is frozen, the
/// linear system is solved, and the regimes are recomputed from the new
/// values. The loop ends when the regime pattern repeats (the solution is
/// then exactly consistent) or the max-norm change drops below
/// `picard_tol`.
pub fn solve_pde(coeffs: &PdeCoefficients, inst: &Instrument, grid: &GridSpec) -> Result<ValueSurface> {
    grid.validate()?;
    coeffs.validate()?;
    let maturity = inst.maturity();
    let mut pins = inst.strikes();
    pins.push(coeffs.spot);
    let spots = space_nodes(grid, coeffs.spot, coeffs.diffusion_vol, maturity, &pins);
    let steps = time_steps(grid, maturity);
    let mut times: Vec<f64> = steps.iter().map(|s| s.t_lo).collect();
    times.reverse();
    times.push(maturity);

    let vstar = if coeffs.needs_riskfree_surface() {
        let surface = match &coeffs.riskfree_value_surface {
            Some(s) => {
                if s.spots() != spots.as_slice() || s.times() != times.as_slice() {
                    return Err(Error::InvalidCoefficients(
                        "supplied risk-free surface does not match the solve grid".into(),
                    ));
                }
                Arc::clone(s)
            }
            None => Arc::new(solve_pde(&coeffs.risk_free(), inst, grid)?),
        };
        Some(surface)
    } else {
        None
    };

    let engine = Engine::new(coeffs, grid, &spots, vstar.as_deref());
    let (values, stats) = engine.run(inst, &steps)?;
    Ok(ValueSurface::new(coeffs.spot, times, spots, values, stats))
}

#[derive(Debug, Clone, Copy)]
struct StepRates {
    drift: f64,
    base: f64,
    payable: f64,
    receivable: f64,
    collateral: f64,
    intensity: f64,
    h: f64,
    theta: f64,
}

/// Exponential fitting of the reaction term: returns `(k̃, s̃)` such that
/// the θ-scheme integrates `V' = kV − s` exactly for constant `k`, `s`.
/// Both are scaled by the same factor, which is `1 + O(h²)`.
fn fitted(k: f64, s: f64, h: f64, theta: f64) -> (f64, f64) {
    let x = k * h;
    if x == 0.0 {
        return (k, s);
    }
    let one_minus_e = -(-x).exp_m1();
    let factor = one_minus_e / (x * (theta * (1.0 - one_minus_e) + 1.0 - theta));
    (k * factor, s * factor)
}

/// Geometric parts of the non-uniform three-point stencils at interior node `j`.
#[derive(Debug, Clone, Copy, Default)]
struct NodeGeometry {
    s: f64,
    d2: [f64; 3],
    d1: [f64; 3],
}

struct Engine<'a> {
    c: &'a PdeCoefficients,
    grid: &'a GridSpec,
    x: &'a [f64],
    geometry: Vec<NodeGeometry>,
    /// Linear-extrapolation weight at the upper boundary.
    w_top: f64,
    vstar: Option<&'a ValueSurface>,
    closeout: bool,
}

/// Per-step work buffers.
#[derive(Default)]
struct Buffers {
    lo: Vec<f64>,
    di: Vec<f64>,
    up: Vec<f64>,
    explicit: Vec<f64>,
    k: Vec<f64>,
    src: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(c: &'a PdeCoefficients, grid: &'a GridSpec, x: &'a [f64], vstar: Option<&'a ValueSurface>) -> Self {
        let n = x.len() - 1;
        let mut geometry = vec![NodeGeometry::default(); n + 1];
        for j in 1..n {
            let hm = x[j] - x[j - 1];
            let hp = x[j + 1] - x[j];
            geometry[j] = NodeGeometry {
                s: x[j],
                d2: [2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))],
                d1: [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))],
            };
        }
        let w_top = (x[n] - x[n - 1]) / (x[n - 1] - x[n - 2]);
        Self {
            c,
            grid,
            x,
            geometry,
            w_top,
            vstar,
            closeout: c.mode == PdeMode::RiskfreeCloseout,
        }
    }

    fn rates(&self, step: &TimeStep) -> StepRates {
        let (a, b) = (step.t_lo, step.t_hi);
        StepRates {
            drift: self.c.drift_rate.average_unchecked(a, b),
            base: self.c.base_discount.average_unchecked(a, b),
            payable: self.c.payable_rate_or_spread.average_unchecked(a, b),
            receivable: self.c.receivable_rate_or_spread.average_unchecked(a, b),
            collateral: self.c.collateral.collateral_spread.average_unchecked(a, b),
            intensity: self.c.closeout_intensity_sum.average_unchecked(a, b),
            h: b - a,
            theta: step.theta,
        }
    }

    /// Collateral level at every node of a time level, given that level's V* row.
    fn collateral_row(&self, vstar: Option<&[f64]>, out: &mut Vec<f64>) {
        let n = self.x.len();
        out.clear();
        match self.c.collateral.posted {
            PostedAmount::Constant(level) => out.resize(n, level),
            PostedAmount::FractionOfRiskFree(kappa) => {
                let row = vstar.expect("V* row required for fractional collateral");
                out.extend(row.iter().map(|v| kappa * v));
            }
            PostedAmount::None | PostedAmount::FractionOfValue(_) => out.resize(n, 0.0),
        }
    }

    /// Regime flag: true selects the receivable rate. Ties go to payable.
    fn receivable(v: f64, l: f64) -> bool {
        v - l > 0.0
    }

    /// Fitted discount rate and source at one node.
    fn terms(&self, r: &StepRates, receivable: bool, l: f64, vstar: f64) -> (f64, f64) {
        let (k, s) = self.raw_terms(r, receivable, l, vstar);
        fitted(k, s, r.h, r.theta)
    }

    fn raw_terms(&self, r: &StepRates, receivable: bool, l: f64, vstar: f64) -> (f64, f64) {
        if self.closeout {
            let x = vstar - l;
            let f = if x > 0.0 { r.receivable } else { r.payable };
            return (r.base + r.intensity, f * x + r.collateral * l);
        }
        let f = if receivable { r.receivable } else { r.payable };
        match self.c.collateral.posted {
            PostedAmount::None => (r.base + f, 0.0),
            PostedAmount::Constant(_) | PostedAmount::FractionOfRiskFree(_) => (r.base + f, (f - r.collateral) * l),
            PostedAmount::FractionOfValue(kappa) => (r.base + (1.0 - kappa) * f + kappa * r.collateral, 0.0),
        }
    }

    fn run(&self, inst: &Instrument, steps: &[TimeStep]) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.x.len() - 1;
        let levels = steps.len() + 1;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(levels);
        let terminal: Vec<f64> = if self.closeout {
            vec![0.0; n + 1]
        } else {
            self.x.iter().map(|&s| inst.payoff_unchecked(s)).collect()
        };
        rows.push(terminal);

        let vstar_row = |m: usize| self.vstar.map(|s| s.row(levels - 1 - m));
        let mut stats = SolveStats {
            steps: steps.len(),
            ..SolveStats::default()
        };
        let mut buf = Buffers::default();
        let mut l_old = Vec::new();
        let mut l_new = Vec::new();
        for (m, step) in steps.iter().enumerate() {
            self.collateral_row(vstar_row(m), &mut l_old);
            self.collateral_row(vstar_row(m + 1), &mut l_new);
            let (next, iterations, mismatches) = self.step(
                m,
                step,
                rows.last().expect("terminal row"),
                &l_old,
                &l_new,
                vstar_row(m),
                vstar_row(m + 1),
                &mut buf,
            )?;
            stats.total_picard_iterations += iterations;
            stats.max_picard_iterations = stats.max_picard_iterations.max(iterations);
            stats.regime_mismatches += mismatches;
            rows.push(next);
        }
        rows.reverse();
        if self.closeout {
            let vstar = self.vstar.expect("V* surface required for close-out mode");
            for (i, row) in rows.iter_mut().enumerate() {
                for (u, v) in row.iter_mut().zip(vstar.row(i)) {
                    *u = v - *u;
                }
            }
        }
        Ok((rows.concat(), stats))
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        index: usize,
        step: &TimeStep,
        old: &[f64],
        l_old: &[f64],
        l_new: &[f64],
        vs_old: Option<&[f64]>,
        vs_new: Option<&[f64]>,
        buf: &mut Buffers,
    ) -> Result<(Vec<f64>, usize, usize)> {
        let n = self.x.len() - 1;
        let h = step.t_hi - step.t_lo;
        let theta = step.theta;
        let rates = self.rates(step);
        let sigma2 = self.c.diffusion_vol * self.c.diffusion_vol;
        let vs = |row: Option<&[f64]>, j: usize| row.map_or(0.0, |r| r[j]);

        buf.lo.clear();
        buf.di.clear();
        buf.up.clear();
        buf.lo.resize(n, 0.0);
        buf.di.resize(n, 0.0);
        buf.up.resize(n, 0.0);
        for j in 1..n {
            let g = &self.geometry[j];
            let a = 0.5 * sigma2 * g.s * g.s;
            let b = rates.drift * g.s;
            buf.lo[j] = a * g.d2[0] + b * g.d1[0];
            buf.di[j] = a * g.d2[1] + b * g.d1[1];
            buf.up[j] = a * g.d2[2] + b * g.d1[2];
        }
        // V_N = (1 + w) V_{N-1} − w V_{N-2}, folded into the last interior row.
        let w = self.w_top;
        let up_last = buf.up[n - 1];
        buf.lo[n - 1] -= w * up_last;
        buf.di[n - 1] += (1.0 + w) * up_last;
        buf.up[n - 1] = 0.0;

        let regime_old: Vec<bool> = (0..=n).map(|j| Self::receivable(old[j], l_old[j])).collect();
        let (_, s0_old) = self.raw_terms(&rates, regime_old[0], l_old[0], vs(vs_old, 0));
        buf.explicit.clear();
        buf.explicit.resize(n, 0.0);
        for j in 1..n {
            let (k, s) = self.terms(&rates, regime_old[j], l_old[j], vs(vs_old, j));
            let up_term = if j + 1 < n { buf.up[j] * old[j + 1] } else { 0.0 };
            let a_v = buf.lo[j] * old[j - 1] + buf.di[j] * old[j] + up_term;
            buf.explicit[j] = old[j] + (1.0 - theta) * h * (a_v - k * old[j] + s);
        }

        let mut regime = regime_old;
        let mut prev: Option<Vec<f64>> = None;
        let mut last_change = f64::INFINITY;
        for iteration in 1..=self.grid.picard_max_iters {
            buf.k.clear();
            buf.src.clear();
            for j in 0..n {
                let (k, s) = self.terms(&rates, regime[j], l_new[j], vs(vs_new, j));
                buf.k.push(k);
                buf.src.push(s);
            }

            // S = 0: the equation reduces to V_t = k V − s, integrated exactly.
            let (k0, s0_new) = self.raw_terms(&rates, regime[0], l_new[0], vs(vs_new, 0));
            let s0 = theta * s0_new + (1.0 - theta) * s0_old;
            let decay = (-k0 * h).exp();
            let growth = if k0.abs() > 1e-14 { (1.0 - decay) / k0 } else { h };
            let v0 = old[0] * decay + s0 * growth;

            let m = n - 1;
            buf.sub.clear();
            buf.diag.clear();
            buf.sup.clear();
            buf.rhs.clear();
            for j in 1..n {
                buf.sub.push(-theta * h * buf.lo[j]);
                buf.diag.push(1.0 - theta * h * (buf.di[j] - buf.k[j]));
                buf.sup.push(-theta * h * buf.up[j]);
                buf.rhs.push(buf.explicit[j] + theta * h * buf.src[j]);
            }
            buf.rhs[0] += theta * h * buf.lo[1] * v0;
            if !solve_tridiagonal(&buf.sub, &buf.diag, &buf.sup, &mut buf.rhs, &mut buf.scratch) {
                return Err(Error::NonFinite {
                    step: index,
                    time: step.t_lo,
                });
            }
            let mut next = Vec::with_capacity(n + 1);
            next.push(v0);
            next.extend_from_slice(&buf.rhs[..m]);
            next.push((1.0 + w) * next[n - 1] - w * next[n - 2]);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    step: index,
                    time: step.t_lo,
                });
            }

            let new_regime: Vec<bool> = (0..=n).map(|j| Self::receivable(next[j], l_new[j])).collect();
            let stable = new_regime[..n] == regime[..n];
            if let Some(p) = &prev {
                last_change = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            }
            if self.closeout {
                return Ok((next, iteration, 0));
            }
            if stable || last_change < self.grid.picard_tol {
                let mismatches = (0..n).filter(|&j| new_regime[j] != regime[j]).count();
                return Ok((next, iteration, mismatches));
            }
            regime = new_regime;
            prev = Some(next);
        }
        Err(Error::PicardNonConvergence {
            step: index,
            time: step.t_lo,
            residual: last_change,
            iterations: self.grid.picard_max_iters,
        })
    }
}
