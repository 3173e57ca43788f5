//! Deterministic short-rate term structures.
//!
//! Every rate in the engine (risk-free, repo, synthetic and cash funding
//! curves, collateral and treasury spreads) is a [`RateCurve`]: a
//! piecewise-constant, continuously-compounded short rate on left-closed
//! intervals `[t_i, t_{i+1})`, with the last rate extending to infinity.
//! Integrals of such curves are exact, so discount factors carry no
//! interpolation error.

use crate::error::{Error, Result};

/// How a curve is specified in [`make_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Flat,
    Piecewise,
}

/// Piecewise-constant short-rate curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    times: Vec<f64>,
    rates: Vec<f64>,
}

/// Builds a curve from `(time, rate)` nodes.
///
/// `Flat` takes exactly one node at time zero. `Piecewise` requires strictly
/// increasing times starting at zero.
pub fn make_curve(kind: CurveKind, nodes: &[(f64, f64)]) -> Result<RateCurve> {
    match kind {
        CurveKind::Flat => {
            if nodes.len() != 1 {
                return Err(Error::InvalidCurve(format!(
                    "flat curve takes a single node, got {}",
                    nodes.len()
                )));
            }
            let (t, r) = nodes[0];
            if t != 0.0 {
                return Err(Error::InvalidCurve(format!("first node time must be 0, got {t}")));
            }
            RateCurve::piecewise(&[(0.0, r)])
        }
        CurveKind::Piecewise => RateCurve::piecewise(nodes),
    }
}

impl RateCurve {
    /// Constant short rate.
    pub fn flat(rate: f64) -> Self {
        Self {
            times: vec![0.0],
            rates: vec![rate],
        }
    }

    /// The identically zero curve.
    pub fn zero() -> Self {
        Self::flat(0.0)
    }

    pub fn piecewise(nodes: &[(f64, f64)]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidCurve("no nodes".into()));
        }
        if nodes[0].0 != 0.0 {
            return Err(Error::InvalidCurve(format!(
                "first node time must be 0, got {}",
                nodes[0].0
            )));
        }
        for (i, &(t, r)) in nodes.iter().enumerate() {
            if !t.is_finite() || !r.is_finite() {
                return Err(Error::InvalidCurve(format!("non-finite node at index {i}")));
            }
            if i > 0 && t <= nodes[i - 1].0 {
                return Err(Error::InvalidCurve(format!(
                    "node times must be strictly increasing: {} then {}",
                    nodes[i - 1].0,
                    t
                )));
            }
        }
        Ok(Self {
            times: nodes.iter().map(|n| n.0).collect(),
            rates: nodes.iter().map(|n| n.1).collect(),
        })
    }

    pub fn node_times(&self) -> &[f64] {
        &self.times
    }

    pub fn node_rates(&self) -> &[f64] {
        &self.rates
    }

    /// Times strictly after zero where the short rate jumps.
    pub fn breakpoints(&self) -> &[f64] {
        &self.times[1..]
    }

    fn segment(&self, t: f64) -> usize {
        // last i with times[i] <= t
        self.times.partition_point(|&x| x <= t).saturating_sub(1)
    }

    /// Short rate in force at `t` (left-closed intervals).
    pub fn short_rate(&self, t: f64) -> f64 {
        self.rates[self.segment(t)]
    }

    /// Exact integral of the short rate over `[t0, t1]`.
    pub fn integrated_rate(&self, t0: f64, t1: f64) -> Result<f64> {
        check_interval(t0, t1)?;
        Ok(self.integral_unchecked(t0, t1))
    }

    pub(crate) fn integral_unchecked(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let mut i = self.segment(t0);
        let mut lo = t0;
        let mut acc = 0.0;
        loop {
            let hi = self.times.get(i + 1).copied().unwrap_or(f64::INFINITY);
            if t1 <= hi {
                acc += self.rates[i] * (t1 - lo);
                return acc;
            }
            acc += self.rates[i] * (hi - lo);
            lo = hi;
            i += 1;
        }
    }

    /// `exp(-∫ r)` over `[t0, t1]`.
    pub fn discount_factor(&self, t0: f64, t1: f64) -> Result<f64> {
        Ok((-self.integrated_rate(t0, t1)?).exp())
    }

    /// Mean short rate over `[t0, t1]`; the short rate at `t0` for an empty interval.
    pub fn average_rate(&self, t0: f64, t1: f64) -> Result<f64> {
        check_interval(t0, t1)?;
        Ok(self.average_unchecked(t0, t1))
    }

    pub(crate) fn average_unchecked(&self, t0: f64, t1: f64) -> f64 {
        if t1 > t0 {
            self.integral_unchecked(t0, t1) / (t1 - t0)
        } else {
            self.short_rate(t0)
        }
    }

    /// Pointwise combination `a·self + b·other` on the merged node set.
    pub fn combine(&self, a: f64, other: &RateCurve, b: f64) -> RateCurve {
        let mut times: Vec<f64> = self.times.iter().chain(other.times.iter()).copied().collect();
        times.sort_by(|x, y| x.total_cmp(y));
        times.dedup();
        let rates = times
            .iter()
            .map(|&t| a * self.short_rate(t) + b * other.short_rate(t))
            .collect();
        RateCurve { times, rates }
    }

    pub fn plus(&self, other: &RateCurve) -> RateCurve {
        self.combine(1.0, other, 1.0)
    }

    pub fn minus(&self, other: &RateCurve) -> RateCurve {
        self.combine(1.0, other, -1.0)
    }

    pub fn scaled(&self, factor: f64) -> RateCurve {
        RateCurve {
            times: self.times.clone(),
            rates: self.rates.iter().map(|r| r * factor).collect(),
        }
    }

    pub fn shifted(&self, shift: f64) -> RateCurve {
        RateCurve {
            times: self.times.clone(),
            rates: self.rates.iter().map(|r| r + shift).collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.rates.iter().all(|&r| r >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.rates.iter().all(|&r| r == 0.0)
    }
}

fn check_interval(t0: f64, t1: f64) -> Result<()> {
    if !(t0 >= 0.0 && t1 >= t0) || !t1.is_finite() {
        return Err(Error::InvalidInterval { t0, t1 });
    }
    Ok(())
}

/// One party's credit and funding inputs.
///
/// `synthetic_spread` is the CDS-implied spread over the risk-free curve,
/// i.e. `λ(1 − R)` (just `λ` under zero recovery). `funding_basis` is the
/// cash-bond spread over the synthetic curve. `recovery` only enters the
/// closed-form comparison formulas and the hazard-rate conversion
/// `λ = spread / (1 − R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyCredit {
    synthetic_spread: RateCurve,
    funding_basis: RateCurve,
    recovery: f64,
}

impl PartyCredit {
    pub fn new(synthetic_spread: RateCurve, funding_basis: RateCurve, recovery: f64) -> Result<Self> {
        if !synthetic_spread.is_nonnegative() {
            return Err(Error::InvalidParty("synthetic spread must be non-negative".into()));
        }
        if !funding_basis.is_nonnegative() {
            return Err(Error::InvalidParty("funding basis must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&recovery) {
            return Err(Error::InvalidParty(format!("recovery {recovery} outside [0, 1]")));
        }
        Ok(Self {
            synthetic_spread,
            funding_basis,
            recovery,
        })
    }

    /// Flat spread and basis, zero recovery.
    pub fn flat(spread: f64, basis: f64) -> Result<Self> {
        Self::new(RateCurve::flat(spread), RateCurve::flat(basis), 0.0)
    }

    /// A default-free party funding at the risk-free rate.
    pub fn risk_free() -> Self {
        Self {
            synthetic_spread: RateCurve::zero(),
            funding_basis: RateCurve::zero(),
            recovery: 0.0,
        }
    }

    pub fn synthetic_spread(&self) -> &RateCurve {
        &self.synthetic_spread
    }

    pub fn funding_basis(&self) -> &RateCurve {
        &self.funding_basis
    }

    pub fn recovery(&self) -> f64 {
        self.recovery
    }

    /// Total cash spread over the risk-free curve (spread + basis).
    pub fn cash_spread(&self) -> RateCurve {
        self.synthetic_spread.plus(&self.funding_basis)
    }

    /// Default intensity implied by the synthetic spread: `spread / (1 − R)`.
    pub fn hazard_rate(&self) -> Result<RateCurve> {
        if self.recovery >= 1.0 {
            return Err(Error::InvalidParty("hazard rate undefined for full recovery".into()));
        }
        Ok(self.synthetic_spread.scaled(1.0 / (1.0 - self.recovery)))
    }

    /// Same spread, basis dropped: the party funding on its synthetic curve.
    pub fn synthetic_only(&self) -> Self {
        Self {
            synthetic_spread: self.synthetic_spread.clone(),
            funding_basis: RateCurve::zero(),
            recovery: self.recovery,
        }
    }
}

/// A party's synthetic and cash funding curves.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyCurves {
    pub synthetic: RateCurve,
    pub cash: RateCurve,
}

/// Synthetic curve `r + spread` and cash curve `r + spread + basis`.
pub fn party_curves(base: &RateCurve, party: &PartyCredit) -> PartyCurves {
    let synthetic = base.plus(&party.synthetic_spread);
    let cash = synthetic.plus(&party.funding_basis);
    PartyCurves { synthetic, cash }
}
