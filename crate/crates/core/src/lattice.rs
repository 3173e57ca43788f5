//! Binomial cross-check for the switching-discount engine.
//!
//! A Cox–Ross–Rubinstein tree with forward-consistent probabilities. Each
//! node's continuation value is discounted over the step at the
//! counterparty's cash rate when it is positive and at the own cash rate
//! otherwise. Shares nothing with the finite-difference code beyond the
//! curve and instrument types.

use crate::curves::{party_curves, PartyCredit, RateCurve};
use crate::error::{Error, Result};
use crate::instruments::{Instrument, MarketEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub steps: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self { steps: 2000 }
    }
}

/// Price with B's and C's cash curves as the payable and receivable rates.
pub fn lattice_price(
    market: &MarketEnv,
    party_b: &PartyCredit,
    party_c: &PartyCredit,
    inst: &Instrument,
    spec: LatticeSpec,
) -> Result<f64> {
    let payable = party_curves(market.risk_free(), party_b).cash;
    let receivable = party_curves(market.risk_free(), party_c).cash;
    lattice_price_with_curves(market, &payable, &receivable, inst, spec)
}

/// Price with explicit payable and receivable discount curves.
pub fn lattice_price_with_curves(
    market: &MarketEnv,
    payable: &RateCurve,
    receivable: &RateCurve,
    inst: &Instrument,
    spec: LatticeSpec,
) -> Result<f64> {
    let n = spec.steps;
    if n == 0 {
        return Err(Error::InvalidGrid("lattice needs at least one step".into()));
    }
    let maturity = inst.maturity();
    let dt = maturity / n as f64;
    let u = (market.vol() * dt.sqrt()).exp();
    let d = 1.0 / u;
    let carry = market.carry();

    let mut values: Vec<f64> = (0..=n)
        .map(|j| inst.payoff_unchecked(market.spot() * u.powi(2 * j as i32 - n as i32)))
        .collect();
    for step in (0..n).rev() {
        let t0 = step as f64 * dt;
        let t1 = if step + 1 == n {
            maturity
        } else {
            (step + 1) as f64 * dt
        };
        let growth = carry.integral_unchecked(t0, t1).exp();
        let p = (growth - d) / (u - d);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { step, probability: p });
        }
        let df_receivable = (-receivable.integral_unchecked(t0, t1)).exp();
        let df_payable = (-payable.integral_unchecked(t0, t1)).exp();
        for j in 0..=step {
            let cont = p * values[j + 1] + (1.0 - p) * values[j];
            values[j] = cont * if cont > 0.0 { df_receivable } else { df_payable };
        }
    }
    Ok(values[0])
}
