use crate::curves::{PartyCredit, RateCurve};
use crate::error::{Error, Result};
use crate::instruments::{bs_price, Instrument, MarketEnv, PayoffSign};
use crate::quadrature::{check_times, interval_trapezoid};

/// Settlement amount at default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closeout {
    /// Pre-default fair value.
    LiabilitySide,
    /// Risk-free replacement value.
    RiskFree,
}

/// Closed-form CVA models compared in the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvaModel {
    /// Liability-side pricing: only the counterparty's spread enters.
    Lsp,
    /// Burgard–Kjaer: both parties' spreads enter.
    Bk,
}

/// `CVA / V*` for flat intensities over `horizon`.
pub fn cva_closed_form(
    model: CvaModel,
    lambda_b: f64,
    lambda_c: f64,
    recovery_b: f64,
    recovery_c: f64,
    horizon: f64,
) -> f64 {
    let mut exponent = lambda_c * (1.0 - recovery_c);
    if model == CvaModel::Bk {
        exponent += lambda_b * (1.0 - recovery_b);
    }
    -(-exponent * horizon).exp_m1()
}

fn riskfree_price(market: &MarketEnv, inst: &Instrument) -> Result<f64> {
    bs_price(inst, market, market.risk_free(), &market.carry(), 0.0)
}

/// Total adjustment `V* − V` for a single-signed trade, by quadrature of
/// `(r_e − r)·E[V*(s)]·DF_e(0, s)` with `E[V*(s)] = V*(0) / DF_r(0, s)`.
pub fn cra_integral(
    market: &MarketEnv,
    party_b: &PartyCredit,
    party_c: &PartyCredit,
    inst: &Instrument,
    quad_times: &[f64],
) -> Result<f64> {
    check_times(quad_times, inst.maturity())?;
    let party = match inst.payoff_sign() {
        PayoffSign::NonNegative => party_c,
        PayoffSign::NonPositive => party_b,
        PayoffSign::Mixed => {
            return Err(Error::MixedSign(
                "the discount regime is path-dependent; use the ladder difference instead".into(),
            ))
        }
    };
    let spread = party.cash_spread();
    let v0 = riskfree_price(market, inst)?;
    // E[V*(s)]·DF_e(0, s) = V*(0)·exp(−∫(r_e − r)).
    Ok(interval_trapezoid(quad_times, |t, mid| {
        spread.short_rate(mid) * v0 * (-spread.integral_unchecked(0.0, t)).exp()
    }))
}

/// Zero-recovery CVA and FVA of a pure receivable under either close-out rule.
pub fn zero_recovery_adjustments(
    closeout: Closeout,
    market: &MarketEnv,
    party_b: &PartyCredit,
    party_c: &PartyCredit,
    inst: &Instrument,
    quad_times: &[f64],
) -> Result<(f64, f64)> {
    if party_b.recovery() != 0.0 || party_c.recovery() != 0.0 {
        return Err(Error::Unsupported(
            "zero-recovery formulas require zero recovery for both parties".into(),
        ));
    }
    if inst.payoff_sign() != PayoffSign::NonNegative {
        return Err(Error::MixedSign(
            "zero-recovery formulas require a pure receivable".into(),
        ));
    }
    check_times(quad_times, inst.maturity())?;
    let v0 = riskfree_price(market, inst)?;
    let lambda_c = party_c.synthetic_spread();
    let eta_c = party_c.funding_basis();
    let lambda_b = party_b.synthetic_spread();

    // With EPE(s) = V*(0)/DF_r(0,s), each term is ∫ w(s)·V*(0)·exp(−∫ extra).
    let integral = |weight: &RateCurve, extra: &RateCurve| {
        interval_trapezoid(quad_times, |t, mid| {
            weight.short_rate(mid) * v0 * (-extra.integral_unchecked(0.0, t)).exp()
        })
    };
    match closeout {
        Closeout::LiabilitySide => {
            let cva = integral(lambda_c, lambda_c);
            let cash = lambda_c.plus(eta_c);
            Ok((cva, integral(&cash, &cash) - cva))
        }
        Closeout::RiskFree => {
            let joint = lambda_c.plus(lambda_b);
            Ok((integral(lambda_c, &joint), integral(eta_c, &joint)))
        }
    }
}
