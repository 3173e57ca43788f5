//! European single-stock payoffs and the analytic Black–Scholes reference.
//!
//! An [`Instrument`] is a sum of signed legs (calls, puts, forwards and
//! cash), so its terminal payoff is continuous and piecewise linear in the
//! stock price. That is enough to express options, shifted forwards and
//! zero-coupon notes, and keeps both the finite-difference terminal
//! condition and the lattice oracle exact.

use crate::curves::RateCurve;
use crate::error::{Error, Result};
use libm::erfc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegKind {
    Call,
    Put,
    Forward,
    /// Pays one unit of currency; the strike is ignored.
    Cash,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub kind: LegKind,
    pub strike: f64,
    pub quantity: f64,
}

impl Leg {
    pub fn call(strike: f64, quantity: f64) -> Self {
        Self {
            kind: LegKind::Call,
            strike,
            quantity,
        }
    }

    pub fn put(strike: f64, quantity: f64) -> Self {
        Self {
            kind: LegKind::Put,
            strike,
            quantity,
        }
    }

    pub fn forward(strike: f64, quantity: f64) -> Self {
        Self {
            kind: LegKind::Forward,
            strike,
            quantity,
        }
    }

    pub fn cash(quantity: f64) -> Self {
        Self {
            kind: LegKind::Cash,
            strike: 0.0,
            quantity,
        }
    }

    fn payoff(&self, s: f64) -> f64 {
        let unit = match self.kind {
            LegKind::Call => (s - self.strike).max(0.0),
            LegKind::Put => (self.strike - s).max(0.0),
            LegKind::Forward => s - self.strike,
            LegKind::Cash => 1.0,
        };
        self.quantity * unit
    }

    /// Right derivative of the payoff in S.
    fn slope(&self, s: f64) -> f64 {
        let unit = match self.kind {
            LegKind::Call => {
                if s >= self.strike {
                    1.0
                } else {
                    0.0
                }
            }
            LegKind::Put => {
                if s < self.strike {
                    -1.0
                } else {
                    0.0
                }
            }
            LegKind::Forward => 1.0,
            LegKind::Cash => 0.0,
        };
        self.quantity * unit
    }
}

/// Sign of a payoff over `S ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffSign {
    /// `payoff(S) ≥ 0` everywhere: a pure receivable to the pricing party.
    NonNegative,
    /// `payoff(S) ≤ 0` everywhere: a pure payable.
    NonPositive,
    Mixed,
}

/// A European claim on a single stock.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    maturity: f64,
    legs: Vec<Leg>,
}

impl Instrument {
    pub fn new(maturity: f64, legs: Vec<Leg>) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::InvalidInstrument(format!(
                "maturity must be positive, got {maturity}"
            )));
        }
        if legs.is_empty() {
            return Err(Error::InvalidInstrument("at least one leg required".into()));
        }
        for leg in &legs {
            if !leg.quantity.is_finite() {
                return Err(Error::InvalidInstrument("non-finite leg quantity".into()));
            }
            if leg.kind != LegKind::Cash && !(leg.strike.is_finite() && leg.strike >= 0.0) {
                return Err(Error::InvalidInstrument(format!("invalid strike {}", leg.strike)));
            }
        }
        Ok(Self { maturity, legs })
    }

    /// Long call at `call_strike`, short put at `put_strike`.
    pub fn shifted_forward(maturity: f64, call_strike: f64, put_strike: f64) -> Result<Self> {
        Self::new(maturity, vec![Leg::call(call_strike, 1.0), Leg::put(put_strike, -1.0)])
    }

    /// Zero-coupon note paying `notional` at maturity (negative for a payable).
    pub fn cash_note(maturity: f64, notional: f64) -> Result<Self> {
        Self::new(maturity, vec![Leg::cash(notional)])
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn payoff(&self, terminal_spot: f64) -> Result<f64> {
        if terminal_spot.is_nan() || terminal_spot < 0.0 {
            return Err(Error::InvalidInstrument(format!(
                "terminal spot must be non-negative, got {terminal_spot}"
            )));
        }
        Ok(self.payoff_unchecked(terminal_spot))
    }

    pub(crate) fn payoff_unchecked(&self, s: f64) -> f64 {
        self.legs.iter().map(|l| l.payoff(s)).sum()
    }

    /// Right derivative of the payoff.
    pub(crate) fn payoff_slope(&self, s: f64) -> f64 {
        self.legs.iter().map(|l| l.slope(s)).sum()
    }

    /// Sorted, de-duplicated strikes of the option and forward legs.
    pub fn strikes(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .legs
            .iter()
            .filter(|l| l.kind != LegKind::Cash)
            .map(|l| l.strike)
            .collect();
        k.sort_by(|a, b| a.total_cmp(b));
        k.dedup();
        k
    }

    /// Same legs with quantities negated.
    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            maturity: self.maturity,
            legs: self
                .legs
                .iter()
                .map(|l| Leg {
                    quantity: l.quantity * factor,
                    ..*l
                })
                .collect(),
        }
    }

    /// Exact sign classification: the payoff is linear between strikes, so
    /// it is enough to look at `S = 0`, every strike and the slope at infinity.
    pub fn payoff_sign(&self) -> PayoffSign {
        let strikes = self.strikes();
        let mut probe = vec![0.0];
        probe.extend(strikes.iter().copied());
        let values: Vec<f64> = probe.iter().map(|&s| self.payoff_unchecked(s)).collect();
        let last = *probe.last().unwrap_or(&0.0);
        let tail_slope = self.payoff_slope(last.max(0.0) + 1.0);
        let any_pos = values.iter().any(|&v| v > 0.0) || tail_slope > 0.0;
        let any_neg = values.iter().any(|&v| v < 0.0) || tail_slope < 0.0;
        match (any_pos, any_neg) {
            (true, true) => PayoffSign::Mixed,
            (false, true) => PayoffSign::NonPositive,
            _ => PayoffSign::NonNegative,
        }
    }
}

/// Spot, volatility and the curves that drive the stock.
///
/// `risk_free` is `r`, `repo` is the stock financing rate `r_s` (so
/// `r − r_s` is the borrowing cost) and `dividend_yield` is `q`. The stock
/// drifts at `r_s − q` under the pricing measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketEnv {
    spot: f64,
    vol: f64,
    risk_free: RateCurve,
    repo: RateCurve,
    dividend_yield: f64,
}

impl MarketEnv {
    pub fn new(spot: f64, vol: f64, risk_free: RateCurve, repo: RateCurve, dividend_yield: f64) -> Result<Self> {
        if !(spot > 0.0 && spot.is_finite()) {
            return Err(Error::InvalidMarket(format!("spot must be positive, got {spot}")));
        }
        if !(vol > 0.0 && vol.is_finite()) {
            return Err(Error::InvalidMarket(format!("vol must be positive, got {vol}")));
        }
        if !(dividend_yield >= 0.0 && dividend_yield.is_finite()) {
            return Err(Error::InvalidMarket(format!(
                "dividend yield must be non-negative, got {dividend_yield}"
            )));
        }
        Ok(Self {
            spot,
            vol,
            risk_free,
            repo,
            dividend_yield,
        })
    }

    /// Flat curves with repo `r − borrow_spread`.
    pub fn flat(spot: f64, vol: f64, rate: f64, borrow_spread: f64, dividend_yield: f64) -> Result<Self> {
        Self::new(
            spot,
            vol,
            RateCurve::flat(rate),
            RateCurve::flat(rate - borrow_spread),
            dividend_yield,
        )
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    pub fn vol(&self) -> f64 {
        self.vol
    }

    pub fn risk_free(&self) -> &RateCurve {
        &self.risk_free
    }

    pub fn repo(&self) -> &RateCurve {
        &self.repo
    }

    pub fn dividend_yield(&self) -> f64 {
        self.dividend_yield
    }

    /// Stock drift under the pricing measure, `r_s − q`.
    pub fn carry(&self) -> RateCurve {
        self.repo.shifted(-self.dividend_yield)
    }

    pub fn with_spot(&self, spot: f64) -> Result<Self> {
        Self::new(
            spot,
            self.vol,
            self.risk_free.clone(),
            self.repo.clone(),
            self.dividend_yield,
        )
    }

    pub fn with_vol(&self, vol: f64) -> Result<Self> {
        Self::new(
            self.spot,
            vol,
            self.risk_free.clone(),
            self.repo.clone(),
            self.dividend_yield,
        )
    }
}

/// Standard normal CDF, accurate to double precision.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Analytic price at `(t, market.spot)` with separate discount and carry curves.
pub fn bs_price(inst: &Instrument, market: &MarketEnv, discount: &RateCurve, carry: &RateCurve, t: f64) -> Result<f64> {
    bs_price_at(inst, market.vol(), market.spot(), discount, carry, t)
}

/// Analytic price at an arbitrary `(t, spot)`.
///
/// Each leg is priced in closed form using the exact integrals of `discount`
/// and `carry` over `[t, T]`.
pub fn bs_price_at(
    inst: &Instrument,
    vol: f64,
    spot: f64,
    discount: &RateCurve,
    carry: &RateCurve,
    t: f64,
) -> Result<f64> {
    let legs = LegPricer::new(inst, vol, spot, discount, carry, t)?;
    Ok(inst.legs.iter().map(|l| legs.price(l)).sum())
}

/// Analytic `∂V/∂S` at `(t, spot)`. At maturity this is the payoff's right derivative.
pub fn bs_delta_at(
    inst: &Instrument,
    vol: f64,
    spot: f64,
    discount: &RateCurve,
    carry: &RateCurve,
    t: f64,
) -> Result<f64> {
    let legs = LegPricer::new(inst, vol, spot, discount, carry, t)?;
    if legs.tau == 0.0 {
        return Ok(inst.payoff_slope(spot));
    }
    Ok(inst.legs.iter().map(|l| legs.delta(l)).sum())
}

struct LegPricer {
    forward: f64,
    growth: f64,
    df: f64,
    std_dev: f64,
    tau: f64,
}

impl LegPricer {
    fn new(inst: &Instrument, vol: f64, spot: f64, discount: &RateCurve, carry: &RateCurve, t: f64) -> Result<Self> {
        if spot.is_nan() || spot < 0.0 {
            return Err(Error::InvalidMarket(format!("spot must be non-negative, got {spot}")));
        }
        let maturity = inst.maturity();
        if !(t >= 0.0 && t <= maturity) {
            return Err(Error::InvalidInterval { t0: t, t1: maturity });
        }
        let tau = maturity - t;
        let growth = carry.integrated_rate(t, maturity)?.exp();
        Ok(Self {
            forward: spot * growth,
            growth,
            df: discount.discount_factor(t, maturity)?,
            std_dev: vol * tau.sqrt(),
            tau,
        })
    }

    fn price(&self, leg: &Leg) -> f64 {
        let (f, k, d) = (self.forward, leg.strike, self.df);
        let unit = match leg.kind {
            LegKind::Cash => d,
            LegKind::Forward => d * (f - k),
            LegKind::Call | LegKind::Put if self.tau == 0.0 || k <= 0.0 => d * Leg { quantity: 1.0, ..*leg }.payoff(f),
            LegKind::Call => {
                let (d1, d2) = self.d12(k);
                d * (f * norm_cdf(d1) - k * norm_cdf(d2))
            }
            LegKind::Put => {
                let (d1, d2) = self.d12(k);
                d * (k * norm_cdf(-d2) - f * norm_cdf(-d1))
            }
        };
        leg.quantity * unit
    }

    fn delta(&self, leg: &Leg) -> f64 {
        let dfdx = self.df * self.growth;
        let unit = match leg.kind {
            LegKind::Cash => 0.0,
            LegKind::Forward => dfdx,
            LegKind::Call if leg.strike <= 0.0 => dfdx,
            LegKind::Put if leg.strike <= 0.0 => 0.0,
            LegKind::Call => dfdx * norm_cdf(self.d12(leg.strike).0),
            LegKind::Put => dfdx * (norm_cdf(self.d12(leg.strike).0) - 1.0),
        };
        leg.quantity * unit
    }

    // d1 = -inf when the forward is zero, which gives the correct limits
    fn d12(&self, k: f64) -> (f64, f64) {
        let d1 = ((self.forward / k).ln() + 0.5 * self.std_dev * self.std_dev) / self.std_dev;
        (d1, d1 - self.std_dev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample_market() -> MarketEnv {
        MarketEnv::flat(50.0, 0.5, 0.05, 0.005, 0.0).unwrap()
    }

    #[test]
    fn shifted_forward_payoffs() {
        let sf = Instrument::shifted_forward(1.0, 45.0, 55.0).unwrap();
        assert_eq!(sf.payoff(60.0).unwrap(), 15.0);
        assert_eq!(sf.payoff(50.0).unwrap(), 0.0);
        assert_eq!(sf.payoff(40.0).unwrap(), -15.0);
        assert!(sf.payoff(-1.0).is_err());
    }

    #[test]
    fn instrument_validation() {
        assert!(Instrument::new(0.0, vec![Leg::cash(1.0)]).is_err());
        assert!(Instrument::new(1.0, vec![]).is_err());
        assert!(Instrument::new(1.0, vec![Leg::call(-5.0, 1.0)]).is_err());
    }

    #[test]
    fn sign_classification() {
        assert_eq!(
            Instrument::new(1.0, vec![Leg::call(45.0, 1.0)]).unwrap().payoff_sign(),
            PayoffSign::NonNegative
        );
        assert_eq!(
            Instrument::new(1.0, vec![Leg::put(45.0, -2.0)]).unwrap().payoff_sign(),
            PayoffSign::NonPositive
        );
        assert_eq!(
            Instrument::shifted_forward(1.0, 45.0, 55.0).unwrap().payoff_sign(),
            PayoffSign::Mixed
        );
        assert_eq!(
            Instrument::cash_note(1.0, -1.0).unwrap().payoff_sign(),
            PayoffSign::NonPositive
        );
        // call spread is non-negative even though it has a short leg
        let spread = Instrument::new(1.0, vec![Leg::call(40.0, 1.0), Leg::call(60.0, -1.0)]).unwrap();
        assert_eq!(spread.payoff_sign(), PayoffSign::NonNegative);
        // short forward is mixed
        assert_eq!(
            Instrument::new(1.0, vec![Leg::forward(50.0, -1.0)])
                .unwrap()
                .payoff_sign(),
            PayoffSign::Mixed
        );
    }

    #[test]
    fn normal_cdf_reference_values() {
        // scipy.special.ndtr
        assert_abs_diff_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(norm_cdf(1.0), 0.8413447460685429, epsilon = 1e-15);
        assert_abs_diff_eq!(norm_cdf(-2.5), 0.006209665325776132, epsilon = 1e-16);
        assert_abs_diff_eq!(norm_cdf(-8.0), 6.22096057427178e-16, epsilon = 1e-24);
    }

    #[test]
    fn call_reference_price() {
        let m = sample_market();
        let call = Instrument::new(1.0, vec![Leg::call(45.0, 1.0)]).unwrap();
        let v = bs_price(&call, &m, &RateCurve::flat(0.05), &RateCurve::flat(0.045), 0.0).unwrap();
        // scipy.stats.norm based evaluation
        assert_abs_diff_eq!(v, 13.009100989599165, epsilon = 1e-9);
    }

    #[test]
    fn shifted_forward_risk_free_price() {
        let m = sample_market();
        let sf = Instrument::shifted_forward(1.0, 45.0, 55.0).unwrap();
        let v = bs_price(&sf, &m, m.risk_free(), &m.carry(), 0.0).unwrap();
        assert_abs_diff_eq!(v, 1.6009, epsilon = 5e-5);
        assert_abs_diff_eq!(v, 1.6009307262804935, epsilon = 1e-9);
    }

    #[test]
    fn cash_leg_is_discount_factor() {
        let m = sample_market();
        let note = Instrument::cash_note(1.0, 1.0).unwrap();
        let y = RateCurve::flat(0.085);
        let v = bs_price(&note, &m, &y, &m.carry(), 0.0).unwrap();
        assert_eq!(v, y.discount_factor(0.0, 1.0).unwrap());
        assert_abs_diff_eq!(v, 0.918512284, epsilon = 1e-9);
    }

    #[test]
    fn price_at_maturity_is_payoff() {
        let sf = Instrument::shifted_forward(1.0, 45.0, 55.0).unwrap();
        let r = RateCurve::flat(0.05);
        for s in [0.0, 30.0, 50.0, 70.0] {
            let v = bs_price_at(&sf, 0.5, s, &r, &r, 1.0).unwrap();
            assert_eq!(v, sf.payoff(s).unwrap());
        }
    }

    #[test]
    fn delta_matches_finite_difference() {
        let sf = Instrument::shifted_forward(1.5, 45.0, 55.0).unwrap();
        let d = RateCurve::flat(0.05);
        let c = RateCurve::flat(0.03);
        for s in [20.0, 48.0, 61.0] {
            let h = 1e-4;
            let up = bs_price_at(&sf, 0.4, s + h, &d, &c, 0.2).unwrap();
            let dn = bs_price_at(&sf, 0.4, s - h, &d, &c, 0.2).unwrap();
            let fd = (up - dn) / (2.0 * h);
            assert_abs_diff_eq!(bs_delta_at(&sf, 0.4, s, &d, &c, 0.2).unwrap(), fd, epsilon = 1e-7);
        }
    }

    proptest! {
        #[test]
        fn parity_at_equal_strike(k in 10.0f64..100.0, vol in 0.05f64..0.8, r in -0.01f64..0.1, b in -0.05f64..0.1, t in 0.1f64..5.0) {
            let m = MarketEnv::flat(50.0, vol, r, 0.0, 0.0).unwrap();
            let d = RateCurve::flat(r);
            let c = RateCurve::flat(b);
            let price = |leg| bs_price(&Instrument::new(t, vec![leg]).unwrap(), &m, &d, &c, 0.0).unwrap();
            let lhs = price(Leg::call(k, 1.0)) - price(Leg::put(k, 1.0));
            prop_assert!((lhs - price(Leg::forward(k, 1.0))).abs() < 1e-10);
        }

        #[test]
        fn price_is_homogeneous(scale in -3.0f64..3.0, k1 in 20.0f64..80.0, k2 in 20.0f64..80.0) {
            let m = sample_market();
            let inst = Instrument::shifted_forward(1.0, k1, k2).unwrap();
            let d = m.risk_free().clone();
            let c = m.carry();
            let base = bs_price(&inst, &m, &d, &c, 0.0).unwrap();
            let scaled = bs_price(&inst.scaled(scale), &m, &d, &c, 0.0).unwrap();
            prop_assert!((scaled - scale * base).abs() < 1e-10);
            prop_assert!((inst.scaled(scale).payoff(k1).unwrap() - scale * inst.payoff(k1).unwrap()).abs() < 1e-12);
        }
    }
}
