use std::sync::Arc;

use super::surface::ValueSurface;
use crate::curves::{PartyCredit, RateCurve};
use crate::error::{Error, Result};
use crate::instruments::MarketEnv;

/// Which extended Black–Scholes equation the coefficients describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeMode {
    /// No base discount; the switching terms carry the full rates `r_b`, `r_c`.
    Basic,
    /// Base discount `r`, switching spreads over `r`, haircut drift `γ`.
    Collateral,
    /// Base discount `r`, switching spreads and a treasury term `f_N·N`.
    Generalized,
    /// Total-adjustment equation for `U = V* − V` under risk-free close-out.
    RiskfreeCloseout,
}

/// Collateral amount `L` held against the trade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostedAmount {
    None,
    Constant(f64),
    /// `L = κ·V*`, using the risk-free surface on the same grid.
    FractionOfRiskFree(f64),
    /// `L = κ·V`, tracking the solution itself.
    FractionOfValue(f64),
}

/// Collateral account and stock-repo haircut.
///
/// Rates are stored as spreads over the risk-free curve: `collateral_spread`
/// is `r_L − r` and `treasury_spread` is `r_N − r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollateralSpec {
    pub posted: PostedAmount,
    pub collateral_spread: RateCurve,
    pub haircut: f64,
    pub treasury_spread: RateCurve,
}

impl Default for CollateralSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl CollateralSpec {
    /// No collateral, no haircut.
    pub fn none() -> Self {
        Self {
            posted: PostedAmount::None,
            collateral_spread: RateCurve::zero(),
            haircut: 0.0,
            treasury_spread: RateCurve::zero(),
        }
    }

    pub fn new(
        posted: PostedAmount,
        collateral_spread: RateCurve,
        haircut: f64,
        treasury_spread: RateCurve,
    ) -> Result<Self> {
        let spec = Self {
            posted,
            collateral_spread,
            haircut,
            treasury_spread,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.haircut) {
            return Err(Error::InvalidCollateral(format!(
                "haircut {} outside [0, 1)",
                self.haircut
            )));
        }
        match self.posted {
            PostedAmount::FractionOfRiskFree(k) | PostedAmount::FractionOfValue(k) if !(0.0..=1.0).contains(&k) => {
                Err(Error::InvalidCollateral(format!("fraction {k} outside [0, 1]")))
            }
            PostedAmount::Constant(c) if !c.is_finite() => {
                Err(Error::InvalidCollateral("non-finite collateral level".into()))
            }
            _ => Ok(()),
        }
    }

    /// True when no collateral is held and there is no haircut.
    pub fn is_trivial(&self) -> bool {
        self.posted_is_zero() && self.haircut == 0.0
    }

    fn posted_is_zero(&self) -> bool {
        match self.posted {
            PostedAmount::None => true,
            PostedAmount::Constant(c) => c == 0.0,
            PostedAmount::FractionOfRiskFree(k) | PostedAmount::FractionOfValue(k) => k == 0.0,
        }
    }

    /// `γ = (r_N − r)·h + (1 + h)(r − r_s)`.
    pub fn gamma(&self, market: &MarketEnv) -> RateCurve {
        let borrow = market.risk_free().minus(market.repo());
        self.treasury_spread.combine(self.haircut, &borrow, 1.0 + self.haircut)
    }
}

/// Drift, diffusion, discount and source terms for one PDE.
///
/// The solver discretizes
/// `V_t + μ S V_S + ½σ²S²V_SS − base·V + f_b (V − L)⁻ − f_c (V − L)⁺ − (r_L − r) L = 0`
/// (the collateral term is absent in `Basic` mode). `RiskfreeCloseout`
/// instead solves for `U` with the V* surface as a source.
#[derive(Debug, Clone)]
pub struct PdeCoefficients {
    pub mode: PdeMode,
    pub spot: f64,
    pub drift_rate: RateCurve,
    pub diffusion_vol: f64,
    pub risk_free: RateCurve,
    pub base_discount: RateCurve,
    pub payable_rate_or_spread: RateCurve,
    pub receivable_rate_or_spread: RateCurve,
    pub collateral: CollateralSpec,
    /// `λ_b + λ_c`; used only in `RiskfreeCloseout` mode.
    pub closeout_intensity_sum: RateCurve,
    /// Optional precomputed V* surface; must share the solve grid.
    pub riskfree_value_surface: Option<Arc<ValueSurface>>,
}

/// Named special cases of the generalized equation.
#[derive(Debug, Clone)]
pub enum GeneralizedPreset {
    /// A single derivative funding spread `r_d − r` on both sides.
    HullWhite { funding_spread: RateCurve },
    /// Collateral remuneration only; no funding spreads.
    Piterbarg { collateral: CollateralSpec },
    /// Both parties discounted at their CDS-implied spreads, no basis.
    BurgardKjaer { party_b: PartyCredit, party_c: PartyCredit },
    /// Liability-side cash curves.
    LiabilitySide { party_b: PartyCredit, party_c: PartyCredit },
}

pub fn build_coefficients(
    mode: PdeMode,
    market: &MarketEnv,
    party_b: &PartyCredit,
    party_c: &PartyCredit,
    collateral: &CollateralSpec,
) -> Result<PdeCoefficients> {
    collateral.validate()?;
    let r = market.risk_free().clone();
    let f_b = party_b.cash_spread();
    let f_c = party_c.cash_spread();
    match mode {
        PdeMode::Basic => {
            if !collateral.is_trivial() {
                return Err(Error::InvalidCoefficients(
                    "basic mode takes no collateral or haircut; use collateral mode".into(),
                ));
            }
            Ok(PdeCoefficients {
                mode,
                spot: market.spot(),
                drift_rate: market.carry(),
                diffusion_vol: market.vol(),
                base_discount: RateCurve::zero(),
                payable_rate_or_spread: r.plus(&f_b),
                receivable_rate_or_spread: r.plus(&f_c),
                risk_free: r,
                collateral: CollateralSpec::none(),
                closeout_intensity_sum: RateCurve::zero(),
                riskfree_value_surface: None,
            })
        }
        PdeMode::Collateral => {
            let drift = r.minus(&collateral.gamma(market)).shifted(-market.dividend_yield());
            Ok(spread_form(mode, market, drift, f_b, f_c, collateral.clone()))
        }
        PdeMode::Generalized => {
            let f_n = r.plus(&collateral.treasury_spread).minus(market.repo());
            PdeCoefficients::generalized(market, f_b, f_c, &f_n, collateral.clone())
        }
        PdeMode::RiskfreeCloseout => {
            if collateral.haircut != 0.0 {
                return Err(Error::Unsupported("risk-free close-out mode takes no haircut".into()));
            }
            if let PostedAmount::FractionOfValue(_) = collateral.posted {
                return Err(Error::Unsupported(
                    "risk-free close-out collateral must be constant or a fraction of V*".into(),
                ));
            }
            let intensity = party_b.hazard_rate()?.plus(&party_c.hazard_rate()?);
            let mut c = spread_form(mode, market, market.carry(), f_b, f_c, collateral.clone());
            c.closeout_intensity_sum = intensity;
            Ok(c)
        }
    }
}

fn spread_form(
    mode: PdeMode,
    market: &MarketEnv,
    drift: RateCurve,
    f_b: RateCurve,
    f_c: RateCurve,
    collateral: CollateralSpec,
) -> PdeCoefficients {
    PdeCoefficients {
        mode,
        spot: market.spot(),
        drift_rate: drift,
        diffusion_vol: market.vol(),
        risk_free: market.risk_free().clone(),
        base_discount: market.risk_free().clone(),
        payable_rate_or_spread: f_b,
        receivable_rate_or_spread: f_c,
        collateral,
        closeout_intensity_sum: RateCurve::zero(),
        riskfree_value_surface: None,
    }
}

impl PdeCoefficients {
    /// Generalized equation with explicit spreads. `f_n` is the treasury
    /// funding spread `r_N − r_s` applied to the repo haircut notional
    /// `N = h·S·V_S`, which folds into the drift.
    pub fn generalized(
        market: &MarketEnv,
        f_b: RateCurve,
        f_c: RateCurve,
        f_n: &RateCurve,
        collateral: CollateralSpec,
    ) -> Result<Self> {
        collateral.validate()?;
        let drift = market.carry().combine(1.0, f_n, -collateral.haircut);
        Ok(spread_form(PdeMode::Generalized, market, drift, f_b, f_c, collateral))
    }

    pub fn from_preset(market: &MarketEnv, preset: &GeneralizedPreset) -> Result<Self> {
        let zero = RateCurve::zero();
        match preset {
            GeneralizedPreset::HullWhite { funding_spread } => Self::generalized(
                market,
                funding_spread.clone(),
                funding_spread.clone(),
                &zero,
                CollateralSpec::none(),
            ),
            GeneralizedPreset::Piterbarg { collateral } => {
                if collateral.haircut != 0.0 {
                    return Err(Error::InvalidCollateral("this preset takes no haircut".into()));
                }
                Self::generalized(market, zero.clone(), zero.clone(), &zero, collateral.clone())
            }
            GeneralizedPreset::BurgardKjaer { party_b, party_c } => Self::generalized(
                market,
                party_b.synthetic_spread().clone(),
                party_c.synthetic_spread().clone(),
                &zero,
                CollateralSpec::none(),
            ),
            GeneralizedPreset::LiabilitySide { party_b, party_c } => Self::generalized(
                market,
                party_b.cash_spread(),
                party_c.cash_spread(),
                &zero,
                CollateralSpec::none(),
            ),
        }
    }

    /// The classical equation with the same drift, discounted at `r`.
    pub fn risk_free(&self) -> Self {
        Self {
            mode: PdeMode::Generalized,
            spot: self.spot,
            drift_rate: self.drift_rate.clone(),
            diffusion_vol: self.diffusion_vol,
            risk_free: self.risk_free.clone(),
            base_discount: self.risk_free.clone(),
            payable_rate_or_spread: RateCurve::zero(),
            receivable_rate_or_spread: RateCurve::zero(),
            collateral: CollateralSpec {
                posted: PostedAmount::None,
                ..self.collateral.clone()
            },
            closeout_intensity_sum: RateCurve::zero(),
            riskfree_value_surface: None,
        }
    }

    /// Whether a V* surface is part of the equation.
    pub fn needs_riskfree_surface(&self) -> bool {
        self.mode == PdeMode::RiskfreeCloseout || matches!(self.collateral.posted, PostedAmount::FractionOfRiskFree(_))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::InvalidCoefficients(format!(
                "spot must be positive, got {}",
                self.spot
            )));
        }
        if !(self.diffusion_vol > 0.0 && self.diffusion_vol.is_finite()) {
            return Err(Error::InvalidCoefficients(format!(
                "diffusion vol must be positive, got {}",
                self.diffusion_vol
            )));
        }
        if self.mode == PdeMode::Basic && !self.base_discount.is_zero() {
            return Err(Error::InvalidCoefficients(
                "basic mode requires a zero base discount".into(),
            ));
        }
        if self.mode == PdeMode::Basic && !self.collateral.is_trivial() {
            return Err(Error::InvalidCoefficients("basic mode takes no collateral".into()));
        }
        if self.mode == PdeMode::RiskfreeCloseout && matches!(self.collateral.posted, PostedAmount::FractionOfValue(_))
        {
            return Err(Error::Unsupported(
                "risk-free close-out collateral must be constant or a fraction of V*".into(),
            ));
        }
        self.collateral.validate()
    }
}
