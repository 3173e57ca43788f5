use crate::curves::RateCurve;
use crate::error::{Error, Result};
use crate::instruments::{bs_delta_at, bs_price_at, norm_pdf, Instrument, MarketEnv};
use crate::pde::ValueSurface;
use crate::quadrature::{check_times, composite_gauss, gauss_legendre};

const Z_MAX: f64 = 8.0;
const PANELS: usize = 32;
const RULE_POINTS: usize = 12;
const ROOT_SCAN: usize = 400;

/// Expected exposures of the risk-free value at future dates, seen from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureProfile {
    pub times: Vec<f64>,
    /// `E[(V*(s) − L)⁺]`.
    pub epe: Vec<f64>,
    /// `E[(V*(s) − L)⁻]`, reported as a non-negative number.
    pub ene: Vec<f64>,
    /// `E[S_s·Δ(s, S_s)]`, signed. Multiply by the haircut for the funded notional.
    pub expected_delta_notional: Vec<f64>,
}

/// Where `∂V/∂S` comes from in the delta-notional expectation.
#[derive(Debug, Clone, Copy)]
pub enum DeltaSource<'a> {
    /// Closed-form risk-free delta.
    Analytic,
    /// Differences on a solved surface; spots beyond the grid are clamped to its edge.
    Surface(&'a ValueSurface),
}

/// Lognormal law of `S_s` under the pricing measure.
struct Terminal {
    spot: f64,
    drift: f64,
    std_dev: f64,
}

impl Terminal {
    fn new(market: &MarketEnv, s: f64) -> Self {
        let vol = market.vol();
        Self {
            spot: market.spot(),
            drift: market.carry().integral_unchecked(0.0, s) - 0.5 * vol * vol * s,
            std_dev: vol * s.sqrt(),
        }
    }

    fn spot_at(&self, z: f64) -> f64 {
        self.spot * (self.drift + self.std_dev * z).exp()
    }

    fn z_of(&self, spot: f64) -> f64 {
        ((spot / self.spot).ln() - self.drift) / self.std_dev
    }

    /// `E[f(S_s)]`, with panel edges at the spots in `kinks`.
    fn expect<F: FnMut(f64) -> f64>(&self, mut f: F, kinks: &[f64], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
        let cuts: Vec<f64> = kinks.iter().filter(|&&k| k > 0.0).map(|&k| self.z_of(k)).collect();
        composite_gauss(|z| norm_pdf(z) * f(self.spot_at(z)), -Z_MAX, Z_MAX, &cuts, PANELS, rule)
    }
}

/// Spots in the ±8σ range where `g` changes sign, located by scan and bisection.
fn sign_changes<F: Fn(f64) -> f64>(terminal: &Terminal, g: F) -> Vec<f64> {
    let zs: Vec<f64> = (0..=ROOT_SCAN)
        .map(|i| -Z_MAX + 2.0 * Z_MAX * i as f64 / ROOT_SCAN as f64)
        .collect();
    let vals: Vec<f64> = zs.iter().map(|&z| g(terminal.spot_at(z))).collect();
    let mut roots = Vec::new();
    for i in 0..ROOT_SCAN {
        if (vals[i] > 0.0) == (vals[i + 1] > 0.0) {
            continue;
        }
        let (mut a, mut b) = (zs[i], zs[i + 1]);
        let positive_at_a = vals[i] > 0.0;
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if (g(terminal.spot_at(m)) > 0.0) == positive_at_a {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(terminal.spot_at(0.5 * (a + b)));
    }
    roots
}

/// EPE, ENE and expected delta notional at each of `times` against a constant collateral level.
pub fn exposure_profile(
    market: &MarketEnv,
    inst: &Instrument,
    times: &[f64],
    collateral_level: f64,
) -> Result<ExposureProfile> {
    exposure_with_delta(market, inst, times, collateral_level, DeltaSource::Analytic)
}

fn check_horizon(market: &MarketEnv, inst: &Instrument, times: &[f64]) -> Result<()> {
    match times.iter().find(|&&s| !(0.0..=inst.maturity()).contains(&s)) {
        Some(&t) => Err(Error::OutOfDomain { t, spot: market.spot() }),
        None => Ok(()),
    }
}

fn exposure_with_delta(
    market: &MarketEnv,
    inst: &Instrument,
    times: &[f64],
    collateral_level: f64,
    delta: DeltaSource<'_>,
) -> Result<ExposureProfile> {
    check_horizon(market, inst, times)?;
    let rule = gauss_legendre(RULE_POINTS);
    let r = market.risk_free();
    let carry = market.carry();
    let vol = market.vol();
    let strikes = inst.strikes();
    let mut profile = ExposureProfile {
        times: times.to_vec(),
        epe: Vec::with_capacity(times.len()),
        ene: Vec::with_capacity(times.len()),
        expected_delta_notional: Vec::with_capacity(times.len()),
    };
    for &s in times {
        let value = |spot: f64| bs_price_at(inst, vol, spot, r, &carry, s).unwrap_or(f64::NAN) - collateral_level;
        let delta_at = |spot: f64| delta_value(delta, inst, vol, spot, r, &carry, s);
        if s == 0.0 {
            let x = value(market.spot());
            profile.epe.push(x.max(0.0));
            profile.ene.push((-x).max(0.0));
            profile
                .expected_delta_notional
                .push(market.spot() * delta_at(market.spot()));
            continue;
        }
        let terminal = Terminal::new(market, s);
        let mut kinks = strikes.clone();
        kinks.extend(sign_changes(&terminal, value));
        profile.epe.push(terminal.expect(|x| value(x).max(0.0), &kinks, &rule));
        profile
            .ene
            .push(terminal.expect(|x| (-value(x)).max(0.0), &kinks, &rule));
        profile
            .expected_delta_notional
            .push(terminal.expect(|x| x * delta_at(x), &strikes, &rule));
    }
    Ok(profile)
}

fn delta_value(
    source: DeltaSource<'_>,
    inst: &Instrument,
    vol: f64,
    spot: f64,
    r: &RateCurve,
    carry: &RateCurve,
    s: f64,
) -> f64 {
    match source {
        DeltaSource::Analytic => bs_delta_at(inst, vol, spot, r, carry, s).unwrap_or(f64::NAN),
        DeltaSource::Surface(surface) => {
            let spots = surface.spots();
            let clamped = spot.clamp(spots[0], spots[spots.len() - 1]);
            surface.delta_at(s, clamped).unwrap_or(f64::NAN)
        }
    }
}

/// Treasury funding charge at 0 for the repo haircut on the hedge:
/// `∫ (r_N − r)·h·E[S_u Δ_u]·DF_r(0, u)·Q(0, u) du`, with joint survival
/// `Q = exp(−∫ intensity_sum)`.
pub fn tfc(
    market: &MarketEnv,
    inst: &Instrument,
    haircut: f64,
    treasury_spread: &RateCurve,
    intensity_sum: &RateCurve,
    times: &[f64],
    delta: DeltaSource<'_>,
) -> Result<f64> {
    if !(0.0..1.0).contains(&haircut) {
        return Err(Error::InvalidCollateral(format!("haircut {haircut} outside [0, 1)")));
    }
    check_times(times, inst.maturity())?;
    let notional = exposure_with_delta(market, inst, times, 0.0, delta)?.expected_delta_notional;
    let r = market.risk_free();
    let integrand = |k: usize, mid: f64| {
        let t = times[k];
        let weight = (-(r.integral_unchecked(0.0, t) + intensity_sum.integral_unchecked(0.0, t))).exp();
        treasury_spread.short_rate(mid) * haircut * notional[k] * weight
    };
    Ok((1..times.len())
        .map(|k| {
            let mid = 0.5 * (times[k - 1] + times[k]);
            0.5 * (times[k] - times[k - 1]) * (integrand(k - 1, mid) + integrand(k, mid))
        })
        .sum())
}
