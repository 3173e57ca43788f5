//! INI-style run configuration.
//!
//! ```text
//! [market]
//! spot = 50
//! vol = 0.5
//! rate = 0.05            # or a piecewise list: 0:0.04, 1:0.05
//! borrow_spread = 0.005
//! dividend = 0
//!
//! [party.B]
//! cds_spread = 0.005
//! basis = 0.002
//! recovery = 0
//!
//! [instrument]
//! maturity = 1
//! leg = call 45 1
//! leg = put 55 -1
//! ```
//!
//! Unknown sections and keys are errors so that typos do not pass silently.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use xva_core::curves::{PartyCredit, RateCurve};
use xva_core::instruments::{Instrument, Leg, MarketEnv};
use xva_core::pde::{CollateralSpec, GridSpec, PostedAmount};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw credit inputs for one party, kept so sweeps can rebuild it.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyInputs {
    pub cds_spread: RateCurve,
    pub basis: RateCurve,
    pub recovery: f64,
}

impl Default for PartyInputs {
    fn default() -> Self {
        Self {
            cds_spread: RateCurve::zero(),
            basis: RateCurve::zero(),
            recovery: 0.0,
        }
    }
}

impl PartyInputs {
    pub fn credit(&self) -> Result<PartyCredit, ConfigError> {
        PartyCredit::new(self.cds_spread.clone(), self.basis.clone(), self.recovery)
            .map_err(|e| ConfigError::general(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub market: MarketEnv,
    pub party_b: PartyInputs,
    pub party_c: PartyInputs,
    pub instrument: Instrument,
    pub grid: GridSpec,
    /// `None` when the file has no `[collateral]` section.
    pub collateral: Option<CollateralSpec>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut market = MarketInputs::default();
        let mut party_b = PartyInputs::default();
        let mut party_c = PartyInputs::default();
        let mut maturity: Option<f64> = None;
        let mut legs = Vec::new();
        let mut grid = GridSpec::default();
        let mut collateral: Option<CollateralInputs> = None;

        let mut section: Option<String> = None;
        let mut seen_sections = HashSet::new();
        let mut seen_keys = HashSet::new();

        for (index, raw) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !matches!(
                    name.as_str(),
                    "market" | "party.B" | "party.C" | "instrument" | "grid" | "collateral"
                ) {
                    return Err(ConfigError::at(line_no, format!("unknown section [{name}]")));
                }
                if !seen_sections.insert(name.clone()) {
                    return Err(ConfigError::at(line_no, format!("duplicate section [{name}]")));
                }
                if name == "collateral" {
                    collateral = Some(CollateralInputs::default());
                }
                section = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::at(line_no, format!("expected `key = value`, got `{line}`")))?;
            let Some(sec) = section.as_deref() else {
                return Err(ConfigError::at(line_no, format!("key `{key}` outside any section")));
            };
            if key != "leg" && !seen_keys.insert((sec.to_string(), key.to_string())) {
                return Err(ConfigError::at(line_no, format!("duplicate key `{key}` in [{sec}]")));
            }
            let unknown = || ConfigError::at(line_no, format!("unknown key `{key}` in [{sec}]"));
            let number = || parse_number(key, value, line_no);
            let curve = || parse_curve(key, value, line_no);
            match sec {
                "market" => match key {
                    "spot" => market.spot = Some(number()?),
                    "vol" => market.vol = Some(number()?),
                    "rate" => market.rate = Some(curve()?),
                    "borrow_spread" => market.borrow_spread = curve()?,
                    "dividend" => market.dividend = number()?,
                    _ => return Err(unknown()),
                },
                "party.B" | "party.C" => {
                    let party = if sec == "party.B" { &mut party_b } else { &mut party_c };
                    match key {
                        "cds_spread" => party.cds_spread = curve()?,
                        "basis" => party.basis = curve()?,
                        "recovery" => party.recovery = number()?,
                        _ => return Err(unknown()),
                    }
                }
                "instrument" => match key {
                    "maturity" => maturity = Some(number()?),
                    "leg" => legs.push(parse_leg(value, line_no)?),
                    _ => return Err(unknown()),
                },
                "grid" => match key {
                    "num_space" => grid.num_space = parse_count(key, value, line_no)?,
                    "num_time" => grid.num_time = parse_count(key, value, line_no)?,
                    "space_max_multiplier" => grid.space_max_multiplier = number()?,
                    "scheme_theta" => grid.scheme_theta = number()?,
                    "rannacher_steps" => grid.rannacher_steps = parse_count(key, value, line_no)?,
                    "picard_tol" => grid.picard_tol = number()?,
                    "picard_max_iters" => grid.picard_max_iters = parse_count(key, value, line_no)?,
                    _ => return Err(unknown()),
                },
                "collateral" => {
                    let c = collateral.get_or_insert_with(CollateralInputs::default);
                    match key {
                        "level" => c.level = Some(number()?),
                        "kappa" => c.kappa = Some(number()?),
                        "haircut" => c.haircut = number()?,
                        "collateral_spread" => c.collateral_spread = curve()?,
                        "treasury_spread" => c.treasury_spread = curve()?,
                        _ => return Err(unknown()),
                    }
                }
                _ => unreachable!("sections are validated on entry"),
            }
        }

        let market = market.build()?;
        let maturity = maturity.ok_or_else(|| ConfigError::general("[instrument] needs `maturity`"))?;
        if legs.is_empty() {
            return Err(ConfigError::general("[instrument] needs at least one `leg`"));
        }
        let instrument = Instrument::new(maturity, legs).map_err(|e| ConfigError::general(e.to_string()))?;
        grid.validate().map_err(|e| ConfigError::general(e.to_string()))?;
        party_b.credit()?;
        party_c.credit()?;
        let collateral = collateral.map(CollateralInputs::build).transpose()?;
        Ok(Self {
            market,
            party_b,
            party_c,
            instrument,
            grid,
            collateral,
        })
    }

    pub fn party_b(&self) -> PartyCredit {
        self.party_b.credit().expect("validated on load")
    }

    pub fn party_c(&self) -> PartyCredit {
        self.party_c.credit().expect("validated on load")
    }
}

struct MarketInputs {
    spot: Option<f64>,
    vol: Option<f64>,
    rate: Option<RateCurve>,
    borrow_spread: RateCurve,
    dividend: f64,
}

impl Default for MarketInputs {
    fn default() -> Self {
        Self {
            spot: None,
            vol: None,
            rate: None,
            borrow_spread: RateCurve::zero(),
            dividend: 0.0,
        }
    }
}

impl MarketInputs {
    fn build(self) -> Result<MarketEnv, ConfigError> {
        let missing = |k: &str| ConfigError::general(format!("[market] needs `{k}`"));
        let rate = self.rate.ok_or_else(|| missing("rate"))?;
        let repo = rate.minus(&self.borrow_spread);
        MarketEnv::new(
            self.spot.ok_or_else(|| missing("spot"))?,
            self.vol.ok_or_else(|| missing("vol"))?,
            rate,
            repo,
            self.dividend,
        )
        .map_err(|e| ConfigError::general(e.to_string()))
    }
}

struct CollateralInputs {
    level: Option<f64>,
    kappa: Option<f64>,
    haircut: f64,
    collateral_spread: RateCurve,
    treasury_spread: RateCurve,
}

impl Default for CollateralInputs {
    fn default() -> Self {
        Self {
            level: None,
            kappa: None,
            haircut: 0.0,
            collateral_spread: RateCurve::zero(),
            treasury_spread: RateCurve::zero(),
        }
    }
}

impl CollateralInputs {
    fn build(self) -> Result<CollateralSpec, ConfigError> {
        let posted = match (self.level, self.kappa) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::general(
                    "[collateral] takes either `level` or `kappa`, not both",
                ))
            }
            (Some(c), None) => PostedAmount::Constant(c),
            (None, Some(k)) => PostedAmount::FractionOfRiskFree(k),
            (None, None) => PostedAmount::None,
        };
        CollateralSpec::new(posted, self.collateral_spread, self.haircut, self.treasury_spread)
            .map_err(|e| ConfigError::general(e.to_string()))
    }
}

fn parse_number(key: &str, value: &str, line: usize) -> Result<f64, ConfigError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigError::at(
            line,
            format!("`{key}`: expected a finite number, got `{value}`"),
        )),
    }
}

fn parse_count(key: &str, value: &str, line: usize) -> Result<usize, ConfigError> {
    value
        .parse::<usize>()
        .map_err(|_| ConfigError::at(line, format!("`{key}`: expected a non-negative integer, got `{value}`")))
}

/// A single rate, or `t0:r0, t1:r1, ...` for a piecewise-constant curve.
fn parse_curve(key: &str, value: &str, line: usize) -> Result<RateCurve, ConfigError> {
    if !value.contains(':') {
        return Ok(RateCurve::flat(parse_number(key, value, line)?));
    }
    let mut nodes = Vec::new();
    for part in value.split(',') {
        let (t, r) = part
            .split_once(':')
            .ok_or_else(|| ConfigError::at(line, format!("`{key}`: expected `time:rate`, got `{}`", part.trim())))?;
        nodes.push((parse_number(key, t.trim(), line)?, parse_number(key, r.trim(), line)?));
    }
    RateCurve::piecewise(&nodes).map_err(|e| ConfigError::at(line, format!("`{key}`: {e}")))
}

/// `kind strike quantity`; cash legs may omit the strike.
fn parse_leg(value: &str, line: usize) -> Result<Leg, ConfigError> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let num = |s: &str| parse_number("leg", s, line);
    match tokens.as_slice() {
        ["call", k, q] => Ok(Leg::call(num(k)?, num(q)?)),
        ["put", k, q] => Ok(Leg::put(num(k)?, num(q)?)),
        ["forward", k, q] => Ok(Leg::forward(num(k)?, num(q)?)),
        ["cash", q] | ["cash", _, q] => Ok(Leg::cash(num(q)?)),
        _ => Err(ConfigError::at(
            line,
            format!("`leg`: expected `call|put|forward|cash strike quantity`, got `{value}`"),
        )),
    }
}
