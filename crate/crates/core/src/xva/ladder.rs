use std::sync::Arc;
use std::thread;

use crate::curves::PartyCredit;
use crate::error::Result;
use crate::instruments::{Instrument, MarketEnv};
use crate::pde::{build_coefficients, solve_pde, CollateralSpec, GridSpec, PdeMode};

/// Labels of the five ladder prices, in order.
pub const LADDER_LABELS: [&str; 5] = [
    "p_rf_rf",
    "p_rf_syn_c",
    "p_syn_b_syn_c",
    "p_syn_b_cash_c",
    "p_cash_b_cash_c",
];

/// Fair value split into credit and funding adjustments.
///
/// The ladder holds `P(r, r)`, `P(r, r̃_c)`, `P(r̃_b, r̃_c)`, `P(r̃_b, r_c)` and
/// `P(r_b, r_c)`, where `P(f_b, f_c)` prices with B's and C's discount curves
/// set to the given curves (risk-free, synthetic or cash).
#[derive(Debug, Clone, PartialEq)]
pub struct XvaReport {
    pub v_star: f64,
    pub v_tilde: f64,
    pub v_fair: f64,
    pub cva: f64,
    pub dva: f64,
    pub cfa: f64,
    pub dfa: f64,
    pub cra: f64,
    pub ladder: [f64; 5],
}

impl XvaReport {
    /// Assembles every field from the ladder prices.
    pub fn from_ladder(ladder: [f64; 5]) -> Self {
        let [p1, p2, p3, p4, p5] = ladder;
        Self {
            v_star: p1,
            v_tilde: p3,
            v_fair: p5,
            cva: p1 - p2,
            dva: p3 - p2,
            cfa: p3 - p4,
            dfa: p5 - p4,
            cra: p1 - p5,
            ladder,
        }
    }

    /// `CVA − DVA = V* − Ṽ`.
    pub fn bilateral_cva(&self) -> f64 {
        self.cva - self.dva
    }

    /// `CFA − DFA = Ṽ − V`.
    pub fn bilateral_fva(&self) -> f64 {
        self.cfa - self.dfa
    }

    /// `V − (V* − CVA + DVA − CFA + DFA)`.
    pub fn telescoping_residual(&self) -> f64 {
        self.v_fair - (self.v_star - self.cva + self.dva - self.cfa + self.dfa)
    }

    /// `(metric, value)` rows in a stable order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        let mut rows = vec![
            ("v_star", self.v_star),
            ("v_tilde", self.v_tilde),
            ("v_fair", self.v_fair),
            ("cva", self.cva),
            ("dva", self.dva),
            ("cfa", self.cfa),
            ("dfa", self.dfa),
            ("cra", self.cra),
        ];
        rows.extend(LADDER_LABELS.iter().copied().zip(self.ladder));
        rows
    }
}

/// Runs the five ladder solves (concurrently) and assembles the report.
pub fn decompose(
    market: &MarketEnv,
    party_b: &PartyCredit,
    party_c: &PartyCredit,
    inst: &Instrument,
    grid: &GridSpec,
    mode: PdeMode,
    collateral: &CollateralSpec,
) -> Result<XvaReport> {
    let rf = PartyCredit::risk_free();
    let b_syn = party_b.synthetic_only();
    let c_syn = party_c.synthetic_only();
    let pairs = [
        (&rf, &rf),
        (&rf, &c_syn),
        (&b_syn, &c_syn),
        (&b_syn, party_c),
        (party_b, party_c),
    ];
    let mut coeffs = pairs
        .iter()
        .map(|(b, c)| build_coefficients(mode, market, b, c, collateral))
        .collect::<Result<Vec<_>>>()?;

    // Every rung shares the same V* surface when the equation needs one.
    if coeffs[0].needs_riskfree_surface() {
        let surface = Arc::new(solve_pde(&coeffs[0].risk_free(), inst, grid)?);
        for c in &mut coeffs {
            c.riskfree_value_surface = Some(Arc::clone(&surface));
        }
    }

    let prices: Vec<Result<f64>> = thread::scope(|scope| {
        let handles: Vec<_> = coeffs
            .iter()
            .map(|c| scope.spawn(move || solve_pde(c, inst, grid).map(|s| s.price())))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ladder solve panicked"))
            .collect()
    });
    let mut ladder = [0.0; 5];
    for (slot, price) in ladder.iter_mut().zip(prices) {
        *slot = price?;
    }
    Ok(XvaReport::from_ladder(ladder))
}
