//! Finite-difference results against the quadrature and closed-form paths.

use approx::assert_abs_diff_eq;
use xva_core::curves::{PartyCredit, RateCurve};
use xva_core::instruments::{Instrument, Leg, MarketEnv};
use xva_core::pde::{
    build_coefficients, solve_pde, CollateralSpec, GeneralizedPreset, GridSpec, PdeCoefficients, PdeMode,
};
use xva_core::quadrature::uniform_times;
use xva_core::xva::{cra_integral, decompose, tfc, zero_recovery_adjustments, Closeout, DeltaSource};

fn market() -> MarketEnv {
    MarketEnv::flat(50.0, 0.5, 0.05, 0.005, 0.0).unwrap()
}

fn call() -> Instrument {
    Instrument::new(1.0, vec![Leg::call(45.0, 1.0)]).unwrap()
}

#[test]
fn cra_quadrature_matches_ladder_for_call() {
    let b = PartyCredit::flat(0.005, 0.002).unwrap();
    let c = PartyCredit::flat(0.03, 0.005).unwrap();
    let r = decompose(
        &market(),
        &b,
        &c,
        &call(),
        &GridSpec::default(),
        PdeMode::Basic,
        &CollateralSpec::none(),
    )
    .unwrap();
    let times = uniform_times(1.0, 200, &[]).unwrap();
    let u = cra_integral(&market(), &b, &c, &call(), &times).unwrap();
    assert!(((u - r.cra) / r.cra).abs() < 1e-3, "quadrature {u} vs ladder {}", r.cra);
}

#[test]
fn cra_quadrature_matches_ladder_for_cash_note() {
    let b = PartyCredit::flat(0.005, 0.002).unwrap();
    let c = PartyCredit::flat(0.03, 0.005).unwrap();
    let note = Instrument::cash_note(1.0, 1.0).unwrap();
    let r = decompose(
        &market(),
        &b,
        &c,
        &note,
        &GridSpec::with_size(100, 400),
        PdeMode::Basic,
        &CollateralSpec::none(),
    )
    .unwrap();
    let times = uniform_times(1.0, 200, &[]).unwrap();
    assert_abs_diff_eq!(
        cra_integral(&market(), &b, &c, &note, &times).unwrap(),
        r.cra,
        epsilon = 1e-8
    );
}

#[test]
fn liability_side_quadrature_matches_ladder_for_call() {
    let b = PartyCredit::risk_free();
    let c = PartyCredit::flat(0.03, 0.005).unwrap();
    let r = decompose(
        &market(),
        &b,
        &c,
        &call(),
        &GridSpec::default(),
        PdeMode::Basic,
        &CollateralSpec::none(),
    )
    .unwrap();
    let times = uniform_times(1.0, 400, &[]).unwrap();
    let (cva, fva) = zero_recovery_adjustments(Closeout::LiabilitySide, &market(), &b, &c, &call(), &times).unwrap();
    assert_abs_diff_eq!(cva, r.cva, epsilon = 1e-4);
    assert_abs_diff_eq!(fva, r.cfa, epsilon = 1e-4);
}

#[test]
fn riskfree_closeout_fd_matches_quadrature() {
    let b = PartyCredit::flat(0.005, 0.0).unwrap();
    let c = PartyCredit::flat(0.03, 0.005).unwrap();
    let k = build_coefficients(PdeMode::RiskfreeCloseout, &market(), &b, &c, &CollateralSpec::none()).unwrap();
    let v = solve_pde(&k, &call(), &GridSpec::default()).unwrap().price();
    // U is read off the same grid as V*, so V*'s own discretization error cancels.
    let v_star = solve_pde(&k.risk_free(), &call(), &GridSpec::default())
        .unwrap()
        .price();
    let times = uniform_times(1.0, 200, &[]).unwrap();
    let (cva, fva) = zero_recovery_adjustments(Closeout::RiskFree, &market(), &b, &c, &call(), &times).unwrap();
    assert_abs_diff_eq!(v_star - v, cva + fva, epsilon = 1e-4);
}

#[test]
fn tfc_from_surface_delta_matches_analytic_delta() {
    let rf = PartyCredit::risk_free();
    let k = build_coefficients(PdeMode::Basic, &market(), &rf, &rf, &CollateralSpec::none()).unwrap();
    let surface = solve_pde(&k, &call(), &GridSpec::with_size(800, 400)).unwrap();
    let times = uniform_times(1.0, 50, &[]).unwrap();
    let spread = RateCurve::flat(0.01);
    let zero = RateCurve::zero();
    let analytic = tfc(&market(), &call(), 0.25, &spread, &zero, &times, DeltaSource::Analytic).unwrap();
    let numeric = tfc(
        &market(),
        &call(),
        0.25,
        &spread,
        &zero,
        &times,
        DeltaSource::Surface(&surface),
    )
    .unwrap();
    assert_abs_diff_eq!(analytic, numeric, epsilon = 1e-4);
}

#[test]
fn liability_side_preset_matches_basic_mode() {
    let b = PartyCredit::flat(0.005, 0.002).unwrap();
    let c = PartyCredit::flat(0.03, 0.005).unwrap();
    let inst = Instrument::shifted_forward(1.0, 45.0, 55.0).unwrap();
    let grid = GridSpec::with_size(400, 200);
    let preset = PdeCoefficients::from_preset(
        &market(),
        &GeneralizedPreset::LiabilitySide {
            party_b: b.clone(),
            party_c: c.clone(),
        },
    )
    .unwrap();
    let basic = build_coefficients(PdeMode::Basic, &market(), &b, &c, &CollateralSpec::none()).unwrap();
    let x = solve_pde(&preset, &inst, &grid).unwrap().price();
    let y = solve_pde(&basic, &inst, &grid).unwrap().price();
    assert_abs_diff_eq!(x, y, epsilon = 1e-10);
}

#[test]
fn burgard_kjaer_preset_prices_at_synthetic_curves() {
    let b = PartyCredit::flat(0.005, 0.002).unwrap();
    let c = PartyCredit::flat(0.03, 0.005).unwrap();
    let inst = Instrument::shifted_forward(1.0, 45.0, 55.0).unwrap();
    let grid = GridSpec::with_size(400, 200);
    let preset = PdeCoefficients::from_preset(
        &market(),
        &GeneralizedPreset::BurgardKjaer {
            party_b: b.clone(),
            party_c: c.clone(),
        },
    )
    .unwrap();
    let r = decompose(&market(), &b, &c, &inst, &grid, PdeMode::Basic, &CollateralSpec::none()).unwrap();
    assert_abs_diff_eq!(
        solve_pde(&preset, &inst, &grid).unwrap().price(),
        r.v_tilde,
        epsilon = 1e-10
    );
}
