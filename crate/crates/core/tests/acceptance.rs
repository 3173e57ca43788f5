//! Acceptance criteria, one line per criterion.
//!
//! Runs as a plain binary so the summary is printed even when everything
//! passes. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use xva_core::curves::{PartyCredit, RateCurve};
use xva_core::instruments::{bs_price, Instrument, Leg, MarketEnv};
use xva_core::lattice::{lattice_price, LatticeSpec};
use xva_core::pde::{
    build_coefficients, convergence_study, solve_pde, CollateralSpec, GridSpec, PdeCoefficients, PdeMode, PostedAmount,
};
use xva_core::quadrature::uniform_times;
use xva_core::xva::{
    cva_closed_form, decompose, tfc, zero_recovery_adjustments, Closeout, CvaModel, DeltaSource, XvaReport,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("worked example", c01_worked_example),
        ("telescoping identity", c02_telescoping),
        ("bond benchmark", c03_bond),
        ("law of one price", c04_law_of_one_price),
        ("oracle equivalence", c05_oracle),
        ("closed-form sweep", c06_sweep),
        ("close-out consistency", c07_closeout),
        ("convergence", c08_convergence),
        ("collateral reductions", c09_collateral),
        ("party symmetry", c10_symmetry),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn market() -> MarketEnv {
    MarketEnv::flat(50.0, 0.5, 0.05, 0.005, 0.0).unwrap()
}

fn dealer() -> PartyCredit {
    PartyCredit::flat(0.005, 0.002).unwrap()
}

fn counterparty() -> PartyCredit {
    PartyCredit::flat(0.03, 0.005).unwrap()
}

fn shifted_forward() -> Instrument {
    Instrument::shifted_forward(1.0, 45.0, 55.0).unwrap()
}

fn ladder(m: &MarketEnv, b: &PartyCredit, c: &PartyCredit, inst: &Instrument, grid: &GridSpec) -> XvaReport {
    decompose(m, b, c, inst, grid, PdeMode::Basic, &CollateralSpec::none()).unwrap()
}

fn basic(m: &MarketEnv, b: &PartyCredit, c: &PartyCredit) -> PdeCoefficients {
    build_coefficients(PdeMode::Basic, m, b, c, &CollateralSpec::none()).unwrap()
}

/// Checks `|got − want| ≤ tol` and records the line.
struct Checks {
    lines: Vec<String>,
    ok: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            ok: true,
        }
    }

    fn close(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        let pass = (got - want).abs() <= tol;
        self.ok &= pass;
        self.lines.push(format!(
            "{label}={got:.6} (target {want} +/- {tol:e}{})",
            if pass { "" } else { ", MISS" }
        ));
    }

    fn holds(&mut self, label: &str, pass: bool) {
        self.ok &= pass;
        self.lines.push(format!("{label}: {}", if pass { "yes" } else { "NO" }));
    }

    fn finish(self) -> Outcome {
        let text = self.lines.join("; ");
        if self.ok {
            Ok(text)
        } else {
            Err(text)
        }
    }
}

fn random_mixed_trade(rng: &mut StdRng, spot: f64) -> Instrument {
    let k1 = rng.gen_range(0.5..1.5) * spot;
    let k2 = rng.gen_range(0.5..1.5) * spot;
    let t = rng.gen_range(0.25..5.0);
    Instrument::new(t, vec![Leg::call(k1, 1.0), Leg::put(k2, -1.0)]).unwrap()
}

fn random_party(rng: &mut StdRng) -> PartyCredit {
    PartyCredit::flat(rng.gen_range(0.0..0.05), rng.gen_range(0.0..0.05)).unwrap()
}

fn c01_worked_example() -> Outcome {
    let start = Instant::now();
    let r = ladder(
        &market(),
        &dealer(),
        &counterparty(),
        &shifted_forward(),
        &GridSpec::default(),
    );
    let elapsed = start.elapsed().as_secs_f64();
    let mut c = Checks::new();
    c.close("v_star", r.v_star, 1.6009, 1e-3);
    c.close("v_fair", r.v_fair, 1.3577, 2e-3);
    c.close("cva", r.cva, 0.2501, 2e-3);
    c.close("dva", r.dva, 0.0342, 1e-3);
    c.close("cfa", r.cfa, 0.0410, 1e-3);
    c.close("dfa", r.dfa, 0.0136, 1e-3);
    c.holds(&format!("ladder runtime {elapsed:.2}s <= 10s"), elapsed <= 10.0);
    c.finish()
}

fn c02_telescoping() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let grid = GridSpec::with_size(100, 50);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = market();
        let inst = random_mixed_trade(&mut rng, m.spot());
        let (b, c) = (random_party(&mut rng), random_party(&mut rng));
        let r = ladder(&m, &b, &c, &inst, &grid);
        worst = worst.max(r.telescoping_residual().abs());
    }
    let detail = format!("max residual {worst:e} over 100 configs (bound 1e-12)");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c03_bond() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rate = rng.gen_range(0.0..0.08);
        let spread = rng.gen_range(0.0..0.05);
        let basis = rng.gen_range(0.0..0.02);
        let t = rng.gen_range(0.25..5.0);
        let m = MarketEnv::flat(50.0, 0.3, rate, 0.005, 0.0).unwrap();
        let c = PartyCredit::flat(spread, basis).unwrap();
        let note = Instrument::cash_note(t, 1.0).unwrap();
        let r = ladder(&m, &dealer(), &c, &note, &GridSpec::default());
        let e = |y: f64| (-y * t).exp();
        for (got, want) in [
            (r.v_star, e(rate)),
            (r.v_tilde, e(rate + spread)),
            (r.v_fair, e(rate + spread + basis)),
        ] {
            worst = worst.max((got - want).abs());
        }
    }
    let detail = format!("max |FD - exp(-yT)| {worst:e} over 20 tuples (bound 1e-6)");
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c04_law_of_one_price() -> Outcome {
    let m = market();
    let call = Instrument::new(1.0, vec![Leg::call(45.0, 1.0)]).unwrap();
    let grid = GridSpec::default();
    let c = counterparty();
    let (spread, basis) = (0.025, 0.022);
    let base = solve_pde(&basic(&m, &PartyCredit::flat(spread, basis).unwrap(), &c), &call, &grid)
        .unwrap()
        .price();
    let mut worst: f64 = 0.0;
    for ds in [-0.02, 0.0, 0.02] {
        for db in [-0.02, 0.0, 0.02] {
            let b = PartyCredit::flat(spread + ds, basis + db).unwrap();
            let v = solve_pde(&basic(&m, &b, &c), &call, &grid).unwrap().price();
            worst = worst.max((v - base).abs());
        }
    }
    let detail = format!("max change {worst:e} under +/-200bp shifts of B (bound 1e-8), v_fair {base:.6}");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c05_oracle() -> Outcome {
    let spec = LatticeSpec { steps: 2000 };
    let grid = GridSpec::default();
    let relative = |m: &MarketEnv, b: &PartyCredit, c: &PartyCredit, inst: &Instrument| {
        let fd = solve_pde(&basic(m, b, c), inst, &grid).unwrap().price();
        let tree = lattice_price(m, b, c, inst, spec).unwrap();
        ((fd - tree) / tree).abs()
    };
    let headline = relative(&market(), &dealer(), &counterparty(), &shifted_forward());

    let mut rng = StdRng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut trades = 0;
    while trades < 20 {
        let vol = rng.gen_range(0.2..0.6);
        let m = MarketEnv::flat(50.0, vol, 0.05, 0.005, 0.0).unwrap();
        let k1 = rng.gen_range(0.5..1.5) * 50.0;
        let k2 = rng.gen_range(0.5..1.5) * 50.0;
        let t = rng.gen_range(0.25..2.0);
        let inst = Instrument::new(t, vec![Leg::call(k1, 1.0), Leg::put(k2, -1.0)]).unwrap();
        let (b, c) = (random_party(&mut rng), random_party(&mut rng));
        // Relative error is meaningless near a zero price.
        if bs_price(&inst, &m, m.risk_free(), &m.carry(), 0.0).unwrap().abs() < 1.0 {
            continue;
        }
        worst = worst.max(relative(&m, &b, &c, &inst));
        trades += 1;
    }
    let mut c = Checks::new();
    c.close("headline relative gap", headline, 0.0, 1e-3);
    c.close("worst relative gap over 20 random trades", worst, 0.0, 1e-3);
    c.finish()
}

fn c06_sweep() -> Outcome {
    let grid: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64 / 10.0).collect();
    let mut c = Checks::new();
    for lambda_c in [0.0, 0.05] {
        let lsp: Vec<f64> = grid
            .iter()
            .map(|&lb| cva_closed_form(CvaModel::Lsp, lb, lambda_c, 0.4, 0.4, 5.0))
            .collect();
        let bk: Vec<f64> = grid
            .iter()
            .map(|&lb| cva_closed_form(CvaModel::Bk, lb, lambda_c, 0.4, 0.4, 5.0))
            .collect();
        let want = if lambda_c == 0.0 { 0.0 } else { 0.139292 };
        let tol = if lambda_c == 0.0 { 0.0 } else { 1e-6 };
        let lsp_flat = lsp.iter().all(|&v| v == lsp[0]) && (lsp[0] - want).abs() <= tol;
        c.holds(&format!("lambda_c={lambda_c}: lsp constant at {:.9}", lsp[0]), lsp_flat);
        c.holds(
            &format!("lambda_c={lambda_c}: bk strictly increasing"),
            bk.windows(2).all(|w| w[1] > w[0]),
        );
        c.holds(
            &format!("lambda_c={lambda_c}: bk equals lsp at lambda_b=0"),
            bk[0] == lsp[0],
        );
    }
    // The stated 0.139292 is rounded; the exact value is 1 − e^{−0.15}.
    c.close(
        "lsp at lambda_c=5%",
        cva_closed_form(CvaModel::Lsp, 0.0, 0.05, 0.4, 0.4, 5.0),
        1.0 - (-0.15f64).exp(),
        1e-9,
    );
    c.finish()
}

fn c07_closeout() -> Outcome {
    let m = market();
    let call = Instrument::new(1.0, vec![Leg::call(45.0, 1.0)]).unwrap();
    let times = uniform_times(1.0, 200, &[]).unwrap();
    let c_party = counterparty();
    let no_b = PartyCredit::risk_free();
    let b = PartyCredit::flat(0.005, 0.0).unwrap();
    let (lc, lf) = zero_recovery_adjustments(Closeout::LiabilitySide, &m, &no_b, &c_party, &call, &times).unwrap();
    let (rc, rf) = zero_recovery_adjustments(Closeout::RiskFree, &m, &no_b, &c_party, &call, &times).unwrap();
    let (rc_b, rf_b) = zero_recovery_adjustments(Closeout::RiskFree, &m, &b, &c_party, &call, &times).unwrap();

    let coeffs = build_coefficients(PdeMode::RiskfreeCloseout, &m, &b, &c_party, &CollateralSpec::none()).unwrap();
    let surface = solve_pde(&coeffs, &call, &GridSpec::default()).unwrap();
    let v_star = solve_pde(&coeffs.risk_free(), &call, &GridSpec::default())
        .unwrap()
        .price();
    let u_fd = v_star - surface.price();

    let mut c = Checks::new();
    c.close("cva(riskfree) - cva(liability) at lambda_b=0", rc - lc, 0.0, 1e-8);
    c.close("fva(riskfree) - fva(liability) at lambda_b=0", rf - lf, 0.0, 1e-8);
    c.holds(
        "cva and fva strictly smaller with lambda_b=50bp",
        rc_b < rc && rf_b < rf,
    );
    c.close("FD close-out U - (cva + fva)", u_fd - (rc_b + rf_b), 0.0, 1e-4);
    c.finish()
}

fn c08_convergence() -> Outcome {
    let m = market();
    let rf = PartyCredit::risk_free();
    let call = Instrument::new(1.0, vec![Leg::call(45.0, 1.0)]).unwrap();
    let exact = bs_price(&call, &m, m.risk_free(), &m.carry(), 0.0).unwrap();
    let base = GridSpec::with_size(200, 100);
    let bsm = convergence_study(&basic(&m, &rf, &rf), &call, &base, 4, Some(exact)).unwrap();
    let orders: Vec<f64> = bsm.iter().filter_map(|r| r.observed_order).collect();

    let nonlinear = convergence_study(
        &basic(&m, &dealer(), &counterparty()),
        &shifted_forward(),
        &base,
        4,
        None,
    )
    .unwrap();
    let diffs: Vec<f64> = nonlinear.iter().filter_map(|r| r.error_estimate).collect();

    let mut c = Checks::new();
    c.holds(
        &format!(
            "BSM orders {:?} all >= 1.8",
            orders.iter().map(|o| (o * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
        orders.len() == 3 && orders.iter().all(|&o| o >= 1.8),
    );
    c.holds(
        &format!(
            "self-convergence differences {:?} decreasing over 3 doublings",
            diffs.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
        ),
        diffs.len() == 3 && diffs.windows(2).all(|w| w[1] < w[0]),
    );
    c.finish()
}

fn c09_collateral() -> Outcome {
    let m = market();
    let (b, cp) = (dealer(), counterparty());
    let inst = shifted_forward();
    let grid = GridSpec::with_size(400, 200);
    let spec = CollateralSpec::new(
        PostedAmount::Constant(0.5),
        RateCurve::flat(-0.002),
        0.25,
        RateCurve::flat(0.01),
    )
    .unwrap();
    let collateral = build_coefficients(PdeMode::Collateral, &m, &b, &cp, &spec).unwrap();
    let generalized = build_coefficients(PdeMode::Generalized, &m, &b, &cp, &spec).unwrap();
    let v_col = solve_pde(&collateral, &inst, &grid).unwrap().price();
    let v_gen = solve_pde(&generalized, &inst, &grid).unwrap().price();

    let trivial = build_coefficients(PdeMode::Collateral, &m, &b, &cp, &CollateralSpec::none()).unwrap();
    let v_triv = solve_pde(&trivial, &inst, &grid).unwrap().price();
    let v_basic = solve_pde(&basic(&m, &b, &cp), &inst, &grid).unwrap().price();

    let times = uniform_times(1.0, 100, &[]).unwrap();
    let zero = RateCurve::zero();
    let tfc_h0 = tfc(
        &m,
        &inst,
        0.0,
        &RateCurve::flat(0.01),
        &zero,
        &times,
        DeltaSource::Analytic,
    )
    .unwrap();
    let tfc_rn = tfc(&m, &inst, 0.25, &zero, &zero, &times, DeltaSource::Analytic).unwrap();

    let mut c = Checks::new();
    c.close("collateral - generalized", v_col - v_gen, 0.0, 1e-10);
    c.close("trivial collateral - basic", v_triv - v_basic, 0.0, 1e-10);
    c.holds("tfc exactly 0 with h=0 and with r_N=r", tfc_h0 == 0.0 && tfc_rn == 0.0);
    c.finish()
}

fn c10_symmetry() -> Outcome {
    let mut rng = StdRng::seed_from_u64(10);
    let grid = GridSpec::with_size(400, 200);
    let mut worst: f64 = 0.0;
    let mut value_gap: f64 = 0.0;
    for _ in 0..20 {
        let m = market();
        let inst = random_mixed_trade(&mut rng, m.spot());
        let (b, c) = (random_party(&mut rng), random_party(&mut rng));
        let r = ladder(&m, &b, &c, &inst, &grid);
        let s = ladder(&m, &c, &b, &inst.negated(), &grid);
        worst = worst.max((s.cva - r.dva).abs()).max((s.cfa - r.dfa).abs());
        value_gap = value_gap
            .max((s.v_fair + r.v_fair).abs())
            .max((s.v_star + r.v_star).abs());
    }
    let detail = format!(
        "max |swapped (cva, cfa) - original (dva, dfa)| {worst:e} (bound 1e-6); max |v + v_swapped| {value_gap:e}"
    );
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
