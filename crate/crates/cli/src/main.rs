//! `xva`: price, decompose, sweep and benchmark from an INI config.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use xva_core::curves::{PartyCredit, RateCurve};
use xva_core::instruments::{bs_price, Instrument, MarketEnv};
use xva_core::pde::{build_coefficients, convergence_study, solve_pde, CollateralSpec, GridSpec, PdeMode};
use xva_core::xva::{cva_closed_form, decompose, CvaModel};

use config::{ConfigError, RunConfig};
use output::{Format, Table};

#[derive(Parser)]
#[command(name = "xva", version, about = "Liability-side pricing and XVA decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Risk-free value, fair value and total adjustment.
    Price {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = CloseoutArg::Liability)]
        closeout: CloseoutArg,
    },
    /// Full CVA/DVA/CFA/DFA breakdown with the five ladder prices.
    Decompose {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = CloseoutArg::Liability)]
        closeout: CloseoutArg,
    },
    /// CVA ratio (closed forms) or fair value (PDE) over a parameter range.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = SweepModel::Pde)]
        model: SweepModel,
    },
    /// Checks against closed forms and grid refinement.
    Benchmark {
        #[command(subcommand)]
        kind: Benchmark,
    },
}

#[derive(Subcommand)]
enum Benchmark {
    /// Cash note under flat curves: FD against exponentials.
    Bond {
        #[arg(long, allow_negative_numbers = true)]
        rate: f64,
        #[arg(long, default_value_t = 0.0)]
        spread: f64,
        #[arg(long, default_value_t = 0.0)]
        basis: f64,
        #[arg(long, default_value_t = 1.0)]
        maturity: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Grid refinement study on the configured trade.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 200)]
        base_space: usize,
        #[arg(long, default_value_t = 100)]
        base_time: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    out: Format,
    /// Also write the CSV form to this file.
    #[arg(long)]
    csv_path: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CloseoutArg {
    Liability,
    Riskfree,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    #[value(name = "lambda_b")]
    LambdaB,
    #[value(name = "lambda_c")]
    LambdaC,
    #[value(name = "basis_b")]
    BasisB,
    #[value(name = "basis_c")]
    BasisC,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            Self::LambdaB => "lambda_b",
            Self::LambdaC => "lambda_c",
            Self::BasisB => "basis_b",
            Self::BasisC => "basis_c",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepModel {
    Lsp,
    Bk,
    Pde,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<xva_core::Error> for Failure {
    fn from(e: xva_core::Error) -> Self {
        use xva_core::Error::*;
        match e {
            PicardNonConvergence { .. } | NonFinite { .. } | InvalidProbability { .. } | OutOfDomain { .. } => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price { run, closeout } => cmd_price(&run, closeout),
        Command::Decompose { run, closeout } => cmd_decompose(&run, closeout),
        Command::Sweep {
            run,
            param,
            from,
            to,
            steps,
            model,
        } => cmd_sweep(&run, param, from, to, steps, model),
        Command::Benchmark { kind } => match kind {
            Benchmark::Bond {
                rate,
                spread,
                basis,
                maturity,
                out,
            } => cmd_bond(rate, spread, basis, maturity, &out),
            Benchmark::Converge {
                run,
                levels,
                base_space,
                base_time,
            } => cmd_converge(&run, levels, base_space, base_time),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn emit(table: &Table, out: &OutArgs) -> CmdResult {
    print!("{}", table.render(out.out));
    if let Some(path) = &out.csv_path {
        std::fs::write(path, table.render(Format::Csv))
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn pricing_mode(cfg: &RunConfig, closeout: CloseoutArg) -> (PdeMode, CollateralSpec) {
    let collateral = cfg.collateral.clone().unwrap_or_else(CollateralSpec::none);
    let mode = match closeout {
        CloseoutArg::Riskfree => PdeMode::RiskfreeCloseout,
        CloseoutArg::Liability if collateral.is_trivial() => PdeMode::Basic,
        CloseoutArg::Liability => PdeMode::Collateral,
    };
    (mode, collateral)
}

fn cmd_price(run: &RunArgs, closeout: CloseoutArg) -> CmdResult {
    let cfg = RunConfig::load(&run.config)?;
    let (mode, collateral) = pricing_mode(&cfg, closeout);
    let coeffs = build_coefficients(mode, &cfg.market, &cfg.party_b(), &cfg.party_c(), &collateral)?;
    let v_star = solve_pde(&coeffs.risk_free(), &cfg.instrument, &cfg.grid)?.price();
    let v_fair = solve_pde(&coeffs, &cfg.instrument, &cfg.grid)?.price();
    let mut table = Table::new(&["metric", "value"]);
    table.metric("v_star", v_star);
    table.metric("v_fair", v_fair);
    table.metric("cra", v_star - v_fair);
    emit(&table, &run.out)
}

fn cmd_decompose(run: &RunArgs, closeout: CloseoutArg) -> CmdResult {
    let cfg = RunConfig::load(&run.config)?;
    let (mode, collateral) = pricing_mode(&cfg, closeout);
    let report = decompose(
        &cfg.market,
        &cfg.party_b(),
        &cfg.party_c(),
        &cfg.instrument,
        &cfg.grid,
        mode,
        &collateral,
    )?;
    let mut table = Table::new(&["metric", "value"]);
    for (name, value) in report.rows() {
        table.metric(name, value);
    }
    emit(&table, &run.out)
}

fn sweep_points(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, Failure> {
    if !(from.is_finite() && to.is_finite()) || from > to {
        return Err(Failure::Config(format!(
            "sweep range needs finite from <= to, got {from}..{to}"
        )));
    }
    if steps < 2 {
        return Err(Failure::Config(format!("sweep needs at least 2 steps, got {steps}")));
    }
    let n = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                to
            } else {
                from + (to - from) * i as f64 / n
            }
        })
        .collect())
}

fn flat_value(curve: &RateCurve, what: &str) -> Result<f64, Failure> {
    if curve.node_rates().windows(2).any(|w| w[0] != w[1]) {
        return Err(Failure::Config(format!("closed-form sweep needs a flat {what}")));
    }
    Ok(curve.short_rate(0.0))
}

fn cmd_sweep(run: &RunArgs, param: SweepParam, from: f64, to: f64, steps: usize, model: SweepModel) -> CmdResult {
    let cfg = RunConfig::load(&run.config)?;
    let points = sweep_points(from, to, steps)?;
    let values: Vec<f64> = match model {
        SweepModel::Lsp | SweepModel::Bk => {
            let cva_model = if model == SweepModel::Lsp {
                CvaModel::Lsp
            } else {
                CvaModel::Bk
            };
            let (rb, rc) = (cfg.party_b.recovery, cfg.party_c.recovery);
            let lambda_b = flat_value(&cfg.party_b().hazard_rate()?, "hazard rate for B")?;
            let lambda_c = flat_value(&cfg.party_c().hazard_rate()?, "hazard rate for C")?;
            let horizon = cfg.instrument.maturity();
            points
                .iter()
                .map(|&x| {
                    let (lb, lc) = match param {
                        SweepParam::LambdaB => (x, lambda_c),
                        SweepParam::LambdaC => (lambda_b, x),
                        SweepParam::BasisB | SweepParam::BasisC => (lambda_b, lambda_c),
                    };
                    cva_closed_form(cva_model, lb, lc, rb, rc, horizon)
                })
                .collect()
        }
        SweepModel::Pde => {
            let (mode, collateral) = pricing_mode(&cfg, CloseoutArg::Liability);
            let results: Vec<Result<f64, Failure>> = points
                .par_iter()
                .map(|&x| {
                    let mut b = cfg.party_b.clone();
                    let mut c = cfg.party_c.clone();
                    match param {
                        SweepParam::LambdaB => b.cds_spread = RateCurve::flat(x * (1.0 - b.recovery)),
                        SweepParam::LambdaC => c.cds_spread = RateCurve::flat(x * (1.0 - c.recovery)),
                        SweepParam::BasisB => b.basis = RateCurve::flat(x),
                        SweepParam::BasisC => c.basis = RateCurve::flat(x),
                    }
                    let coeffs = build_coefficients(mode, &cfg.market, &b.credit()?, &c.credit()?, &collateral)?;
                    Ok(solve_pde(&coeffs, &cfg.instrument, &cfg.grid)?.price())
                })
                .collect();
            results.into_iter().collect::<Result<_, _>>()?
        }
    };
    let value_column = if model == SweepModel::Pde {
        "v_fair"
    } else {
        "cva_ratio"
    };
    let mut table = Table::new(&[param.name(), value_column]);
    for (x, v) in points.iter().zip(values) {
        table.row(vec![output::fixed(*x), output::fixed(v)]);
    }
    emit(&table, &run.out)
}

fn cmd_bond(rate: f64, spread: f64, basis: f64, maturity: f64, out: &OutArgs) -> CmdResult {
    let market = MarketEnv::flat(100.0, 0.2, rate, 0.0, 0.0)?;
    let b = PartyCredit::risk_free();
    let c = PartyCredit::flat(spread, basis)?;
    let note = Instrument::cash_note(maturity, 1.0)?;
    let grid = GridSpec::with_size(100, 400);
    let fd = decompose(&market, &b, &c, &note, &grid, PdeMode::Basic, &CollateralSpec::none())?;

    let v_star = (-rate * maturity).exp();
    let v_tilde = (-(rate + spread) * maturity).exp();
    let v_fair = (-(rate + spread + basis) * maturity).exp();
    let rows = [
        ("v_star", v_star, fd.v_star),
        ("v_tilde", v_tilde, fd.v_tilde),
        ("v_fair", v_fair, fd.v_fair),
        ("cva", v_star - v_tilde, fd.cva),
        ("cfa", v_tilde - v_fair, fd.cfa),
    ];
    let mut table = Table::new(&["metric", "closed_form", "fd", "abs_gap"]);
    for (name, exact, numeric) in rows {
        table.row(vec![
            name.to_string(),
            output::fixed(exact),
            output::fixed(numeric),
            format!("{:.3e}", (exact - numeric).abs()),
        ]);
    }
    emit(&table, out)
}

fn cmd_converge(run: &RunArgs, levels: usize, base_space: usize, base_time: usize) -> CmdResult {
    let cfg = RunConfig::load(&run.config)?;
    let (mode, collateral) = pricing_mode(&cfg, CloseoutArg::Liability);
    let (b, c) = (cfg.party_b(), cfg.party_c());
    let coeffs = build_coefficients(mode, &cfg.market, &b, &c, &collateral)?;
    let riskless = |p: &PartyCredit| p.synthetic_spread().is_zero() && p.funding_basis().is_zero();
    // With no credit or collateral terms the trade is plain Black–Scholes.
    let reference = if mode == PdeMode::Basic && riskless(&b) && riskless(&c) {
        Some(bs_price(
            &cfg.instrument,
            &cfg.market,
            cfg.market.risk_free(),
            &cfg.market.carry(),
            0.0,
        )?)
    } else {
        None
    };
    let base = GridSpec {
        num_space: base_space,
        num_time: base_time,
        ..cfg.grid.clone()
    };
    let rows = convergence_study(&coeffs, &cfg.instrument, &base, levels, reference)?;
    let mut table = Table::new(&["num_space", "num_time", "value", "error", "order"]);
    for row in rows {
        let opt = |x: Option<f64>, f: fn(f64) -> String| x.map(f).unwrap_or_else(|| "-".to_string());
        table.row(vec![
            row.num_space.to_string(),
            row.num_time.to_string(),
            output::fixed(row.value),
            opt(row.error_estimate, |e| format!("{e:.3e}")),
            opt(row.observed_order, |p| format!("{p:.3}")),
        ]);
    }
    emit(&table, &run.out)
}
