//! Command handling and table output for the `fedcontract` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use fedcontract::market::{accuracy_sweep, type_count_sweep, AccuracyRow, TypeCountRow};
use fedcontract::oracle::{
    self, brute_force_solve, grid_resolution_bound, oracle_grid, FeasibilityReport,
};
use fedcontract::{parse_config, run_scenario, ScenarioConfig, ScenarioReport};
use log::info;

/// Environment variable read for log filtering, e.g. `FEDCONTRACT_LOG=info`.
pub const LOG_ENV: &str = "FEDCONTRACT_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "fedcontract",
    version,
    about = "Contract menus for federated learning data markets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the menu; write menu.csv, utilities.csv and feasibility.txt.
    Solve(CommonArgs),
    /// Solve and check the menu and the owners' choices; write feasibility.txt.
    Verify(CommonArgs),
    /// Profit against the upper accuracy limit; write sweep_accuracy.csv.
    SweepAccuracy(CommonArgs),
    /// Contract and Stackelberg profit against the type count; write sweep_types.csv.
    SweepTypes(CommonArgs),
    /// Compare the solver with the brute-force grid (at most 4 types).
    OracleCheck(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario JSON; an empty file means all defaults.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the feasibility tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Solve(a)
            | Command::Verify(a)
            | Command::SweepAccuracy(a)
            | Command::SweepTypes(a)
            | Command::OracleCheck(a) => a,
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

/// Config errors, bad arguments and I/O failures, as opposed to failed checks.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn load_config(args: &CommonArgs) -> Result<ScenarioConfig> {
    let mut config = parse_config(&args.config).map_err(|e| UsageError(e.to_string()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(tol) = args.tol {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(UsageError(format!("--tol must be a finite value >= 0, got {tol}")).into());
        }
        config.tolerance = tol;
    }
    Ok(config)
}

pub fn run(command: &Command) -> Result<Outcome> {
    let args = command.args();
    let config = load_config(args)?;
    info!("loaded {}", args.config.display());
    match command {
        Command::Solve(_) => solve(&config, &args.out),
        Command::Verify(_) => verify(&config, &args.out),
        Command::SweepAccuracy(_) => sweep_accuracy(&config, &args.out),
        Command::SweepTypes(_) => sweep_types(&config, &args.out),
        Command::OracleCheck(_) => oracle_check(&config),
    }
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)
        .map_err(|e| UsageError(format!("cannot create {}: {e}", out.display())))?;
    Ok(())
}

fn io_context(path: &Path) -> impl Fn(std::io::Error) -> anyhow::Error + '_ {
    move |e| UsageError(format!("cannot write {}: {e}", path.display())).into()
}

fn solve(config: &ScenarioConfig, out: &Path) -> Result<Outcome> {
    prepare(out)?;
    let report = run_scenario(config)?;
    write_menu(&out.join("menu.csv"), &report)?;
    write_utilities(
        &out.join("utilities.csv"),
        &report,
        &config.utility_curve_types,
    )?;
    let path = out.join("feasibility.txt");
    fs::write(&path, feasibility_text(&report.feasibility)).map_err(io_context(&path))?;

    let mut summary = String::new();
    writeln!(summary, "types            {}", report.types.len())?;
    writeln!(
        summary,
        "expected profit  {}",
        fmt_num(report.expected_profit)
    )?;
    writeln!(
        summary,
        "realized profit  {}",
        fmt_num(report.realized_profit)
    )?;
    writeln!(
        summary,
        "total reward     {}",
        fmt_num(report.menu.expected_total_reward)
    )?;
    writeln!(
        summary,
        "multiplier       {}",
        fmt_num(report.menu.budget_multiplier)
    )?;
    writeln!(
        summary,
        "ironed segments  {}",
        report.menu.ironed_segments.len()
    )?;
    for (regime, profit) in &report.baseline_profits {
        writeln!(summary, "{:<16} {}", regime.as_str(), fmt_num(*profit))?;
    }
    write!(
        summary,
        "feasibility      {}",
        verdict(report.feasibility.all_ok())
    )?;
    Ok(Outcome {
        passed: report.feasibility.all_ok(),
        summary,
    })
}

fn verify(config: &ScenarioConfig, out: &Path) -> Result<Outcome> {
    prepare(out)?;
    let report = run_scenario(config)?;
    let mut text = feasibility_text(&report.feasibility);
    writeln!(text, "assignment {}", verdict(report.assignment_realized))?;
    let path = out.join("feasibility.txt");
    fs::write(&path, &text).map_err(io_context(&path))?;
    Ok(Outcome {
        passed: report.feasibility.all_ok() && report.assignment_realized,
        summary: text.trim_end().to_string(),
    })
}

fn sweep_accuracy(config: &ScenarioConfig, out: &Path) -> Result<Outcome> {
    prepare(out)?;
    let rows = accuracy_sweep(config, &config.accuracy_limits())?;
    let path = out.join("sweep_accuracy.csv");
    write_accuracy_rows(&path, &rows)?;
    let passed = rows.iter().all(|r| r.feasibility.all_ok());
    Ok(Outcome {
        passed,
        summary: format!(
            "{} rows to {}, feasibility {}",
            rows.len(),
            path.display(),
            verdict(passed)
        ),
    })
}

fn sweep_types(config: &ScenarioConfig, out: &Path) -> Result<Outcome> {
    prepare(out)?;
    let rows = type_count_sweep(config, &config.type_counts())?;
    let path = out.join("sweep_types.csv");
    write_type_rows(&path, &rows)?;
    let passed = rows.iter().all(|r| r.feasibility.all_ok());
    Ok(Outcome {
        passed,
        summary: format!(
            "{} rows to {}, feasibility {}",
            rows.len(),
            path.display(),
            verdict(passed)
        ),
    })
}

fn oracle_check(config: &ScenarioConfig) -> Result<Outcome> {
    let types = config.build_types()?;
    let params = &config.params;
    let menu = fedcontract::solve(&types, params, &config.solver)?;
    let grid_menu = brute_force_solve(&types, params, config.oracle_grid_size)?;
    let grid = oracle_grid(&types, params, config.oracle_grid_size)?;
    let bound = grid_resolution_bound(
        &menu.frequencies(),
        menu.publisher_profit,
        &types,
        params,
        &grid,
    )?;
    let gap = (menu.publisher_profit - grid_menu.publisher_profit).abs();
    let allowance = bound.max(1e-9);
    let feasible = oracle::assess(&menu.items, &types, params, config.tolerance)?.all_ok();
    let passed = gap <= allowance && feasible;
    let summary = format!(
        "solver profit  {}\noracle profit  {}\ngap            {}\ngrid bound     {}\nverdict        {}",
        fmt_num(menu.publisher_profit),
        fmt_num(grid_menu.publisher_profit),
        fmt_num(gap),
        fmt_num(bound),
        verdict(passed),
    );
    Ok(Outcome { passed, summary })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Plain decimal with 12 significant digits; scientific outside 1e-6..1e12.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let exponent: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if !(-6..12).contains(&exponent) {
        return sci;
    }
    let decimals = (11 - exponent) as usize;
    // re-parse so rounding happens once, at the significant digit
    let rounded: f64 = sci.parse().unwrap_or(x);
    format!("{rounded:.decimals$}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path)
        .map_err(|e| UsageError(format!("cannot write {}: {e}", path.display())).into())
}

fn finish(mut writer: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    writer.flush().map_err(io_context(path))
}

pub fn write_menu(path: &Path, report: &ScenarioReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["type", "epsilon", "theta", "cpu_freq", "reward"])?;
    for (ty, item) in report.types.iter().zip(&report.menu.items) {
        w.write_record([
            ty.index.to_string(),
            fmt_num(ty.epsilon),
            fmt_num(ty.theta),
            fmt_num(item.cpu_freq),
            fmt_num(item.reward),
        ])?;
    }
    finish(w, path)
}

/// One row per requested type that exists in the menu, one column per item.
pub fn write_utilities(path: &Path, report: &ScenarioReport, curve_types: &[usize]) -> Result<()> {
    let m = report.menu.items.len();
    let mut w = csv_writer(path)?;
    let mut header = vec!["type".to_string()];
    header.extend((1..=m).map(|i| format!("item_{i}")));
    w.write_record(&header)?;
    for &t in curve_types.iter().filter(|&&t| (1..=m).contains(&t)) {
        let mut row = vec![t.to_string()];
        row.extend(report.utilities[t - 1].iter().map(|&u| fmt_num(u)));
        w.write_record(&row)?;
    }
    finish(w, path)
}

pub fn write_accuracy_rows(path: &Path, rows: &[AccuracyRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "upper_limit",
        "expected_profit",
        "realized_profit",
        "feasible",
    ])?;
    for r in rows {
        w.write_record([
            fmt_num(r.upper_limit),
            fmt_num(r.expected_profit),
            fmt_num(r.realized_profit),
            r.feasibility.all_ok().to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_type_rows(path: &Path, rows: &[TypeCountRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "type_count",
        "contract_profit",
        "symmetric_profit",
        "asymmetric_profit",
        "feasible",
    ])?;
    for r in rows {
        w.write_record([
            r.type_count.to_string(),
            fmt_num(r.contract_profit),
            fmt_num(r.symmetric_profit),
            fmt_num(r.asymmetric_profit),
            r.feasibility.all_ok().to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn feasibility_text(report: &FeasibilityReport) -> String {
    let mut s = String::new();
    let at_type = report
        .ir
        .worst_type
        .map(|t| format!(" at type {t}"))
        .unwrap_or_default();
    let at_pair = report
        .ic
        .worst_pair
        .map(|(t, i)| format!(" at type {t} item {i}"))
        .unwrap_or_default();
    let _ = writeln!(s, "tolerance {}", fmt_num(report.tolerance));
    let _ = writeln!(
        s,
        "ir {} worst {}{}",
        verdict(report.ir.ok),
        fmt_num(report.ir.worst_violation),
        at_type
    );
    let _ = writeln!(
        s,
        "ic {} worst {}{}",
        verdict(report.ic.ok),
        fmt_num(report.ic.worst_violation),
        at_pair
    );
    let _ = writeln!(s, "monotone {}", verdict(report.monotone_ok));
    let _ = writeln!(s, "deadline {}", verdict(report.time_feasible_ok));
    let _ = writeln!(
        s,
        "budget {} spend {} of {}",
        verdict(report.budget_ok),
        fmt_num(report.expected_spend),
        fmt_num(report.r_max)
    );
    let _ = writeln!(s, "overall {}", verdict(report.all_ok()));
    s
}
