//! Command-line front end. [`run`] parses arguments, executes one command and
//! returns the process exit code, writing everything to the given sinks so
//! the whole surface can be driven from tests.
//!
//! Exit codes: 0 success, 1 domain, argument, parse or config error, 2 I/O
//! error, 3 self-check failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::asymdist::{
    alpha_beta, build_table, simulate_ih_path, PathGridConfig, QuantileTable, DEFAULT_ALPHAS, DEFAULT_H_GRID,
};
use crate::config::read_scenarios;
use crate::error::{IcrError, Result};
use crate::estimator::icr_estimate;
use crate::inference::{invert_ci, mue, DEFAULT_GRID_STEP};
use crate::mc::run_grid;
use crate::rng::{substream, Domain};
use crate::tssim::{draw_innovations, series_from_innovations, InnovationSpec, TimeSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

/// Minimum number of observations in a series file.
pub const MIN_SERIES_ROWS: usize = 5;

#[derive(Debug, Parser)]
#[command(name = "icr", version, about = "Initial-condition-robust inference for AR(1) models")]
pub struct Cli {
    /// Maximum number of worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a critical-value table of the limit law.
    CvTable(CvTableArgs),
    /// Confidence interval for rho from a series file.
    Ci(CiArgs),
    /// Median-unbiased interval estimate from a series file.
    Mue(MueArgs),
    /// Monte Carlo coverage study from a scenario file.
    Mc(McArgs),
    /// Self-test of invariance and numerical oracles.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct CvTableArgs {
    /// Number of simulated paths.
    #[arg(long = "b", visible_alias = "b-paths", default_value_t = 50_000)]
    pub b_paths: usize,
    /// Discretization steps per path.
    #[arg(long, default_value_t = 5_000)]
    pub n_steps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated drift values (default: the 39 standard values).
    #[arg(long, value_delimiter = ',')]
    pub h_grid: Option<Vec<f64>>,
    /// Comma-separated quantile levels (default: .025,.05,.5,.95,.975).
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    /// Single-column CSV with header `y`.
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    /// Critical-value table CSV (default: bundled table).
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MueArgs {
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Scenario file (see the `config` module for keys).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the replication count of every cell.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Results CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Formatted text tables.
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Also validate this table file.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

/// Formats `x` with 6 significant digits, like C's `%g`.
pub fn fmt6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..6).contains(&exp) {
        trim(&format!("{:.*}", (5 - exp).max(0) as usize, x))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

/// Reads a single-column series CSV with header `y`.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let file = std::fs::File::open(path).map_err(|e| IcrError::io(path, e))?;
    let origin = path.display().to_string();
    parse_series(file, &origin)
}

pub fn parse_series<R: std::io::Read>(reader: R, origin: &str) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let perr = |line: u64, msg: String| IcrError::Parse { path: origin.to_string(), line, msg };
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| perr(1, "header must contain a column `y`".into()))?;
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            perr(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record.get(col).ok_or_else(|| perr(line, "missing `y` field".into()))?;
        let v: f64 = field.parse().map_err(|_| perr(line, format!("`{field}` is not a number")))?;
        if !v.is_finite() {
            return Err(perr(line, format!("non-finite value `{field}`")));
        }
        y.push(v);
    }
    if y.len() < MIN_SERIES_ROWS {
        return Err(IcrError::Domain(format!(
            "{origin}: series has {} observations, at least {MIN_SERIES_ROWS} are required",
            y.len()
        )));
    }
    TimeSeries::new(y)
}

fn load_table(path: Option<&Path>) -> Result<QuantileTable> {
    match path {
        Some(p) => QuantileTable::read_csv(p),
        None => Ok(QuantileTable::bundled()),
    }
}

fn exit_code(e: &IcrError) -> i32 {
    match e {
        IcrError::Io { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| IcrError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| IcrError::Argument(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(IcrError::Argument(format!("--alpha {alpha} must lie in (0, 1)")))
    }
}

fn check_grid_step(step: f64) -> Result<()> {
    if step > 0.0 && step < 1.0 {
        Ok(())
    } else {
        Err(IcrError::Argument(format!("--grid-step {step} must lie in (0, 1)")))
    }
}

fn sink(e: std::io::Error) -> IcrError {
    IcrError::io("<stdout>", e)
}

pub fn cmd_cv_table(args: &CvTableArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = PathGridConfig::new(args.n_steps, args.b_paths, args.seed)?;
    let h_grid = args.h_grid.clone().unwrap_or_else(|| DEFAULT_H_GRID.to_vec());
    let alpha_grid = args.alpha_grid.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let start = Instant::now();
    let table = build_table(&h_grid, &alpha_grid, &cfg)?;
    table.write_csv(&args.out)?;
    writeln!(
        out,
        "wrote {} ({} h x {} alpha): paths={} steps={} seed={} wall={:.1}s",
        args.out.display(),
        h_grid.len(),
        alpha_grid.len(),
        cfg.n_paths,
        cfg.n_steps,
        cfg.seed,
        start.elapsed().as_secs_f64()
    )
    .map_err(sink)
}

#[derive(Debug, Serialize)]
struct CiReport {
    n: usize,
    lower: Option<f64>,
    upper: Option<f64>,
    alpha: f64,
    grid_step: f64,
    empty: bool,
    disconnected: bool,
    estimator_errors: usize,
}

pub fn cmd_ci(args: &CiArgs, out: &mut dyn Write) -> Result<()> {
    check_alpha(args.alpha)?;
    check_grid_step(args.grid_step)?;
    let table = load_table(args.table.as_deref())?;
    let series = read_series(&args.series)?;
    let ci = invert_ci(&series, args.alpha, &table, args.grid_step)?;
    let finite = |x: f64| x.is_finite().then_some(x);
    let report = CiReport {
        n: series.n(),
        lower: finite(ci.lower),
        upper: finite(ci.upper),
        alpha: ci.alpha,
        grid_step: ci.grid_step,
        empty: ci.empty,
        disconnected: ci.disconnected,
        estimator_errors: ci.diagnostics.estimator_errors,
    };
    let mut text = String::new();
    let _ = writeln!(text, "lower        {}", fmt6(ci.lower));
    let _ = writeln!(text, "upper        {}", fmt6(ci.upper));
    let _ = writeln!(text, "alpha        {}", fmt6(ci.alpha));
    let _ = writeln!(text, "grid_step    {}", fmt6(ci.grid_step));
    let _ = writeln!(text, "empty        {}", ci.empty);
    let _ = writeln!(text, "disconnected {}", ci.disconnected);
    if ci.diagnostics.estimator_errors > 0 {
        let _ = writeln!(text, "estimator_errors {}", ci.diagnostics.estimator_errors);
    }
    out.write_all(text.as_bytes()).map_err(sink)?;
    if let Some(p) = &args.json {
        write_json(p, &report)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MueReport {
    n: usize,
    rho_low: f64,
    rho_up: f64,
    point_estimate: f64,
    is_point: bool,
    grid_step: f64,
}

pub fn cmd_mue(args: &MueArgs, out: &mut dyn Write) -> Result<()> {
    check_grid_step(args.grid_step)?;
    let table = load_table(args.table.as_deref())?;
    let series = read_series(&args.series)?;
    let m = mue(&series, &table, args.grid_step)?;
    let report = MueReport {
        n: series.n(),
        rho_low: m.rho_low,
        rho_up: m.rho_up,
        point_estimate: m.point_estimate(),
        is_point: m.is_point,
        grid_step: args.grid_step,
    };
    let mut text = String::new();
    let _ = writeln!(text, "rho_low   {}", fmt6(m.rho_low));
    let _ = writeln!(text, "rho_up    {}", fmt6(m.rho_up));
    let _ = writeln!(text, "estimate  {}", fmt6(m.point_estimate()));
    let _ = writeln!(text, "grid_step {}", fmt6(args.grid_step));
    out.write_all(text.as_bytes()).map_err(sink)?;
    if let Some(p) = &args.json {
        write_json(p, &report)?;
    }
    Ok(())
}

pub fn cmd_mc(args: &McArgs, out: &mut dyn Write) -> Result<()> {
    let mut specs = read_scenarios(&args.config)?;
    if let Some(r) = args.reps {
        for s in &mut specs {
            s.reps = r;
        }
    }
    for s in &specs {
        s.validate()?;
    }
    let table = load_table(args.table.as_deref())?;
    let results = run_grid(&specs, &table)?;
    for (i, (spec, m)) in results.cells.iter().enumerate() {
        let id = if spec.id.is_empty() { i.to_string() } else { spec.id.clone() };
        writeln!(
            out,
            "cell {id}: innov={} init={} rho={} reps={} cp={} al={} amb={} empty_ci={}",
            spec.innov.label(),
            spec.init.kind.label(),
            fmt6(spec.model.rho),
            m.reps,
            fmt6(m.cp),
            fmt6(m.avg_length),
            fmt6(m.abs_median_bias),
            m.empty_ci_count
        )
        .map_err(sink)?;
    }
    if let Some(p) = &args.out {
        write_file(p, &results.to_csv())?;
    }
    if let Some(p) = &args.text {
        write_file(p, &results.render_text())?;
    }
    Ok(())
}

/// Result of one named self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome { name, passed: worst <= tol, detail: format!("max deviation {worst:.3e} (tolerance {tol:.0e})") }
}

/// Relative difference on the scale of `T_n`, which is O(1) under the null.
/// Near `T_n = 0` the rounding of the shifted input alone exceeds any
/// purely relative tolerance, so the scale is floored at 1.
fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

const CHECK_SEED: u64 = 20_240_601;

/// `T_n(rho)` for the series from `u` under a level and initial-condition shift.
fn t_at(mu: f64, rho: f64, y0: f64, u: &[f64]) -> Result<f64> {
    let s = series_from_innovations(mu, rho, y0, u)?;
    Ok(icr_estimate(&s, rho)?.t)
}

fn check_initial_condition_invariance() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for (k, &rho) in [0.0, 0.5, 0.9, 1.0].iter().enumerate() {
        for rep in 0..25u64 {
            let mut rng = substream(CHECK_SEED, Domain::Innovations, 100 * k as u64 + rep);
            let u = draw_innovations(&InnovationSpec::Iid, 150, &mut rng)?;
            let base = t_at(0.0, rho, 0.0, &u)?;
            let shifts: &[(f64, f64)] =
                if rho == 1.0 { &[(7.0, 0.0), (-3.0, 0.0)] } else { &[(7.0, 250.0), (-3.0, 1e4)] };
            for &(mu, y0) in shifts {
                worst = worst.max(rel_diff(base, t_at(mu, rho, y0, &u)?));
            }
        }
    }
    Ok(outcome("initial-condition-invariance", worst, 1e-9))
}

fn check_scale_invariance() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for rep in 0..25u64 {
        let rho = [0.0, 0.5, 0.9, 1.0][rep as usize % 4];
        let mut rng = substream(CHECK_SEED, Domain::Innovations, 10_000 + rep);
        let u = draw_innovations(&InnovationSpec::GARCH1, 150, &mut rng)?;
        let u5: Vec<f64> = u.iter().map(|x| 5.0 * x).collect();
        let y0 = if rho < 1.0 { 3.0 } else { 0.0 };
        worst = worst.max(rel_diff(t_at(1.0, rho, y0, &u)?, t_at(1.0, rho, 5.0 * y0, &u5)?));
    }
    Ok(outcome("scale-invariance", worst, 1e-9))
}

fn check_ih_recursion() -> Result<CheckOutcome> {
    let n = 200;
    let mut rng = substream(CHECK_SEED, Domain::BrownianPath, 0);
    let dw: Vec<f64> = draw_innovations(&InnovationSpec::Iid, n, &mut rng)?
        .into_iter()
        .map(|z| z / (n as f64).sqrt())
        .collect();
    let mut worst = 0.0f64;
    for h in [0.5, 2.0, 10.0] {
        let path = simulate_ih_path(h, &dw)?;
        for (j, v) in path.iter().enumerate() {
            let brute: f64 = (0..=j).map(|k| (-h * (j - k) as f64 / n as f64).exp() * dw[k]).sum();
            worst = worst.max((v - brute).abs());
        }
    }
    Ok(outcome("ih-recursion-oracle", worst, 1e-12))
}

fn check_small_h_weights() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for k in 0..=1000 {
        let r = k as f64 / 1000.0;
        let (a, b) = alpha_beta(1e-3, r)?;
        worst = worst.max((a - (4.0 - 6.0 * r)).abs()).max((b - (12.0 * r - 6.0)).abs());
    }
    Ok(outcome("small-h-weight-limits", worst, 1e-2))
}

fn check_table(name: &'static str, loaded: Result<QuantileTable>) -> Result<CheckOutcome> {
    match loaded {
        Ok(t) => Ok(match t.validate() {
            Ok(()) => CheckOutcome { name, passed: true, detail: "quantile rows increasing".into() },
            Err(e) => CheckOutcome { name, passed: false, detail: e.to_string() },
        }),
        Err(IcrError::Domain(msg)) => Ok(CheckOutcome { name, passed: false, detail: msg }),
        Err(e) => Err(e),
    }
}

/// Runs every self-check. I/O and parse problems with `table` are errors;
/// a table that loads but violates monotonicity is a failed check.
pub fn run_checks(table: Option<&Path>) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = vec![
        check_initial_condition_invariance()?,
        check_scale_invariance()?,
        check_ih_recursion()?,
        check_small_h_weights()?,
        check_table("bundled-table-monotonicity", Ok(QuantileTable::bundled()))?,
    ];
    if let Some(p) = table {
        outcomes.push(check_table("table-monotonicity", QuantileTable::read_csv(p))?);
    }
    Ok(outcomes)
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<bool> {
    let outcomes = run_checks(args.table.as_deref())?;
    let mut text = String::new();
    for o in &outcomes {
        let _ = writeln!(text, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(text, "{} of {} checks passed", outcomes.len() - failed, outcomes.len());
    out.write_all(text.as_bytes()).map_err(sink)?;
    Ok(failed == 0)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::CvTable(a) => cmd_cv_table(a, out).map(|_| EXIT_OK),
        Command::Ci(a) => cmd_ci(a, out).map(|_| EXIT_OK),
        Command::Mue(a) => cmd_mue(a, out).map(|_| EXIT_OK),
        Command::Mc(a) => cmd_mc(a, out).map(|_| EXIT_OK),
        Command::Check(a) => cmd_check(a, out).map(|ok| if ok { EXIT_OK } else { EXIT_CHECK }),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        builder = builder.num_threads(t);
    }
    // Output is buffered inside the pool and flushed afterwards.
    let mut buf: Vec<u8> = Vec::new();
    let result = match builder.build() {
        Ok(pool) => pool.install(|| dispatch(&cli, &mut buf)),
        Err(e) => Err(IcrError::Argument(format!("thread pool: {e}"))),
    };
    if let Err(e) = out.write_all(&buf) {
        let _ = writeln!(err, "error: {}", sink(e));
        return EXIT_IO;
    }
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(0.123456789), "0.123457");
        assert_eq!(fmt6(-3.66), "-3.66");
        assert_eq!(fmt6(1.0), "1");
        assert_eq!(fmt6(123456789.0), "1.23457e8");
        assert_eq!(fmt6(1e-7), "1e-7");
        assert_eq!(fmt6(0.001), "0.001");
        assert_eq!(fmt6(f64::NAN), "NaN");
    }

    #[test]
    fn series_parsing() {
        let ok = parse_series("y\n1\n2\n3\n4\n5\n".as_bytes(), "mem").unwrap();
        assert_eq!(ok.y(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        match parse_series("y\n1\n2\nabc\n4\n5\n".as_bytes(), "mem") {
            Err(IcrError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_series("y\n1\n2\n3\n4\n".as_bytes(), "mem"), Err(IcrError::Domain(_))));
        assert!(matches!(parse_series("x\n1\n".as_bytes(), "mem"), Err(IcrError::Parse { line: 1, .. })));
    }

    #[test]
    fn checks_pass() {
        assert!(run_checks(None).unwrap().iter().all(|o| o.passed));
    }
}
