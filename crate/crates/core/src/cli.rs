//! The `bioequiv` command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or validation error,
//! 3 infeasible request. Reports carry no timestamps, so an identical
//! invocation produces identical bytes.

use crate::equivtest::{
    back_transform, ci_min_max, ci_two_sided, decide_by_ci, tost, BeLimits, Interval, TostOutcome,
};
use crate::error::{Error, Result};
use crate::pkdata::{parse_csv, summarize, GroupSummary};
use crate::power::{
    exact_power, power_curve, sample_size, write_power_curve_csv, PowerParams, SampleSizeRequest,
};
use crate::report::{fmt_sig17, to_json_string};
use crate::simharness::{
    estimate_coverage_with, estimate_rejection_rate_with, CiMethod, Procedure, Scenario, SimReport,
    DEFAULT_REPLICATIONS,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "bioequiv", version, about = "Average bioequivalence: TOST analysis, power, sample size, simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze a `subject_id,arm,value` CSV of a parallel two-group study.
    Analyze(AnalyzeArgs),
    /// Exact TOST power, or a power curve over GMR values.
    Power(PowerArgs),
    /// Smallest group sizes reaching a target power.
    Samplesize(SampleSizeArgs),
    /// Monte Carlo size, power or coverage of a procedure.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct LimitArgs {
    /// Significance level of each one-sided test.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Equivalence limits on the ratio scale, LO,HI.
    #[arg(long, default_value = "0.8,1.25", allow_hyphen_values = true)]
    limits: String,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: LimitArgs,
    /// equal | minmax | unequal:A1,A2
    #[arg(long, default_value = "equal")]
    ci_method: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PowerArgs {
    /// True geometric mean ratio T/R.
    #[arg(long)]
    gmr: f64,
    /// Log-scale within-group SD.
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    n_t: usize,
    #[arg(long)]
    n_r: usize,
    #[command(flatten)]
    common: LimitArgs,
    /// Comma-separated GMR grid; emits `mu_diff,power` CSV.
    #[arg(long)]
    curve: Option<String>,
}

#[derive(Debug, Args)]
struct SampleSizeArgs {
    #[arg(long)]
    target_power: f64,
    #[arg(long)]
    gmr: f64,
    #[arg(long)]
    sigma: f64,
    #[command(flatten)]
    common: LimitArgs,
    /// Allocation ratio n_T / n_R.
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
    /// Largest per-group size searched.
    #[arg(long, default_value_t = SampleSizeRequest::DEFAULT_MAX_N)]
    max_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Size,
    Power,
    Coverage,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// tost | ci_equal | ci_minmax | ci_unequal:A1,A2 | ump_known_sigma |
    /// kv_tost | one_sided_lower | one_sided_upper
    #[arg(long)]
    procedure: String,
    #[arg(long, allow_hyphen_values = true)]
    mu_t: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu_r: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    n_t: usize,
    #[arg(long)]
    n_r: usize,
    #[command(flatten)]
    common: LimitArgs,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Power)]
    mode: Mode,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `LO,HI` ratio-scale limits with 0 < LO < 1 < HI.
pub fn parse_limits(text: &str) -> Result<BeLimits> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("expected --limits LO,HI (got `{text}`)")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid limit `{}`", s.trim())))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    let limits = BeLimits::from_ratio(lo, hi)?;
    if !(lo < 1.0 && 1.0 < hi) {
        return Err(Error::Config(format!("limits must satisfy 0 < LO < 1 < HI (got {lo}, {hi})")));
    }
    Ok(limits)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, 0.5) (got {alpha})")))
    }
}

fn log_gmr(gmr: f64) -> Result<f64> {
    if gmr > 0.0 && gmr.is_finite() {
        Ok(gmr.ln())
    } else {
        Err(Error::Config(format!("GMR must be positive (got {gmr})")))
    }
}

#[derive(Debug, Serialize)]
struct LimitsReport {
    ratio_lower: f64,
    ratio_upper: f64,
    log_lower: f64,
    log_upper: f64,
}

impl LimitsReport {
    fn new(limits: &BeLimits) -> Self {
        LimitsReport {
            ratio_lower: limits.delta_lower(),
            ratio_upper: limits.delta_upper(),
            log_lower: limits.theta_lower,
            log_upper: limits.theta_upper,
        }
    }
}

#[derive(Debug, Serialize)]
struct IntervalReport {
    method: String,
    /// Nominal confidence level of the interval.
    confidence: f64,
    log: Interval,
    ratio: Interval,
    /// Strictly inside the limits.
    within_limits: bool,
}

#[derive(Debug, Serialize)]
struct AnalysisReport {
    toolkit_version: &'static str,
    input_sha256: String,
    alpha: f64,
    limits: LimitsReport,
    summary: GroupSummary,
    gmr: f64,
    ci_method: String,
    ci_log: Interval,
    ci_ratio: Interval,
    intervals: Vec<IntervalReport>,
    tost: TostOutcome,
    decision: &'static str,
    warnings: Vec<String>,
}

fn interval_report(
    method: CiMethod,
    summary: &GroupSummary,
    limits: &BeLimits,
) -> Result<IntervalReport> {
    let (log, confidence) = match method {
        CiMethod::Equal(a) => (ci_two_sided(summary, a, a)?, 1.0 - 2.0 * a),
        CiMethod::Unequal(a1, a2) => (ci_two_sided(summary, a1, a2)?, 1.0 - a1 - a2),
        CiMethod::MinMax(a) => (ci_min_max(summary, a)?, 1.0 - a),
    };
    let name = match method {
        CiMethod::Equal(_) => "equal".to_string(),
        CiMethod::MinMax(_) => "minmax".to_string(),
        CiMethod::Unequal(a1, a2) => format!("unequal:{a1},{a2}"),
    };
    Ok(IntervalReport {
        method: name,
        confidence,
        log,
        ratio: back_transform(&log),
        within_limits: decide_by_ci(&log, limits),
    })
}

fn write_or_print(text: &str, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    to_json_string(value).map_err(|e| Error::Io(format!("JSON serialization failed: {e}")))
}

fn run_analyze(args: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let alpha = args.common.alpha;
    check_alpha(alpha)?;
    let limits = parse_limits(&args.common.limits)?;
    let method = CiMethod::parse(&args.ci_method, alpha)?;

    let bytes = std::fs::read(&args.input)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", args.input.display())))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let dataset = parse_csv(bytes.as_slice())?;
    let summary = summarize(&dataset)?;
    let outcome = tost(&summary, &limits, alpha)?;

    let mut warnings: Vec<String> = limits.asymmetry_warning().into_iter().collect();
    if outcome.degenerate {
        warnings.push("standard error is zero; the decision uses the limiting rule".into());
    }
    let mut methods = vec![CiMethod::Equal(alpha), CiMethod::MinMax(alpha)];
    if let CiMethod::Unequal(a1, a2) = method {
        methods.push(method);
        warnings.push(format!(
            "unequal-tailed interval ({a1}, {a2}) is reported only; the decision follows TOST at alpha = {alpha}"
        ));
    }
    let intervals = methods
        .iter()
        .map(|&m| interval_report(m, &summary, &limits))
        .collect::<Result<Vec<_>>>()?;
    let selected = intervals
        .iter()
        .position(|r| match method {
            CiMethod::Equal(_) => r.method == "equal",
            CiMethod::MinMax(_) => r.method == "minmax",
            CiMethod::Unequal(..) => r.method.starts_with("unequal"),
        })
        .expect("selected method is always reported");

    let report = AnalysisReport {
        toolkit_version: TOOLKIT_VERSION,
        input_sha256: digest,
        alpha,
        limits: LimitsReport::new(&limits),
        summary,
        gmr: summary.gmr(),
        ci_method: intervals[selected].method.clone(),
        ci_log: intervals[selected].log,
        ci_ratio: intervals[selected].ratio,
        intervals,
        tost: outcome,
        decision: if outcome.reject { "bioequivalent" } else { "not bioequivalent" },
        warnings,
    };
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    write_or_print(&json(&report)?, args.output.as_ref(), out)
}

fn run_power(args: &PowerArgs, out: &mut dyn Write) -> Result<()> {
    check_alpha(args.common.alpha)?;
    let params = PowerParams {
        mu_diff: log_gmr(args.gmr)?,
        n_t: args.n_t,
        n_r: args.n_r,
        sigma: args.sigma,
        alpha: args.common.alpha,
        limits: parse_limits(&args.common.limits)?,
    };
    params.validate()?;
    match &args.curve {
        None => {
            writeln!(out, "{}", fmt_sig17(exact_power(&params)?))?;
            Ok(())
        }
        Some(grid) => {
            let mus = grid
                .split(',')
                .map(|g| {
                    let g: f64 = g
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid GMR `{}` in --curve", g.trim())))?;
                    log_gmr(g)
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = power_curve(&params, &mus)?;
            write_power_curve_csv(&rows, out)
        }
    }
}

#[derive(Debug, Serialize)]
struct SampleSizeReport {
    toolkit_version: &'static str,
    target_power: f64,
    gmr: f64,
    sigma: f64,
    alpha: f64,
    limits: LimitsReport,
    ratio: f64,
    n_t: usize,
    n_r: usize,
    achieved_power: f64,
}

fn run_samplesize(args: &SampleSizeArgs, out: &mut dyn Write) -> Result<()> {
    check_alpha(args.common.alpha)?;
    let limits = parse_limits(&args.common.limits)?;
    if !(args.sigma > 0.0) || !args.sigma.is_finite() {
        return Err(Error::Config(format!("sigma must be positive (got {})", args.sigma)));
    }
    let mut req = SampleSizeRequest::new(
        args.target_power,
        log_gmr(args.gmr)?,
        args.sigma,
        args.common.alpha,
        limits,
    );
    req.allocation = args.ratio;
    req.max_n = args.max_n;
    let found = sample_size(&req)?;
    let report = SampleSizeReport {
        toolkit_version: TOOLKIT_VERSION,
        target_power: args.target_power,
        gmr: args.gmr,
        sigma: args.sigma,
        alpha: args.common.alpha,
        limits: LimitsReport::new(&limits),
        ratio: args.ratio,
        n_t: found.n_t,
        n_r: found.n_r,
        achieved_power: found.achieved_power,
    };
    out.write_all(json(&report)?.as_bytes())?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimulationOutput {
    toolkit_version: &'static str,
    mode: Mode,
    scenario: Scenario,
    #[serde(flatten)]
    report: SimReport,
}

// Interval whose coverage a coverage-mode run measures.
fn coverage_method(procedure: Procedure, alpha: f64) -> Result<CiMethod> {
    match procedure {
        Procedure::Tost | Procedure::CiEqual => Ok(CiMethod::Equal(alpha)),
        Procedure::CiMinMax => Ok(CiMethod::MinMax(alpha)),
        Procedure::CiUnequal { alpha1, alpha2 } => Ok(CiMethod::Unequal(alpha1, alpha2)),
        other => Err(Error::Config(format!("procedure `{other}` has no interval; coverage mode needs a ci_* procedure"))),
    }
}

fn run_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let procedure: Procedure = args.procedure.parse()?;
    if args.reps == 0 {
        return Err(Error::Config("--reps must be at least 1".into()));
    }
    let scenario = Scenario {
        mu_t: args.mu_t,
        mu_r: args.mu_r,
        sigma: args.sigma,
        n_t: args.n_t,
        n_r: args.n_r,
        alpha: args.common.alpha,
        limits: parse_limits(&args.common.limits)?,
    };
    let report = match args.mode {
        Mode::Size | Mode::Power => {
            estimate_rejection_rate_with(procedure, &scenario, args.reps, args.seed, args.workers)?
        }
        Mode::Coverage => {
            let method = coverage_method(procedure, scenario.alpha)?;
            let mut r = estimate_coverage_with(method, &scenario, args.reps, args.seed, args.workers)?;
            r.procedure = procedure.to_string();
            r
        }
    };
    let output = SimulationOutput {
        toolkit_version: TOOLKIT_VERSION,
        mode: args.mode,
        scenario,
        report,
    };
    write_or_print(&json(&output)?, args.output.as_ref(), out)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a, out, err),
        Command::Power(a) => run_power(a, out),
        Command::Samplesize(a) => run_samplesize(a, out),
        Command::Simulate(a) => run_simulate(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_with_std() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = run(std::env::args_os(), &mut out, &mut stderr.lock());
    if out.flush().is_err() && code == 0 {
        return 2;
    }
    code
}
