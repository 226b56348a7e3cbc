//! Seeded Monte Carlo estimates of size, power and coverage.
//!
//! Replication `i` draws from its own ChaCha8 stream: the generator is seeded
//! with the run seed and switched to stream `i`. Results therefore depend only
//! on `(seed, scenario, replications)`, never on the number of worker threads
//! or on scheduling; hit counts are integer sums and floating-point reductions
//! run sequentially in replication order.

use crate::equivtest::{
    decide_by_ci, interval_with_critical, tost_decision, widen_to_zero, BeLimits, Interval,
};
use crate::error::{Error, Result};
use crate::optimal::{decide_with_psi, kv_window, ump_psi};
use crate::pkdata::{gm_expectation, GroupSummary};
use crate::specialfn::{std_normal_quantile, student_t_quantile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_REPLICATIONS: u64 = 200_000;

/// True log-scale parameters of a parallel two-group study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub mu_t: f64,
    pub mu_r: f64,
    pub sigma: f64,
    pub n_t: usize,
    pub n_r: usize,
    pub alpha: f64,
    pub limits: BeLimits,
}

impl Scenario {
    /// μ_T − μ_R = `mu_diff` with μ_R = 0.
    pub fn with_difference(mu_diff: f64, sigma: f64, n_t: usize, n_r: usize, alpha: f64) -> Self {
        Scenario {
            mu_t: mu_diff,
            mu_r: 0.0,
            sigma,
            n_t,
            n_r,
            alpha,
            limits: BeLimits::default(),
        }
    }

    /// Upper-boundary configuration with small σ (0.05, n = 24/24), where the
    /// lower one-sided test rejects with probability indistinguishable from 1.
    pub fn boundary(alpha: f64) -> Self {
        let limits = BeLimits::default();
        Scenario::with_difference(limits.theta_upper, 0.05, 24, 24, alpha)
    }

    pub fn mu_diff(&self) -> f64 {
        self.mu_t - self.mu_r
    }

    /// σ·√(1/n_T + 1/n_R), the SD of Δx̄.
    pub fn sd_diff(&self) -> f64 {
        self.sigma * (1.0 / self.n_t as f64 + 1.0 / self.n_r as f64).sqrt()
    }

    pub fn df(&self) -> f64 {
        (self.n_t + self.n_r - 2) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("scenario sigma must be positive (got {})", self.sigma)));
        }
        if self.n_t < 2 || self.n_r < 2 {
            return Err(Error::Config(format!(
                "scenario needs n_T, n_R >= 2 (got {}, {})",
                self.n_t, self.n_r
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!("alpha must lie in (0, 0.5) (got {})", self.alpha)));
        }
        if !self.mu_t.is_finite() || !self.mu_r.is_finite() {
            return Err(Error::Config("scenario means must be finite".into()));
        }
        Ok(())
    }
}

/// Decision procedures whose rejection rate can be estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Procedure {
    Tost,
    /// 100(1−2α)% equal-tailed interval inside the limits.
    CiEqual,
    /// 100(1−α)% min/max interval inside the limits.
    CiMinMax,
    CiUnequal { alpha1: f64, alpha2: f64 },
    /// UMP test on Δx̄ treating σ as known.
    UmpKnownSigma,
    /// TOST with normal critical values and σ known.
    KvTost,
    /// Only H01: μΔ ≤ θ_L.
    OneSidedLower,
    /// Only H02: μΔ ≥ θ_U.
    OneSidedUpper,
}

fn parse_alpha_pair(text: &str) -> Option<(f64, f64)> {
    let (a, b) = text.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

impl FromStr for Procedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("ci_unequal:") {
            let (alpha1, alpha2) = parse_alpha_pair(rest).ok_or_else(|| {
                Error::Config(format!("expected ci_unequal:ALPHA1,ALPHA2 (got `{s}`)"))
            })?;
            return Ok(Procedure::CiUnequal { alpha1, alpha2 });
        }
        Ok(match s {
            "tost" => Procedure::Tost,
            "ci_equal" => Procedure::CiEqual,
            "ci_minmax" => Procedure::CiMinMax,
            "ump_known_sigma" => Procedure::UmpKnownSigma,
            "kv_tost" => Procedure::KvTost,
            "one_sided_lower" => Procedure::OneSidedLower,
            "one_sided_upper" => Procedure::OneSidedUpper,
            other => return Err(Error::Config(format!("unknown procedure `{other}`"))),
        })
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Procedure::Tost => f.write_str("tost"),
            Procedure::CiEqual => f.write_str("ci_equal"),
            Procedure::CiMinMax => f.write_str("ci_minmax"),
            Procedure::CiUnequal { alpha1, alpha2 } => write!(f, "ci_unequal:{alpha1},{alpha2}"),
            Procedure::UmpKnownSigma => f.write_str("ump_known_sigma"),
            Procedure::KvTost => f.write_str("kv_tost"),
            Procedure::OneSidedLower => f.write_str("one_sided_lower"),
            Procedure::OneSidedUpper => f.write_str("one_sided_upper"),
        }
    }
}

/// Interval constructions for coverage runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CiMethod {
    Equal(f64),
    Unequal(f64, f64),
    MinMax(f64),
}

impl CiMethod {
    /// Parses `equal`, `minmax` or `unequal:A1,A2`; `alpha` fills the first two.
    pub fn parse(text: &str, alpha: f64) -> Result<Self> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix("unequal:") {
            let (a1, a2) = parse_alpha_pair(rest).ok_or_else(|| {
                Error::Config(format!("expected unequal:ALPHA1,ALPHA2 (got `{text}`)"))
            })?;
            return Ok(CiMethod::Unequal(a1, a2));
        }
        match text {
            "equal" => Ok(CiMethod::Equal(alpha)),
            "minmax" => Ok(CiMethod::MinMax(alpha)),
            other => Err(Error::Config(format!("unknown CI method `{other}`"))),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = |a: f64| a > 0.0 && a < 0.5;
        let valid = match *self {
            CiMethod::Equal(a) | CiMethod::MinMax(a) => ok(a),
            CiMethod::Unequal(a1, a2) => ok(a1) && ok(a2),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Config(format!("CI alphas must lie in (0, 0.5): {self}")))
        }
    }
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CiMethod::Equal(a) => write!(f, "equal({a})"),
            CiMethod::Unequal(a1, a2) => write!(f, "unequal({a1},{a2})"),
            CiMethod::MinMax(a) => write!(f, "minmax({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub procedure: String,
    pub replications: u64,
    pub hits: u64,
    pub rate: f64,
    /// Binomial standard error √(rate(1 − rate)/replications).
    pub std_error: f64,
    pub seed: u64,
}

impl SimReport {
    fn new(procedure: String, replications: u64, hits: u64, seed: u64) -> Self {
        let rate = hits as f64 / replications as f64;
        SimReport {
            procedure,
            replications,
            hits,
            rate,
            std_error: (rate * (1.0 - rate) / replications as f64).sqrt(),
            seed,
        }
    }
}

/// The generator for replication `index` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

// Welford mean and sample SD of `n` draws from N(mu, sigma²).
fn draw_moments<R: Rng + ?Sized>(rng: &mut R, n: usize, mu: f64, sigma: f64) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..n {
        let x = mu + sigma * normal_sample(rng);
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let sd = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    (mean, sd)
}

/// Draws one dataset of log-scale observations and returns its summary.
pub fn simulate_dataset<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> GroupSummary {
    let (xbar_t, s_t) = draw_moments(rng, scenario.n_t, scenario.mu_t, scenario.sigma);
    let (xbar_r, s_r) = draw_moments(rng, scenario.n_r, scenario.mu_r, scenario.sigma);
    GroupSummary::from_moments(scenario.n_t, scenario.n_r, xbar_t, xbar_r, s_t, s_r)
        .expect("scenario group sizes validated")
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Error::Config("worker count must be at least 1".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(format!("could not build thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn count_hits<F>(replications: u64, seed: u64, workers: Option<usize>, hit: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    with_workers(workers, || {
        (0..replications)
            .into_par_iter()
            .filter(|&i| hit(&mut replication_rng(seed, i)))
            .count() as u64
    })
}

fn check_replications(replications: u64) -> Result<()> {
    if replications == 0 {
        Err(Error::Config("replications must be at least 1".into()))
    } else {
        Ok(())
    }
}

// Per-replication decision with constants hoisted out of the loop.
enum Decider {
    Tost { critical: f64 },
    Interval { lo_crit: f64, hi_crit: f64, min_max: bool },
    Ump { center: f64, psi: f64 },
    Window { lo: f64, hi: f64 },
    Lower { critical: f64 },
    Upper { critical: f64 },
}

impl Decider {
    fn build(procedure: Procedure, scenario: &Scenario) -> Result<Self> {
        let df = scenario.df();
        let alpha = scenario.alpha;
        let crit = |a: f64| student_t_quantile(1.0 - a, df);
        Ok(match procedure {
            Procedure::Tost => Decider::Tost { critical: crit(alpha)? },
            Procedure::CiEqual => {
                let c = crit(alpha)?;
                Decider::Interval { lo_crit: c, hi_crit: c, min_max: false }
            }
            Procedure::CiMinMax => {
                let c = crit(alpha)?;
                Decider::Interval { lo_crit: c, hi_crit: c, min_max: true }
            }
            Procedure::CiUnequal { alpha1, alpha2 } => {
                CiMethod::Unequal(alpha1, alpha2).check()?;
                Decider::Interval { lo_crit: crit(alpha1)?, hi_crit: crit(alpha2)?, min_max: false }
            }
            Procedure::UmpKnownSigma => {
                let limits = scenario.limits;
                Decider::Ump {
                    center: limits.center(),
                    psi: ump_psi(alpha, limits.half_width(), scenario.sd_diff())?,
                }
            }
            Procedure::KvTost => {
                let z = std_normal_quantile(1.0 - alpha)?;
                let (lo, hi) = kv_window(&scenario.limits, z, scenario.sd_diff());
                Decider::Window { lo, hi }
            }
            Procedure::OneSidedLower => Decider::Lower { critical: crit(alpha)? },
            Procedure::OneSidedUpper => Decider::Upper { critical: crit(alpha)? },
        })
    }

    fn reject(&self, s: &GroupSummary, limits: &BeLimits) -> bool {
        match *self {
            Decider::Tost { critical } => tost_decision(s, limits, critical),
            Decider::Interval { lo_crit, hi_crit, min_max } => {
                let raw = interval_with_critical(s, lo_crit, hi_crit);
                let ci = if min_max { widen_to_zero(&raw) } else { raw };
                decide_by_ci(&ci, limits)
            }
            Decider::Ump { center, psi } => decide_with_psi(s.mean_diff() - center, 1, psi),
            Decider::Window { lo, hi } => lo < s.mean_diff() && s.mean_diff() < hi,
            Decider::Lower { critical } => {
                if s.se_diff == 0.0 {
                    s.mean_diff() > limits.theta_lower
                } else {
                    (s.mean_diff() - limits.theta_lower) / s.se_diff > critical
                }
            }
            Decider::Upper { critical } => {
                if s.se_diff == 0.0 {
                    s.mean_diff() < limits.theta_upper
                } else {
                    (s.mean_diff() - limits.theta_upper) / s.se_diff < -critical
                }
            }
        }
    }
}

/// Fraction of simulated datasets on which `procedure` rejects H0.
pub fn estimate_rejection_rate(
    procedure: Procedure,
    scenario: &Scenario,
    replications: u64,
    seed: u64,
) -> Result<SimReport> {
    estimate_rejection_rate_with(procedure, scenario, replications, seed, None)
}

/// As [`estimate_rejection_rate`], on a dedicated pool of `workers` threads.
pub fn estimate_rejection_rate_with(
    procedure: Procedure,
    scenario: &Scenario,
    replications: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<SimReport> {
    scenario.validate()?;
    check_replications(replications)?;
    let decider = Decider::build(procedure, scenario)?;
    let limits = scenario.limits;
    let hits = count_hits(replications, seed, workers, |rng| {
        let s = simulate_dataset(scenario, rng);
        decider.reject(&s, &limits)
    })?;
    Ok(SimReport::new(procedure.to_string(), replications, hits, seed))
}

/// Fraction of simulated intervals containing the true μ_T − μ_R.
pub fn estimate_coverage(
    method: CiMethod,
    scenario: &Scenario,
    replications: u64,
    seed: u64,
) -> Result<SimReport> {
    estimate_coverage_with(method, scenario, replications, seed, None)
}

pub fn estimate_coverage_with(
    method: CiMethod,
    scenario: &Scenario,
    replications: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<SimReport> {
    scenario.validate()?;
    check_replications(replications)?;
    method.check()?;
    let df = scenario.df();
    let crit = |a: f64| student_t_quantile(1.0 - a, df);
    let (lo_crit, hi_crit, min_max) = match method {
        CiMethod::Equal(a) => (crit(a)?, crit(a)?, false),
        CiMethod::MinMax(a) => (crit(a)?, crit(a)?, true),
        CiMethod::Unequal(a1, a2) => (crit(a1)?, crit(a2)?, false),
    };
    let truth = scenario.mu_diff();
    let hits = count_hits(replications, seed, workers, |rng| {
        let s = simulate_dataset(scenario, rng);
        let raw = interval_with_critical(&s, lo_crit, hi_crit);
        let ci: Interval = if min_max { widen_to_zero(&raw) } else { raw };
        ci.contains(truth)
    })?;
    Ok(SimReport::new(format!("coverage:{method}"), replications, hits, seed))
}

// Mean as x0 + Σ(xᵢ − x0)/N: exact when all values coincide.
fn shifted_mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let x0 = values[0];
    let shift: f64 = values.iter().map(|x| x - x0).sum::<f64>() / n;
    let mean = x0 + shift;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GmBiasReport {
    pub empirical_mean: f64,
    pub predicted: f64,
    /// Standard error of `empirical_mean`.
    pub std_error: f64,
    pub replications: u64,
    pub seed: u64,
}

/// Average geometric mean of `n` lognormal(μ, σ²) draws against exp(μ + σ²/(2n)).
pub fn gm_bias_check(mu: f64, sigma: f64, n: u64, replications: u64, seed: u64) -> Result<GmBiasReport> {
    check_replications(replications)?;
    let predicted = gm_expectation(mu, sigma, n)?;
    let values: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(seed, i);
            let mut sum_log = 0.0;
            for _ in 0..n {
                sum_log += mu + sigma * normal_sample(&mut rng);
            }
            if sigma == 0.0 {
                mu.exp()
            } else {
                (sum_log / n as f64).exp()
            }
        })
        .collect();
    let (mean, sd) = shifted_mean_sd(&values);
    Ok(GmBiasReport {
        empirical_mean: mean,
        predicted,
        std_error: sd / (replications as f64).sqrt(),
        replications,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedianCheck {
    pub empirical_median: f64,
    pub predicted: f64,
    /// Asymptotic SE of the sample median, e^μ·σ·√(π/2)/√N.
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Sample median of `samples` lognormal(μ, σ²) draws against exp(μ).
pub fn lognormal_median_check(mu: f64, sigma: f64, samples: u64, seed: u64) -> Result<MedianCheck> {
    const BLOCK: u64 = 1024;
    check_replications(samples)?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Config(format!("sigma must be >= 0 (got {sigma})")));
    }
    let blocks = samples.div_ceil(BLOCK);
    let mut values: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = replication_rng(seed, b);
            let len = BLOCK.min(samples - b * BLOCK);
            (0..len)
                .map(|_| (mu + sigma * normal_sample(&mut rng)).exp())
                .collect::<Vec<_>>()
        })
        .collect();
    let len = values.len();
    let mid = len / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let median = if len % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    let predicted = mu.exp();
    Ok(MedianCheck {
        empirical_median: median,
        predicted,
        std_error: predicted * sigma * (std::f64::consts::PI / 2.0).sqrt() / (samples as f64).sqrt(),
        samples,
        seed,
    })
}
