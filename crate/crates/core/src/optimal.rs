//! Optimal equivalence tests with a known scale.
//!
//! For X₁…Xₙ iid N(μ, σ²) with σ known, the UMP level-α test of
//! `|μ| ≥ θ` against `|μ| < θ` rejects when `√n·|X̄| ≤ ψ(α, √n·θ, σ)`, where ψ
//! solves `Φ((ψ − θ)/σ) − Φ((−ψ − θ)/σ) = α`. [`two_cutoff_solver`] handles
//! the general continuous one-parameter family with monotone likelihood ratio.

use crate::equivtest::BeLimits;
use crate::error::{Error, Result};
use crate::specialfn::{normal_interval_prob, std_normal_quantile};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UmpSpec {
    pub alpha: f64,
    /// Equivalence half-width: the alternative is |μ| < θ.
    pub theta: f64,
    /// Known standard deviation of a single observation.
    pub sigma: f64,
    pub n: u64,
}

impl UmpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1) (got {})", self.alpha)));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::domain(format!("theta must be positive (got {})", self.theta)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain(format!("sigma must be positive (got {})", self.sigma)));
        }
        if self.n < 1 {
            return Err(Error::domain("n must be at least 1"));
        }
        Ok(())
    }

    /// ψ(α, √n·θ, σ).
    pub fn psi(&self) -> Result<f64> {
        self.validate()?;
        ump_psi(self.alpha, (self.n as f64).sqrt() * self.theta, self.sigma)
    }
}

// P(−ψ < N(θ, σ²) < ψ), i.e. Φ((ψ−θ)/σ) − Φ((−ψ−θ)/σ)
fn band_prob(psi: f64, theta: f64, sigma: f64) -> f64 {
    normal_interval_prob((-psi - theta) / sigma, (psi - theta) / sigma)
}

/// The unique root ψ ≥ 0 of `Φ((ψ − θ)/σ) − Φ((−ψ − θ)/σ) = α`.
pub fn ump_psi(alpha: f64, theta: f64, sigma: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1) (got {alpha})")));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be >= 0 (got {theta})")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be positive (got {sigma})")));
    }
    let mut lo = 0.0;
    let mut hi = sigma * std_normal_quantile(0.5 * (1.0 + alpha))? + theta + 10.0 * sigma;
    while band_prob(hi, theta, sigma) < alpha {
        hi *= 2.0;
    }
    // bisect to machine resolution
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if band_prob(mid, theta, sigma) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lo_res = (band_prob(lo, theta, sigma) - alpha).abs();
    let hi_res = (band_prob(hi, theta, sigma) - alpha).abs();
    Ok(if lo_res <= hi_res { lo } else { hi })
}

/// Reject H0 (declare equivalence) iff `√n·|x̄| ≤ ψ(α, √n·θ, σ)`.
pub fn ump_decide(xbar: f64, spec: &UmpSpec) -> Result<bool> {
    let psi = spec.psi()?;
    Ok(decide_with_psi(xbar, spec.n, psi))
}

#[inline]
pub(crate) fn decide_with_psi(xbar: f64, n: u64, psi: f64) -> bool {
    (n as f64).sqrt() * xbar.abs() <= psi
}

/// `P(√n·|X̄| ≤ ψ)` when the true mean is `mu`.
pub fn ump_exact_power(mu: f64, spec: &UmpSpec) -> Result<f64> {
    let psi = spec.psi()?;
    let shift = (spec.n as f64).sqrt() * mu;
    // symmetric in mu: evaluate at |shift|
    Ok(band_prob(psi, shift.abs(), spec.sigma))
}

/// TOST power when σ is known: `P(θ_L + z·σΔ < X̄Δ < θ_U − z·σΔ)`,
/// `σΔ = σ·√(1/n_T + 1/n_R)`, `z = z_{1−α}`.
pub fn kv_tost_power(
    mu_diff: f64,
    n_t: usize,
    n_r: usize,
    sigma: f64,
    alpha: f64,
    limits: &BeLimits,
) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be positive (got {sigma})")));
    }
    if n_t < 1 || n_r < 1 {
        return Err(Error::domain("group sizes must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::domain(format!("alpha must lie in (0, 0.5) (got {alpha})")));
    }
    let sd = sigma * (1.0 / n_t as f64 + 1.0 / n_r as f64).sqrt();
    let z = std_normal_quantile(1.0 - alpha)?;
    let (lo, hi) = kv_window(limits, z, sd);
    if hi <= lo {
        return Ok(0.0);
    }
    Ok(normal_interval_prob((lo - mu_diff) / sd, (hi - mu_diff) / sd))
}

/// Acceptance window of the known-variance TOST.
pub(crate) fn kv_window(limits: &BeLimits, z: f64, sd: f64) -> (f64, f64) {
    (limits.theta_lower + z * sd, limits.theta_upper - z * sd)
}

/// Cutoffs of the two-sided UMP region `c1 < Y < c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoffs {
    pub lower: f64,
    pub upper: f64,
    /// P_{θ1}(c1 < Y < c2) − α
    pub residual_theta1: f64,
    /// P_{θ2}(c1 < Y < c2) − α
    pub residual_theta2: f64,
}

const CUTOFF_TOLERANCE: f64 = 1e-8;

// Smallest-bracket x with cdf(x) = p, by expansion then bisection.
fn family_quantile<F: Fn(f64, f64) -> f64>(cdf: &F, theta: f64, p: f64) -> Result<f64> {
    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut steps = 0;
    while cdf(lo, theta) > p {
        lo *= 2.0;
        steps += 1;
        if steps > 1100 {
            return Err(Error::Numerical {
                message: format!("could not bracket the {p} quantile from below"),
                achieved: cdf(lo, theta) - p,
            });
        }
    }
    steps = 0;
    while cdf(hi, theta) < p {
        hi *= 2.0;
        steps += 1;
        if steps > 1100 {
            return Err(Error::Numerical {
                message: format!("could not bracket the {p} quantile from above"),
                achieved: p - cdf(hi, theta),
            });
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if cdf(mid, theta) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `P_{θ1}(c1 < Y < c2) = P_{θ2}(c1 < Y < c2) = α` for a continuous
/// statistic `Y` whose distribution `sampling_cdf(y, θ)` is stochastically
/// increasing in θ.
///
/// The search runs over `u = P_{θa}(Y ≤ c1) ∈ (0, 1 − α)` for an anchor
/// parameter θa; the cutoffs are the θa-quantiles at `u` and `u + α`, so the
/// anchor equation holds by construction and the other one is bisected. Both
/// anchors are tried: when the hypotheses are far apart one cutoff sits deep
/// in a tail of one distribution, where its quantile cannot be resolved from
/// a cdf near 1, and only one of the two parametrizations keeps precision.
pub fn two_cutoff_solver<F>(alpha: f64, theta1: f64, theta2: f64, sampling_cdf: F) -> Result<Cutoffs>
where
    F: Fn(f64, f64) -> f64,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1) (got {alpha})")));
    }
    if !(theta1 < theta2) {
        return Err(Error::domain(format!("need theta1 < theta2 (got {theta1}, {theta2})")));
    }
    let cdf = &sampling_cdf;
    let band = |c1: f64, c2: f64, theta: f64| -> f64 {
        let upper = if c2.is_finite() { cdf(c2, theta) } else { 1.0 };
        let lower = if c1.is_finite() { cdf(c1, theta) } else { 0.0 };
        upper - lower
    };
    let cutoffs = |c1: f64, c2: f64| Cutoffs {
        lower: c1,
        upper: c2,
        residual_theta1: band(c1, c2, theta1) - alpha,
        residual_theta2: band(c1, c2, theta2) - alpha,
    };
    let worst = |c: &Cutoffs| c.residual_theta1.abs().max(c.residual_theta2.abs());

    let first = anchored_cutoffs(alpha, theta1, theta2, cdf).map(|(c1, c2)| cutoffs(c1, c2));
    if let Ok(c) = &first {
        if worst(c) < CUTOFF_TOLERANCE {
            return first;
        }
    }
    let second = anchored_cutoffs(alpha, theta2, theta1, cdf).map(|(c1, c2)| cutoffs(c1, c2));
    let best = match (first, second) {
        (Ok(a), Ok(b)) => {
            if worst(&a) <= worst(&b) {
                a
            } else {
                b
            }
        }
        (Ok(a), Err(_)) | (Err(_), Ok(a)) => a,
        (Err(e), Err(_)) => return Err(e),
    };
    if !(worst(&best) < CUTOFF_TOLERANCE) {
        return Err(Error::Numerical {
            message: format!("two-cutoff system not solved to {CUTOFF_TOLERANCE:e}"),
            achieved: worst(&best),
        });
    }
    Ok(best)
}

// (c1, c2) with P_anchor(c1 < Y < c2) = α by construction, bisecting u so
// that the band probability under `other` also equals α.
fn anchored_cutoffs<F>(alpha: f64, anchor: f64, other: f64, cdf: &F) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    let cutoffs_at = |u: f64| -> Result<(f64, f64)> {
        let c1 = if u <= 0.0 { f64::NEG_INFINITY } else { family_quantile(cdf, anchor, u)? };
        let c2 = if u + alpha >= 1.0 {
            f64::INFINITY
        } else {
            family_quantile(cdf, anchor, u + alpha)?
        };
        Ok((c1, c2))
    };
    // moving the band up raises its probability under the larger parameter
    let sign = if other > anchor { 1.0 } else { -1.0 };
    let excess = |u: f64| -> Result<f64> {
        let (c1, c2) = cutoffs_at(u)?;
        let upper = if c2.is_finite() { cdf(c2, other) } else { 1.0 };
        let lower = if c1.is_finite() { cdf(c1, other) } else { 0.0 };
        Ok(sign * (upper - lower - alpha))
    };

    let mut lo = 0.0;
    let mut hi = 1.0 - alpha;
    let g_lo = excess(lo)?;
    let g_hi = excess(hi)?;
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::Numerical {
            message: "sampling distribution is not stochastically increasing between theta1 and theta2"
                .into(),
            achieved: g_lo.abs().min(g_hi.abs()),
        });
    }
    // enough halvings to reach subnormal u when the root hugs zero
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    cutoffs_at(0.5 * (lo + hi))
}
