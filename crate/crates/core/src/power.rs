//! Exact TOST power for the pooled two-sample t-test.
//!
//! With `s = √(1/n_T + 1/n_R)`, `r = n_T + n_R − 2` and `t = t_{1−α,r}`,
//!
//! ```text
//! power = Q_r(−t, (μΔ − θ_U)/(σ s); 0, b) − Q_r(t, (μΔ − θ_L)/(σ s); 0, b)
//! b     = (θ_U − θ_L)·√r / (2·σ·s·t)
//! ```
//!
//! where `Q_r` is Owen's Q function ([`owens_q`]).

use crate::equivtest::BeLimits;
use crate::error::{Error, Result};
use crate::specialfn::{owens_q, student_t_quantile, QuadratureSpec};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerParams {
    /// μ_T − μ_R on the log scale.
    pub mu_diff: f64,
    pub n_t: usize,
    pub n_r: usize,
    /// Common log-scale standard deviation.
    pub sigma: f64,
    pub alpha: f64,
    pub limits: BeLimits,
}

impl PowerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain(format!("sigma must be positive (got {})", self.sigma)));
        }
        if self.n_t < 2 || self.n_r < 2 {
            return Err(Error::domain(format!(
                "need n_T, n_R >= 2 (got {}, {})",
                self.n_t, self.n_r
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::domain(format!("alpha must lie in (0, 0.5) (got {})", self.alpha)));
        }
        if !self.mu_diff.is_finite() {
            return Err(Error::domain("mu_diff must be finite"));
        }
        Ok(())
    }

    pub fn se_scale(&self) -> f64 {
        (1.0 / self.n_t as f64 + 1.0 / self.n_r as f64).sqrt()
    }

    pub fn df(&self) -> f64 {
        (self.n_t + self.n_r - 2) as f64
    }
}

/// Power with the default quadrature settings.
pub fn exact_power(params: &PowerParams) -> Result<f64> {
    exact_power_with(params, &QuadratureSpec::default())
}

pub fn exact_power_with(params: &PowerParams, quad: &QuadratureSpec) -> Result<f64> {
    Ok(raw_power(params, quad)?.clamp(0.0, 1.0))
}

/// Unclamped difference of the two Owen's Q terms.
pub fn raw_power(params: &PowerParams, quad: &QuadratureSpec) -> Result<f64> {
    params.validate()?;
    let r = params.df();
    let t = student_t_quantile(1.0 - params.alpha, r)?;
    let scale = params.sigma * params.se_scale();
    let limits = &params.limits;
    let delta_upper = (params.mu_diff - limits.theta_upper) / scale;
    let delta_lower = (params.mu_diff - limits.theta_lower) / scale;
    let b = (limits.theta_upper - limits.theta_lower) * r.sqrt() / (2.0 * scale * t);
    let upper = owens_q(r, -t, delta_upper, 0.0, b, quad)?;
    let lower = owens_q(r, t, delta_lower, 0.0, b, quad)?;
    Ok(upper - lower)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPoint {
    pub mu_diff: f64,
    pub power: f64,
}

/// Exact power at each `mu_diff` in `grid`, rows in grid order.
pub fn power_curve(params: &PowerParams, grid: &[f64]) -> Result<Vec<PowerPoint>> {
    if grid.is_empty() {
        return Err(Error::domain("power curve grid is empty"));
    }
    grid.par_iter()
        .map(|&mu_diff| {
            let p = PowerParams { mu_diff, ..*params };
            Ok(PowerPoint { mu_diff, power: exact_power(&p)? })
        })
        .collect()
}

/// Writes `mu_diff,power` CSV with 17 significant digits.
pub fn write_power_curve_csv<W: Write>(rows: &[PowerPoint], mut out: W) -> Result<()> {
    writeln!(out, "mu_diff,power")?;
    for row in rows {
        writeln!(
            out,
            "{},{}",
            crate::report::fmt_sig17(row.mu_diff),
            crate::report::fmt_sig17(row.power)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSizeRequest {
    pub target_power: f64,
    pub mu_diff: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub limits: BeLimits,
    /// n_T : n_R.
    pub allocation: f64,
    /// Largest per-group size searched.
    pub max_n: usize,
}

impl SampleSizeRequest {
    pub const DEFAULT_MAX_N: usize = 100_000;

    pub fn new(target_power: f64, mu_diff: f64, sigma: f64, alpha: f64, limits: BeLimits) -> Self {
        SampleSizeRequest {
            target_power,
            mu_diff,
            sigma,
            alpha,
            limits,
            allocation: 1.0,
            max_n: Self::DEFAULT_MAX_N,
        }
    }

    /// Group sizes for the `k`-th step of the scan (k = n_R).
    pub fn sizes_at(&self, n_r: usize) -> (usize, usize) {
        let n_t = (self.allocation * n_r as f64 - 1e-9).ceil().max(2.0) as usize;
        (n_t, n_r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSize {
    pub n_t: usize,
    pub n_r: usize,
    pub achieved_power: f64,
}

/// Smallest group sizes, scanning n_R = 2, 3, … upward, whose exact power
/// reaches the target.
pub fn sample_size(req: &SampleSizeRequest) -> Result<SampleSize> {
    if !(req.target_power > 0.0 && req.target_power < 1.0) {
        return Err(Error::domain(format!(
            "target power must lie in (0, 1) (got {})",
            req.target_power
        )));
    }
    if !(req.allocation > 0.0) || !req.allocation.is_finite() {
        return Err(Error::domain("allocation ratio must be positive"));
    }
    let limits = &req.limits;
    if !(limits.theta_lower < req.mu_diff && req.mu_diff < limits.theta_upper) {
        return Err(Error::Infeasible(format!(
            "true difference {} is not strictly inside the limits ({}, {}); no sample size reaches the target",
            req.mu_diff, limits.theta_lower, limits.theta_upper
        )));
    }
    let mut n_r = 2;
    loop {
        let (n_t, n_r_now) = req.sizes_at(n_r);
        if n_t.max(n_r_now) > req.max_n {
            return Err(Error::Infeasible(format!(
                "target power {} not reached with group sizes up to {}",
                req.target_power, req.max_n
            )));
        }
        let params = PowerParams {
            mu_diff: req.mu_diff,
            n_t,
            n_r: n_r_now,
            sigma: req.sigma,
            alpha: req.alpha,
            limits: req.limits,
        };
        let power = exact_power(&params)?;
        if power >= req.target_power {
            return Ok(SampleSize {
                n_t,
                n_r: n_r_now,
                achieved_power: power,
            });
        }
        n_r += 1;
    }
}
