use crate::error::{Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

// erf switches from the power series to the erfc continued fraction here.
const SERIES_CUTOFF: f64 = 2.5;

/// Power series erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!; all terms positive.
fn erf_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 || n > 500.0 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// Continued fraction erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))), x > 0.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (f * PI.sqrt())
}

/// The standard error function, erf(x) = 2/√π ∫₀ˣ e^{-t²} dt.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax < SERIES_CUTOFF {
        erf_series(ax)
    } else {
        1.0 - erfc_continued_fraction(ax)
    };
    v.copysign(x)
}

/// Complementary error function, accurate in relative terms for large positive x.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= SERIES_CUTOFF {
        erfc_continued_fraction(x)
    } else if x > -SERIES_CUTOFF {
        1.0 - erf(x)
    } else {
        2.0 - erfc_continued_fraction(-x)
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x) without input validation; ±∞ map to 1 and 0.
#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), computed without cancellation.
#[inline]
pub(crate) fn phi_upper(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// P(Z ≤ x) for a standard normal Z.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("normal cdf requires finite x (got {x})")));
    }
    Ok(phi(x))
}

/// P(lo < Z < hi), evaluated on whichever tail avoids cancellation.
pub fn normal_interval_prob(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let p = if lo >= 0.0 {
        phi_upper(lo) - phi_upper(hi)
    } else if hi <= 0.0 {
        phi(hi) - phi(lo)
    } else {
        1.0 - phi(lo) - phi_upper(hi)
    };
    p.clamp(0.0, 1.0)
}

// Lower-tail quantile for 0 < p ≤ 0.5: rational starting value, then Halley steps.
fn lower_quantile(p: f64) -> f64 {
    // rational approximation, |error| < 4.5e-4
    let t = (-2.0 * p.ln()).sqrt();
    let num = 2.515_517 + t * (0.802_853 + t * 0.010_328);
    let den = 1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308));
    let mut x = -(t - num / den);
    for _ in 0..50 {
        let density = std_normal_pdf(x);
        if density == 0.0 {
            break;
        }
        let u = (phi(x) - p) / density;
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Inverse of [`std_normal_cdf`] on (0, 1).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("normal quantile requires 0 < p < 1 (got {p})")));
    }
    if p == 0.5 {
        Ok(0.0)
    } else if p < 0.5 {
        Ok(lower_quantile(p))
    } else {
        Ok(-lower_quantile(1.0 - p))
    }
}

/// Inverse of the standard error function on (−1, 1).
pub fn inverse_erf(y: f64) -> Result<f64> {
    if !(y.abs() < 1.0) {
        return Err(Error::domain(format!("inverse erf requires |y| < 1 (got {y})")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let ay = y.abs();
    let tail = 1.0 - ay;
    // erf(x) = 2Φ(x√2) − 1 gives the starting point
    let mut x = -lower_quantile(0.5 * tail) * FRAC_1_SQRT_2;
    for _ in 0..50 {
        let slope = FRAC_2_SQRT_PI * (-x * x).exp();
        if slope == 0.0 {
            break;
        }
        let residual = if ay <= 0.5 { erf(x) - ay } else { tail - erfc(x) };
        let step = residual / slope;
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x.copysign(y))
}

/// Quantile of the lognormal distribution: exp(σ√2·erf⁻¹(2p − 1) + μ).
pub fn lognormal_quantile(p: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("lognormal quantile requires 0 < p < 1 (got {p})")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() || !mu.is_finite() {
        return Err(Error::domain(format!(
            "lognormal quantile requires finite mu and sigma >= 0 (got mu={mu}, sigma={sigma})"
        )));
    }
    if sigma == 0.0 {
        return Ok(mu.exp());
    }
    let z = inverse_erf(2.0 * p - 1.0)?;
    Ok((sigma * SQRT_2 * z + mu).exp())
}
