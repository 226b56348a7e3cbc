use super::gamma::{inc_beta_split, ln_gamma};
use crate::error::{Error, Result};

fn check_df(df: f64) -> Result<()> {
    if df > 0.0 && !df.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(format!("Student-t requires df > 0 (got {df})")))
    }
}

// P(T > |x|) = ½·I_{df/(df+x²)}(df/2, ½), with 1 − w formed without cancellation.
fn upper_tail_abs(x: f64, df: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.5);
    }
    let x2 = x * x;
    let denom = df + x2;
    let w = df / denom;
    let one_minus_w = x2 / denom;
    Ok(0.5 * inc_beta_split(0.5 * df, 0.5, w, one_minus_w)?)
}

/// P(T_df ≤ x).
pub fn student_t_cdf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if x.is_nan() || !x.is_finite() {
        return Err(Error::domain(format!("Student-t cdf requires finite x (got {x})")));
    }
    let tail = upper_tail_abs(x, df)?;
    Ok(if x > 0.0 { 1.0 - tail } else { tail })
}

/// P(T_df > x), accurate in relative terms for large positive x.
pub fn student_t_sf(x: f64, df: f64) -> Result<f64> {
    student_t_cdf(-x, df)
}

pub fn student_t_pdf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    let ln_norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df)
        - 0.5 * (df * std::f64::consts::PI).ln();
    Ok((ln_norm - 0.5 * (df + 1.0) * (x * x / df).ln_1p()).exp())
}

/// Quantile of the Student-t distribution.
///
/// Solves the upper tail `P(T > x) = 1 − p` by Newton steps kept inside a
/// bisection bracket; `p < ½` is handled through antisymmetry.
pub fn student_t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("Student-t quantile requires 0 < p < 1 (got {p})")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p < 0.5 {
        return Ok(-student_t_quantile(1.0 - p, df)?);
    }
    let target = 1.0 - p; // exact for p ≥ ½
    let f = |x: f64| -> Result<f64> { Ok(upper_tail_abs(x, df)? - target) };

    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical {
                message: format!("Student-t quantile bracket overflow (p={p}, df={df})"),
                achieved: f64::INFINITY,
            });
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // the tail decreases in x, so its slope is −pdf
        let density = student_t_pdf(x, df)?;
        let mut next = x + fx / density;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs() || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfn::std_normal_cdf;

    #[test]
    fn cdf_trivial_values() {
        for &df in &[0.5, 1.0, 3.0, 22.0, 1e4] {
            assert_eq!(student_t_cdf(0.0, df).unwrap(), 0.5);
        }
        // Cauchy: 1/2 + arctan(1)/π
        let cauchy = 0.5 + 1f64.atan() / std::f64::consts::PI;
        assert!((student_t_cdf(1.0, 1.0).unwrap() - 0.75).abs() < 1e-14);
        assert!((student_t_cdf(1.0, 1.0).unwrap() - cauchy).abs() < 1e-14);
        // df = 2 closed form: ½ + x / (2√(2 + x²))
        for &x in &[-3.0f64, -0.4, 0.7, 5.0] {
            let want = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
            assert!((student_t_cdf(x, 2.0).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn cdf_symmetry() {
        for &df in &[1.0, 4.5, 22.0, 300.0] {
            for &x in &[0.1, 1.0, 2.5, 10.0] {
                let a = student_t_cdf(-x, df).unwrap();
                let b = student_t_cdf(x, df).unwrap();
                assert!((a - (1.0 - b)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cdf_normal_limit() {
        for &x in &[-2.0, -1.0, 0.3, 1.0, 2.5] {
            let t = student_t_cdf(x, 1e6).unwrap();
            let z = std_normal_cdf(x).unwrap();
            assert!((t - z).abs() < 1e-5, "x={x}: {t} vs {z}");
        }
    }

    #[test]
    fn quantile_values() {
        assert_eq!(student_t_quantile(0.5, 22.0).unwrap(), 0.0);
        let q = student_t_quantile(0.95, 22.0).unwrap();
        assert!((q - 1.7171).abs() < 1e-4);
        assert_eq!(student_t_quantile(0.05, 22.0).unwrap(), -q);
        // Cauchy quantile tan(π(p − ½))
        let p: f64 = 0.9;
        let want = (std::f64::consts::PI * (p - 0.5)).tan();
        assert!((student_t_quantile(p, 1.0).unwrap() - want).abs() < 1e-11);
    }

    #[test]
    fn quantile_bisection_oracle() {
        // plain bisection on the cdf, no Newton steps
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if student_t_cdf(mid, 22.0).unwrap() < 0.95 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((student_t_quantile(0.95, 22.0).unwrap() - lo).abs() < 1e-12);
    }

    #[test]
    fn quantile_roundtrip() {
        for &df in &[1.0, 2.0, 7.5, 22.0, 46.0, 1000.0] {
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let x = student_t_quantile(p, df).unwrap();
                let back = student_t_cdf(x, df).unwrap();
                assert!((back - p).abs() < 1e-10, "df={df} p={p}");
            }
        }
        let p = 1.0 - 1e-12;
        let x = student_t_quantile(p, 3.0).unwrap();
        let tail = 1.0 - p;
        assert!((student_t_sf(x, 3.0).unwrap() - tail).abs() < 1e-10 * tail);
    }

    #[test]
    fn rejects_bad_df() {
        assert!(student_t_cdf(1.0, 0.0).is_err());
        assert!(student_t_cdf(1.0, -2.0).is_err());
        assert!(student_t_quantile(0.9, 0.0).is_err());
        assert!(student_t_quantile(1.0, 5.0).is_err());
    }
}
