use super::gamma::ln_gamma;
use super::normal::phi;
use super::quadrature::{integrate, QuadratureSpec};
use crate::error::{Error, Result};
use std::f64::consts::LN_2;

// Half-width, around the chi mode, outside of which the chi density is below
// e^-100 for every v >= 1.
const SUPPORT_HALF_WIDTH: f64 = 16.0;

/// Owen's Q function
///
/// ```text
/// Q_v(t, δ; a, b) = √(2π) / (Γ(v/2)·2^{(v−2)/2}) ∫_a^b Φ(t·x/√v − δ) x^{v−1} φ(x) dx
/// ```
///
/// The weight in front of Φ is exactly the chi density with `v` degrees of
/// freedom, so `Q_v(t, δ; 0, ∞)` is the noncentral-t cdf `P(T'_{v,δ} ≤ t)`.
/// The integral is restricted to the numerical support of that density and
/// evaluated with [`integrate`].
pub fn owens_q(v: f64, t: f64, delta: f64, a: f64, b: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(v >= 1.0) || !v.is_finite() {
        return Err(Error::domain(format!("Owen's Q requires v >= 1 (got {v})")));
    }
    if !t.is_finite() || delta.is_nan() {
        return Err(Error::domain(format!(
            "Owen's Q requires finite t and delta (got t={t}, delta={delta})"
        )));
    }
    if !(a >= 0.0) {
        return Err(Error::domain(format!("Owen's Q requires a >= 0 (got {a})")));
    }
    if !(a <= b) || b.is_nan() {
        return Err(Error::domain(format!("Owen's Q requires a <= b (got a={a}, b={b})")));
    }
    quad.validate()?;

    let mode = (v - 1.0).max(0.0).sqrt();
    let lo = a.max(mode - SUPPORT_HALF_WIDTH);
    let hi = b.min(mode + SUPPORT_HALF_WIDTH);
    if !(lo < hi) {
        return Ok(0.0);
    }

    let ln_norm = (0.5 * v - 1.0) * LN_2 + ln_gamma(0.5 * v);
    let sqrt_v = v.sqrt();
    let integrand = move |x: f64| {
        let density = if x > 0.0 {
            ((v - 1.0) * x.ln() - 0.5 * x * x - ln_norm).exp()
        } else if v == 1.0 {
            (-ln_norm).exp()
        } else {
            0.0
        };
        if density == 0.0 {
            0.0
        } else {
            density * phi(t * x / sqrt_v - delta)
        }
    };
    let pieces = (hi - lo).ceil() as usize;
    let (value, _err) = integrate(integrand, lo, hi, pieces, quad)?;
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64, t: f64, d: f64, a: f64, b: f64) -> f64 {
        owens_q(v, t, d, a, b, &QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(q(5.0, 1.0, 0.3, 2.0, 2.0), 0.0);
        assert_eq!(q(1.0, -1.0, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn saturated_phi_gives_chi_mass() {
        assert!((q(5.0, 2.0, -1e6, 0.0, 50.0) - 1.0).abs() < 1e-8);
        for &v in &[1.0, 2.0, 10.0, 46.0, 400.0] {
            assert!((q(v, 0.0, -1e6, 0.0, 1e4) - 1.0).abs() < 1e-9, "v={v}");
        }
    }

    #[test]
    fn matches_central_t_when_delta_is_zero() {
        // Q_v(t, 0; 0, ∞) = P(T_v ≤ t)
        for &(v, t) in &[(5.0, 1.0), (22.0, 1.717), (38.0, -2.0), (1.0, 0.5)] {
            let want = crate::specialfn::student_t_cdf(t, v).unwrap();
            assert!((q(v, t, 0.0, 0.0, 1e3) - want).abs() < 1e-9, "v={v} t={t}");
        }
    }

    #[test]
    fn chi_mass_for_two_df_closed_form() {
        // v = 2: chi density x·e^{-x²/2}, so mass on [a, b] = e^{-a²/2} − e^{-b²/2}
        let (a, b) = (0.4_f64, 1.9_f64);
        let want = (-0.5 * a * a).exp() - (-0.5 * b * b).exp();
        assert!((q(2.0, 3.0, -1e6, a, b) - want).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let spec = QuadratureSpec::default();
        assert!(owens_q(5.0, 1.0, 0.0, 2.0, 1.0, &spec).is_err());
        assert!(owens_q(0.5, 1.0, 0.0, 0.0, 1.0, &spec).is_err());
        assert!(owens_q(5.0, f64::NAN, 0.0, 0.0, 1.0, &spec).is_err());
    }

    #[test]
    fn quadrature_failure_surfaces() {
        let spec = QuadratureSpec::new(1e-16, 1e-30, 1).unwrap();
        match owens_q(5.0, 1.0, 0.5, 0.0, 50.0, &spec) {
            Err(Error::Numerical { achieved, .. }) => assert!(achieved > 0.0),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }
}
