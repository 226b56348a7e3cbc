//! The two one-sided tests procedure and its confidence-interval forms.
//!
//! All quantities are on the log scale unless a name says `ratio`.

use crate::error::{Error, Result};
use crate::pkdata::GroupSummary;
use crate::specialfn::{student_t_cdf, student_t_quantile};
use serde::Serialize;

/// Equivalence limits for μ_T − μ_R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeLimits {
    pub theta_lower: f64,
    pub theta_upper: f64,
}

impl Default for BeLimits {
    /// (ln 0.8, ln 1.25), stored as ∓ln 1.25 so the pair is exactly symmetric.
    fn default() -> Self {
        let upper = 1.25f64.ln();
        BeLimits {
            theta_lower: -upper,
            theta_upper: upper,
        }
    }
}

impl BeLimits {
    pub fn new(theta_lower: f64, theta_upper: f64) -> Result<Self> {
        if !theta_lower.is_finite() || !theta_upper.is_finite() {
            return Err(Error::domain("equivalence limits must be finite"));
        }
        if !(theta_lower < theta_upper) {
            return Err(Error::domain(format!(
                "limits must satisfy LO < HI (got {theta_lower}, {theta_upper})"
            )));
        }
        Ok(BeLimits { theta_lower, theta_upper })
    }

    /// Limits given on the ratio scale, e.g. (0.8, 1.25).
    pub fn from_ratio(delta_lower: f64, delta_upper: f64) -> Result<Self> {
        if !(delta_lower > 0.0 && delta_upper > 0.0) {
            return Err(Error::domain("ratio limits must be positive"));
        }
        if !(delta_lower < delta_upper) {
            return Err(Error::domain(format!(
                "limits must satisfy LO < HI (got {delta_lower}, {delta_upper})"
            )));
        }
        if delta_lower == 0.8 && delta_upper == 1.25 {
            return Ok(BeLimits::default());
        }
        BeLimits::new(delta_lower.ln(), delta_upper.ln())
    }

    pub fn delta_lower(&self) -> f64 {
        self.theta_lower.exp()
    }

    pub fn delta_upper(&self) -> f64 {
        self.theta_upper.exp()
    }

    /// Symmetric about zero on the log scale (δ_L·δ_U = 1).
    pub fn is_equal_tailed(&self) -> bool {
        (self.theta_lower + self.theta_upper).abs()
            <= 1e-12 * self.theta_upper.abs().max(self.theta_lower.abs())
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.theta_lower + self.theta_upper)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.theta_upper - self.theta_lower)
    }

    /// Warning text for asymmetric limits, `None` when the pair is equal-tailed.
    pub fn asymmetry_warning(&self) -> Option<String> {
        if self.is_equal_tailed() {
            None
        } else {
            Some(format!(
                "limits ({:.6}, {:.6}) are not symmetric about zero on the log scale; \
                 the 100(1-2alpha)% interval matches a size-alpha test only for equal tails",
                self.theta_lower, self.theta_upper
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TostOutcome {
    pub t_lower: f64,
    pub t_upper: f64,
    /// t_{1−α, r}
    pub critical: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    /// max(p_lower, p_upper)
    pub p_overall: f64,
    pub reject: bool,
    /// se_diff was zero; the decision is the limiting rule θ_L < Δx̄ < θ_U.
    pub degenerate: bool,
}

fn check_alpha(alpha: f64, name: &str) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 0.5) (got {alpha})")))
    }
}

fn check_summary(summary: &GroupSummary) -> Result<()> {
    if !(summary.se_diff >= 0.0) || !summary.se_diff.is_finite() {
        return Err(Error::domain(format!("se_diff must be finite and >= 0 (got {})", summary.se_diff)));
    }
    if !(summary.df >= 1.0) {
        return Err(Error::domain(format!("degrees of freedom must be >= 1 (got {})", summary.df)));
    }
    Ok(())
}

/// Both one-sided t-tests at size α; H0 is rejected when
/// `T_L > t_{1−α,r}` and `T_U < −t_{1−α,r}`.
pub fn tost(summary: &GroupSummary, limits: &BeLimits, alpha: f64) -> Result<TostOutcome> {
    check_alpha(alpha, "alpha")?;
    check_summary(summary)?;
    let diff = summary.mean_diff();
    let critical = student_t_quantile(1.0 - alpha, summary.df)?;

    if summary.se_diff == 0.0 {
        let side = |x: f64| -> f64 {
            if x > 0.0 {
                f64::INFINITY
            } else if x < 0.0 {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        };
        let t_lower = side(diff - limits.theta_lower);
        let t_upper = side(diff - limits.theta_upper);
        let p_lower = if t_lower > 0.0 { 0.0 } else { 1.0 };
        let p_upper = if t_upper < 0.0 { 0.0 } else { 1.0 };
        return Ok(TostOutcome {
            t_lower,
            t_upper,
            critical,
            p_lower,
            p_upper,
            p_overall: p_lower.max(p_upper),
            reject: tost_decision(summary, limits, critical),
            degenerate: true,
        });
    }

    let t_lower = (diff - limits.theta_lower) / summary.se_diff;
    let t_upper = (diff - limits.theta_upper) / summary.se_diff;
    let p_lower = student_t_cdf(-t_lower, summary.df)?;
    let p_upper = student_t_cdf(t_upper, summary.df)?;
    Ok(TostOutcome {
        t_lower,
        t_upper,
        critical,
        p_lower,
        p_upper,
        p_overall: p_lower.max(p_upper),
        reject: tost_decision(summary, limits, critical),
        degenerate: false,
    })
}

/// The TOST rejection rule for a precomputed `critical = t_{1−α,r}`.
///
/// With `se_diff = 0` this is the limiting rule `θ_L < Δx̄ < θ_U`.
pub fn tost_decision(summary: &GroupSummary, limits: &BeLimits, critical: f64) -> bool {
    let diff = summary.mean_diff();
    if summary.se_diff == 0.0 {
        return limits.theta_lower < diff && diff < limits.theta_upper;
    }
    let t_lower = (diff - limits.theta_lower) / summary.se_diff;
    let t_upper = (diff - limits.theta_upper) / summary.se_diff;
    t_lower > critical && t_upper < -critical
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::domain(format!("interval requires lower <= upper (got [{lower}, {upper}])")));
        }
        Ok(Interval { lower, upper })
    }

    /// Closed-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `[Δx̄ − t_{1−α1,r}·se, Δx̄ + t_{1−α2,r}·se]`, a 100(1 − α1 − α2)% interval.
pub fn ci_two_sided(summary: &GroupSummary, alpha1: f64, alpha2: f64) -> Result<Interval> {
    check_alpha(alpha1, "alpha1")?;
    check_alpha(alpha2, "alpha2")?;
    check_summary(summary)?;
    let lo_crit = student_t_quantile(1.0 - alpha1, summary.df)?;
    let hi_crit = if alpha2 == alpha1 {
        lo_crit
    } else {
        student_t_quantile(1.0 - alpha2, summary.df)?
    };
    Ok(interval_with_critical(summary, lo_crit, hi_crit))
}

/// `[Δx̄ − lo_crit·se, Δx̄ + hi_crit·se]` for precomputed t critical values.
pub fn interval_with_critical(summary: &GroupSummary, lo_crit: f64, hi_crit: f64) -> Interval {
    let diff = summary.mean_diff();
    let se = summary.se_diff;
    Interval {
        lower: diff - lo_crit * se,
        upper: diff + hi_crit * se,
    }
}

/// Min/max form of a symmetric interval: widened to contain zero.
pub fn widen_to_zero(raw: &Interval) -> Interval {
    Interval {
        lower: raw.lower.min(0.0),
        upper: raw.upper.max(0.0),
    }
}

/// The 100(1−α)% interval `[min{0, Δx̄ − t·se}, max{0, Δx̄ + t·se}]`.
pub fn ci_min_max(summary: &GroupSummary, alpha: f64) -> Result<Interval> {
    let raw = ci_two_sided(summary, alpha, alpha)?;
    Ok(widen_to_zero(&raw))
}

/// Strict containment of `interval` in the open interval (θ_L, θ_U).
pub fn decide_by_ci(interval: &Interval, limits: &BeLimits) -> bool {
    limits.theta_lower < interval.lower && interval.upper < limits.theta_upper
}

/// Maps a log-scale interval to the ratio scale.
pub fn back_transform(interval: &Interval) -> Interval {
    Interval {
        lower: interval.lower.exp(),
        upper: interval.upper.exp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn summary(diff: f64, se: f64, n: usize) -> GroupSummary {
        GroupSummary::from_difference(diff, se, n, n).unwrap()
    }

    #[test]
    fn default_limits() {
        let l = BeLimits::default();
        assert_eq!(l.theta_lower, -l.theta_upper);
        assert!((l.delta_lower() * l.delta_upper() - 1.0).abs() < 1e-15);
        assert!((l.delta_lower() - 0.8).abs() < 1e-15);
        assert!((l.theta_upper - 0.223).abs() < 5e-4);
        assert!(l.is_equal_tailed());
        assert!(l.asymmetry_warning().is_none());
        assert_eq!(BeLimits::from_ratio(0.8, 1.25).unwrap(), l);
        assert!(BeLimits::from_ratio(1.25, 0.8).is_err());
        assert!(BeLimits::new(0.1, 0.1).is_err());
        assert!(BeLimits::from_ratio(0.9, 1.25).unwrap().asymmetry_warning().is_some());
    }

    #[test]
    fn tost_boundary_statistic_fails() {
        let l = BeLimits::default();
        let s = summary(l.theta_lower, 0.08, 12);
        let out = tost(&s, &l, 0.05).unwrap();
        assert!(out.t_lower.abs() < 1e-12);
        assert!(!out.reject);
    }

    #[test]
    fn tost_worked_examples() {
        let l = BeLimits::default();
        let out = tost(&summary(0.05, 0.08, 12), &l, 0.05).unwrap();
        assert_eq!(out.critical, student_t_quantile(0.95, 22.0).unwrap());
        assert!((out.critical - 1.7171).abs() < 1e-4);
        assert!((out.t_lower - 3.414).abs() < 1e-3);
        assert!((out.t_upper + 2.164).abs() < 1e-3);
        assert!(out.reject);
        assert!(out.p_overall < 0.05);
        assert!(!out.degenerate);

        let out = tost(&summary(0.05, 0.15, 12), &l, 0.05).unwrap();
        assert!((out.t_upper + 1.154).abs() < 1e-3);
        assert!(!out.reject);
        assert!(out.p_overall >= 0.05);
    }

    #[test]
    fn tost_degenerate_se() {
        let l = BeLimits::default();
        let inside = tost(&summary(0.1, 0.0, 5), &l, 0.05).unwrap();
        assert!(inside.degenerate && inside.reject);
        assert_eq!(inside.p_overall, 0.0);
        let outside = tost(&summary(0.3, 0.0, 5), &l, 0.05).unwrap();
        assert!(outside.degenerate && !outside.reject);
        let on_edge = tost(&summary(l.theta_upper, 0.0, 5), &l, 0.05).unwrap();
        assert!(!on_edge.reject);
    }

    #[test]
    fn tost_rejects_bad_alpha() {
        let s = summary(0.0, 0.1, 10);
        assert!(tost(&s, &BeLimits::default(), 0.0).is_err());
        assert!(tost(&s, &BeLimits::default(), 0.5).is_err());
    }

    #[test]
    fn ci_two_sided_examples() {
        let ci = ci_two_sided(&summary(0.05, 0.0, 12), 0.05, 0.05).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.05, 0.05));
        let ci = ci_two_sided(&summary(0.05, 0.08, 12), 0.05, 0.05).unwrap();
        assert!((ci.lower + 0.0874).abs() < 1e-4);
        assert!((ci.upper - 0.1874).abs() < 1e-4);
        assert!(((ci.upper - 0.05) - (0.05 - ci.lower)).abs() < 1e-15);
        let ci = ci_two_sided(&summary(0.05, 0.08, 12), 0.01, 0.09).unwrap();
        assert!(0.05 - ci.lower > ci.upper - 0.05);
        assert!(ci_two_sided(&summary(0.05, 0.08, 12), 0.0, 0.05).is_err());
        assert!(ci_two_sided(&summary(0.05, 0.08, 12), 0.05, 0.6).is_err());
    }

    #[test]
    fn ci_min_max_examples() {
        let ci = ci_min_max(&summary(0.05, 0.02, 12), 0.05).unwrap();
        assert_eq!(ci.lower, 0.0);
        assert!((ci.upper - 0.0843).abs() < 1e-4);
        let raw = ci_two_sided(&summary(0.05, 0.02, 12), 0.05, 0.05).unwrap();
        assert!((raw.lower - 0.0157).abs() < 1e-4);

        let s = summary(0.0, 0.07, 9);
        assert_eq!(ci_min_max(&s, 0.05).unwrap(), ci_two_sided(&s, 0.05, 0.05).unwrap());
        assert!(ci_min_max(&summary(-0.4, 0.01, 9), 0.05).unwrap().contains(0.0));
    }

    #[test]
    fn decide_by_ci_examples() {
        let l = BeLimits::default();
        assert!(decide_by_ci(&Interval::new(-0.1, 0.1).unwrap(), &l));
        assert!(!decide_by_ci(&Interval::new(l.theta_lower, 0.1).unwrap(), &l));
        assert!(!decide_by_ci(&Interval::new(-0.3, 0.1).unwrap(), &l));
        assert!(!decide_by_ci(&Interval::new(-0.1, l.theta_upper).unwrap(), &l));
    }

    #[test]
    fn back_transform_examples() {
        let ci = back_transform(&Interval::new(0.8f64.ln(), 1.25f64.ln()).unwrap());
        assert!((ci.lower - 0.8).abs() < 1e-15 && (ci.upper - 1.25).abs() < 1e-15);
        assert_eq!(back_transform(&Interval::new(0.0, 0.0).unwrap()), Interval { lower: 1.0, upper: 1.0 });
        assert!(Interval::new(1.0, 0.0).is_err());
    }

    fn arb_summary() -> impl Strategy<Value = GroupSummary> {
        (2usize..60, 2usize..60, -0.5f64..0.5, 0.0f64..0.4, 0.0f64..0.4).prop_map(
            |(n_t, n_r, diff, s_t, s_r)| {
                GroupSummary::from_moments(n_t, n_r, diff, 0.0, s_t, s_r).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn three_decision_routes_agree(s in arb_summary(), alpha in 0.005f64..0.2) {
            let l = BeLimits::default();
            let t = tost(&s, &l, alpha).unwrap().reject;
            let eq = decide_by_ci(&ci_two_sided(&s, alpha, alpha).unwrap(), &l);
            let mm = decide_by_ci(&ci_min_max(&s, alpha).unwrap(), &l);
            prop_assert_eq!(t, eq);
            prop_assert_eq!(t, mm);
        }

        #[test]
        fn tost_outcome_invariants(s in arb_summary(), alpha in 0.005f64..0.2) {
            let out = tost(&s, &BeLimits::default(), alpha).unwrap();
            prop_assert_eq!(out.p_overall, out.p_lower.max(out.p_upper));
            prop_assert_eq!(out.reject, out.t_lower > out.critical && out.t_upper < -out.critical);
            if !out.degenerate {
                prop_assert_eq!(out.reject, out.p_overall < alpha);
            }
        }

        #[test]
        fn min_max_equals_two_sided_when_it_covers_zero(s in arb_summary(), alpha in 0.005f64..0.2) {
            let raw = ci_two_sided(&s, alpha, alpha).unwrap();
            let mm = ci_min_max(&s, alpha).unwrap();
            prop_assert!(mm.contains(0.0));
            if raw.contains(0.0) {
                prop_assert_eq!(raw, mm);
            }
        }

        #[test]
        fn larger_alpha_never_undoes_rejection(s in arb_summary(), a in 0.005f64..0.2, b in 0.005f64..0.2) {
            let (small, large) = if a < b { (a, b) } else { (b, a) };
            let l = BeLimits::default();
            if tost(&s, &l, small).unwrap().reject {
                prop_assert!(tost(&s, &l, large).unwrap().reject);
            }
        }
    }
}
