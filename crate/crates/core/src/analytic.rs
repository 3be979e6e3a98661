//! Closed-form occupations for equal level widths (Γ₁ = Γ₂ = Γ), particle
//! starting in the left well.
//!
//! With ω² = Γ² − ε² and x = ωt/2 every quantity here is a function of
//! Q(t) = Γ² sinh²(x)/ω² = (Γt/2)² (sinh x / x)², which is entire in ω²:
//!
//! * σ₁₁ = e^{−Γt}(1 + Q), σ₂₂ = e^{−Γt} Q
//! * ρ₁₁ = (1 + Q)/(1 + 2Q), ρ₂₂ = Q/(1 + 2Q)
//!
//! These are the usual cosh²/sinh² expressions rearranged so that ω → 0
//! (ε = Γ) needs no special limit and ω imaginary (ε > Γ) stays real.

use crate::error::{Error, Result};

/// Below this |ω|t the sinh(x)/x factor is taken from its power series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// Either a finite time or the t → ∞ limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimePoint {
    At(f64),
    Asymptotic,
}

impl From<f64> for TimePoint {
    fn from(t: f64) -> Self {
        TimePoint::At(t)
    }
}

/// Left/right well occupations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationPair {
    pub p1: f64,
    pub p2: f64,
}

impl OccupationPair {
    pub fn new(p1: f64, p2: f64) -> Self {
        OccupationPair { p1, p2 }
    }

    pub fn sum(&self) -> f64 {
        self.p1 + self.p2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Branch {
    Series,
    Hyperbolic,
    Trigonometric,
}

fn check_inputs(gamma: f64, eps: f64, t: TimePoint) -> Result<()> {
    if !gamma.is_finite() || !eps.is_finite() {
        return Err(Error::NonFinite("gamma/eps"));
    }
    if gamma <= 0.0 {
        return Err(Error::NonPositiveGamma(gamma));
    }
    if let TimePoint::At(t) = t {
        if t.is_nan() || t.is_infinite() {
            return Err(Error::NonFinite("time"));
        }
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
    }
    Ok(())
}

fn select_branch(gamma: f64, eps: f64, t: f64) -> Branch {
    let z = gamma * gamma - eps * eps;
    if z.abs().sqrt() * t < SERIES_THRESHOLD {
        Branch::Series
    } else if z > 0.0 {
        Branch::Hyperbolic
    } else {
        Branch::Trigonometric
    }
}

/// Decay-weighted pieces: returns (e^{−Γt}, e^{−Γt}·Q).
pub(crate) fn weighted_q(gamma: f64, eps: f64, t: f64, branch: Branch) -> (f64, f64) {
    let z = gamma * gamma - eps * eps;
    let decay = (-gamma * t).exp();
    match branch {
        Branch::Series => {
            let x2 = z * t * t / 4.0;
            let s = 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
            let half = 0.5 * gamma * t;
            (decay, decay * half * half * s * s)
        }
        Branch::Hyperbolic => {
            let w = z.sqrt();
            let x = 0.5 * w * t;
            // sinh(x) e^{-x}
            let s = -0.5 * (-2.0 * x).exp_m1();
            // (ω − Γ) = −ε²/(Γ + ω) keeps precision for small ε
            let rate = -eps * eps / (gamma + w);
            (decay, gamma * gamma / z * s * s * (rate * t).exp())
        }
        Branch::Trigonometric => {
            let y = 0.5 * (-z).sqrt() * t;
            let s = y.sin() / y;
            let half = 0.5 * gamma * t;
            (decay, decay * half * half * s * s)
        }
    }
}

/// Conditional pair from Q, written to avoid overflow when Q is huge.
pub(crate) fn conditional_from_q(gamma: f64, eps: f64, t: f64, branch: Branch) -> OccupationPair {
    let z = gamma * gamma - eps * eps;
    if branch == Branch::Hyperbolic {
        let w = z.sqrt();
        let x = 0.5 * w * t;
        if x > 1.0 {
            // r = 1/Q = (ω/Γ)² (2e^{−x}/(1 − e^{−2x}))²
            let f = 2.0 * (-x).exp() / -(-2.0 * x).exp_m1();
            let r = z / (gamma * gamma) * f * f;
            return OccupationPair::new((r + 1.0) / (r + 2.0), 1.0 / (r + 2.0));
        }
    }
    let q = match branch {
        Branch::Hyperbolic => {
            let w = z.sqrt();
            let s = (0.5 * w * t).sinh();
            gamma * gamma * s * s / z
        }
        _ => {
            let (decay, wq) = weighted_q(gamma, eps, t, branch);
            // decay > 0 for the bounded branches
            wq / decay
        }
    };
    OccupationPair::new((1.0 + q) / (1.0 + 2.0 * q), q / (1.0 + 2.0 * q))
}

/// Unconditional occupations σ₁₁(t), σ₂₂(t) of the two wells.
pub fn unconditional_occupations(
    gamma: f64,
    eps: f64,
    t: impl Into<TimePoint>,
) -> Result<OccupationPair> {
    let t = t.into();
    check_inputs(gamma, eps, t)?;
    match t {
        TimePoint::Asymptotic => Ok(if eps == 0.0 {
            OccupationPair::new(0.25, 0.25)
        } else {
            OccupationPair::new(0.0, 0.0)
        }),
        TimePoint::At(t) => {
            let (decay, wq) = weighted_q(gamma, eps, t, select_branch(gamma, eps, t));
            Ok(OccupationPair::new(decay + wq, wq))
        }
    }
}

/// Null-result conditional occupations ρ₁₁(t), ρ₂₂(t).
///
/// For ε > Γ the finite-time values are well defined (oscillatory), but the
/// asymptotic query is rejected.
pub fn conditional_occupations(
    gamma: f64,
    eps: f64,
    t: impl Into<TimePoint>,
) -> Result<OccupationPair> {
    let t = t.into();
    check_inputs(gamma, eps, t)?;
    match t {
        TimePoint::Asymptotic => {
            if eps * eps > gamma * gamma {
                Err(Error::UndefinedAsymptote(format!(
                    "conditional occupations oscillate for |eps| = {} > gamma = {gamma}",
                    eps.abs()
                )))
            } else {
                Ok(OccupationPair::new(0.5, 0.5))
            }
        }
        TimePoint::At(t) => Ok(conditional_from_q(
            gamma,
            eps,
            t,
            select_branch(gamma, eps, t),
        )),
    }
}

/// P₀(t) = σ₁₁ + σ₂₂, the probability that the particle is still in the wells.
pub fn survival_probability(gamma: f64, eps: f64, t: impl Into<TimePoint>) -> Result<f64> {
    let t = t.into();
    check_inputs(gamma, eps, t)?;
    match t {
        TimePoint::Asymptotic => Ok(if eps == 0.0 { 0.5 } else { 0.0 }),
        TimePoint::At(t) => {
            let (decay, wq) = weighted_q(gamma, eps, t, select_branch(gamma, eps, t));
            Ok(decay + 2.0 * wq)
        }
    }
}

/// Steady conditional occupations (χ²/(1+χ²), 1/(1+χ²)) for coupling ratio χ.
///
/// This is the dark-state population for aligned levels; χ = 0 gives the
/// limit lim_{χ→0} lim_{t→∞}. Must be cross-checked against
/// [`crate::lindblad::steady_conditional_numeric`].
pub fn steady_conditional(chi: f64) -> Result<OccupationPair> {
    if !chi.is_finite() {
        return Err(Error::NonFinite("chi"));
    }
    let c2 = chi * chi;
    Ok(OccupationPair::new(c2 / (1.0 + c2), 1.0 / (1.0 + c2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Printed closed forms, evaluated literally with complex ω.
    fn literal_unconditional(g: f64, eps: f64, t: f64) -> (f64, f64) {
        use num_complex::Complex;
        let w = Complex::new(g * g - eps * eps, 0.0).sqrt();
        let c = (w * t / 2.0).cosh();
        let s = (w * t / 2.0).sinh();
        let e = (-g * t).exp();
        let s11 = (c * c * g * g - eps * eps) / (w * w) * e;
        let s22 = s * s * g * g / (w * w) * e;
        (s11.re, s22.re)
    }

    fn literal_conditional(g: f64, eps: f64, t: f64) -> (f64, f64) {
        use num_complex::Complex;
        let w = Complex::new(g * g - eps * eps, 0.0).sqrt();
        let ch = (w * t).cosh().re;
        let e = eps * eps / (g * g);
        (
            (ch + 1.0 - 2.0 * e) / (2.0 * (ch - e)),
            (ch - 1.0) / (2.0 * (ch - e)),
        )
    }

    #[test]
    fn initial_condition() {
        let u = unconditional_occupations(1.0, 0.0, 0.0).unwrap();
        assert_eq!((u.p1, u.p2), (1.0, 0.0));
        let c = conditional_occupations(1.0, 0.0, 0.0).unwrap();
        assert_eq!((c.p1, c.p2), (1.0, 0.0));
        assert_eq!(survival_probability(1.0, 0.0, 0.0).unwrap(), 1.0);
        let c = conditional_occupations(1.0, 1.0, 0.0).unwrap();
        assert_eq!((c.p1, c.p2), (1.0, 0.0));
    }

    #[test]
    fn asymptotes() {
        let u = unconditional_occupations(1.0, 0.0, TimePoint::Asymptotic).unwrap();
        assert_eq!((u.p1, u.p2), (0.25, 0.25));
        let u = unconditional_occupations(1.0, 0.5, TimePoint::Asymptotic).unwrap();
        assert_eq!((u.p1, u.p2), (0.0, 0.0));
        for eps in [0.0, 0.3, 0.5, 0.99, 1.0] {
            let c = conditional_occupations(1.0, eps, TimePoint::Asymptotic).unwrap();
            assert_eq!((c.p1, c.p2), (0.5, 0.5));
        }
        assert!(matches!(
            conditional_occupations(1.0, 1.5, TimePoint::Asymptotic),
            Err(Error::UndefinedAsymptote(_))
        ));
        assert_eq!(survival_probability(1.0, 0.0, TimePoint::Asymptotic).unwrap(), 0.5);
    }

    #[test]
    fn frozen_values_at_unit_time() {
        // ((1 ± e^{-1})/2)^2
        let u = unconditional_occupations(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(u.p1, 0.467_773_541_394_874_8, epsilon = 1e-14);
        assert_relative_eq!(u.p2, 0.099_894_100_223_432_44, epsilon = 1e-14);
        let c = conditional_occupations(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(c.p1, 0.824_027_136_831_942_3, epsilon = 1e-14);
        assert_relative_eq!(c.p2, 0.175_972_863_168_057_8, epsilon = 1e-14);
        assert_relative_eq!(
            survival_probability(1.0, 0.0, 1.0).unwrap(),
            0.567_667_641_618_306_4,
            epsilon = 1e-14
        );
        // independently integrated master equations (DOP853, rtol 1e-13)
        let c = conditional_occupations(1.0, 0.5, 2.0).unwrap();
        assert_relative_eq!(c.p1, 0.640_735_260_437_857_6, epsilon = 1e-12);
        assert_relative_eq!(c.p2, 0.359_264_739_562_142_4, epsilon = 1e-12);
    }

    #[test]
    fn matches_literal_closed_forms() {
        for &eps in &[0.0, 0.2, 0.5, 0.9, 1.3, 2.0, -0.5] {
            for &t in &[0.01, 0.3, 1.0, 2.5, 7.0, 15.0] {
                let u = unconditional_occupations(1.0, eps, t).unwrap();
                let (l1, l2) = literal_unconditional(1.0, eps, t);
                assert_relative_eq!(u.p1, l1, epsilon = 1e-12);
                assert_relative_eq!(u.p2, l2, epsilon = 1e-12);
                let c = conditional_occupations(1.0, eps, t).unwrap();
                let (r1, r2) = literal_conditional(1.0, eps, t);
                assert_relative_eq!(c.p1, r1, epsilon = 1e-10);
                assert_relative_eq!(c.p2, r2, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn aligned_levels_simplification() {
        for &g in &[0.3, 1.0, 2.7] {
            for &t in &[0.0, 0.1, 1.0, 4.0, 30.0] {
                let u = unconditional_occupations(g, 0.0, t).unwrap();
                let e = (-g * t).exp();
                assert_relative_eq!(u.p1, ((1.0 + e) / 2.0).powi(2), epsilon = 1e-14);
                assert_relative_eq!(u.p2, ((1.0 - e) / 2.0).powi(2), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn branches_agree_near_series_threshold() {
        let g = 1.0;
        for &scale in &[0.9, 1.0, 1.1] {
            let wt = SERIES_THRESHOLD * scale;
            for &t in &[0.5, 1.0, 3.0] {
                let w = wt / t;
                // just below and just above eps = gamma
                for (z, other) in [(w * w, Branch::Hyperbolic), (-w * w, Branch::Trigonometric)] {
                    let eps = (g * g - z).sqrt();
                    let a = weighted_q(g, eps, t, Branch::Series);
                    let b = weighted_q(g, eps, t, other);
                    assert!((a.1 - b.1).abs() < 1e-10, "{a:?} vs {b:?}");
                    let ca = conditional_from_q(g, eps, t, Branch::Series);
                    let cb = conditional_from_q(g, eps, t, other);
                    assert!((ca.p1 - cb.p1).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn degenerate_point_is_finite() {
        let u = unconditional_occupations(1.0, 1.0, 2.0).unwrap();
        let e = (-2.0f64).exp();
        assert_relative_eq!(u.p1, 2.0 * e, epsilon = 1e-15);
        assert_relative_eq!(u.p2, e, epsilon = 1e-15);
    }

    #[test]
    fn long_times_do_not_overflow() {
        let c = conditional_occupations(1.0, 0.5, 5000.0).unwrap();
        assert_eq!((c.p1, c.p2), (0.5, 0.5));
        let u = unconditional_occupations(1.0, 0.0, 5000.0).unwrap();
        assert_relative_eq!(u.p1, 0.25, epsilon = 1e-15);
        let c = conditional_occupations(1.0, 0.0, 40.0).unwrap();
        assert!((c.p1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eps_sign_is_irrelevant() {
        for &t in &[0.2, 1.0, 6.0] {
            assert_eq!(
                unconditional_occupations(1.0, 0.5, t).unwrap(),
                unconditional_occupations(1.0, -0.5, t).unwrap()
            );
            assert_eq!(
                conditional_occupations(1.0, 0.5, t).unwrap(),
                conditional_occupations(1.0, -0.5, t).unwrap()
            );
        }
    }

    #[test]
    fn input_errors() {
        assert_eq!(
            unconditional_occupations(1.0, 0.0, -1.0),
            Err(Error::NegativeTime(-1.0))
        );
        assert_eq!(
            conditional_occupations(0.0, 0.0, 1.0),
            Err(Error::NonPositiveGamma(0.0))
        );
        assert!(survival_probability(-1.0, 0.0, 1.0).is_err());
        assert!(steady_conditional(f64::NAN).is_err());
    }

    #[test]
    fn steady_closed_form() {
        let s = steady_conditional(1.0).unwrap();
        assert_eq!((s.p1, s.p2), (0.5, 0.5));
        let s = steady_conditional(0.0).unwrap();
        assert_eq!((s.p1, s.p2), (0.0, 1.0));
        let s = steady_conditional(2.0).unwrap();
        assert_relative_eq!(s.p1, 0.8, epsilon = 1e-15);
        assert_relative_eq!(s.p2, 0.2, epsilon = 1e-15);
        assert_eq!(steady_conditional(-2.0).unwrap(), s);
    }

    #[test]
    fn short_time_expansion_coefficients() {
        // P0 = (1 + e^{-2Γt})/2 = 1 − Γt + Γ²t² − ...
        let g = 1.3;
        let dt = 1e-4;
        let p0 = survival_probability(g, 0.0, dt).unwrap();
        let second = (p0 - 1.0 + g * dt) / (dt * dt);
        assert_relative_eq!(second, g * g, max_relative = 1e-3);
    }
}
