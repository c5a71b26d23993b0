//! One-sided power-law contact.
//!
//! The penalty force is `k_c ⌊χ^α⌋`, where `χ` is the compression (positive
//! when the bodies interpenetrate) and `⌊χ^α⌋ = h(χ) χ^α` is the one-sided
//! power. The time-stepping schemes never evaluate the force directly;
//! instead they use the difference quotient of the contact potential
//! between two successive compressions, which is what makes the discrete
//! energy balance exact.
//!
//! Throughout this module `chi` is the compression at the current time step
//! and `step` is the displacement increment `s = y^{n+1} - y^n`. Because the
//! compression is `y_c - y`, the compression at the next step is
//! `chi - step`.

use crate::error::{Error, Result};

/// Steps at or below `LIMIT_THRESHOLD * max(1, |chi|)` use the analytic
/// `s -> 0` limit instead of the difference quotient.
pub const LIMIT_THRESHOLD: f64 = 1e-12;

/// Below this ratio `|s| / chi_next` the quotient derivatives switch to
/// their power-series form.
const SERIES_RATIO: f64 = 1e-2;

/// Power-law contact: stiffness `k_c` and exponent `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactLaw {
    /// Contact stiffness coefficient `k_c` (force per displacement^α).
    pub stiffness: f64,
    /// Power-law exponent `α`.
    pub exponent: f64,
}

impl ContactLaw {
    pub fn new(stiffness: f64, exponent: f64) -> Result<Self> {
        let law = Self {
            stiffness,
            exponent,
        };
        law.validate()?;
        Ok(law)
    }

    /// A law that never produces a force.
    pub fn none() -> Self {
        Self {
            stiffness: 0.0,
            exponent: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness.is_finite() && self.stiffness >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "contact stiffness must be finite and non-negative, got {}",
                self.stiffness
            )));
        }
        if !(self.exponent.is_finite() && self.exponent >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "contact exponent must be at least 1, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.stiffness > 0.0
    }

    /// Potential stored at compression `chi`.
    pub fn potential(&self, chi: f64) -> f64 {
        contact_potential(chi, self)
    }

    /// Repelling force at compression `chi`.
    pub fn force(&self, chi: f64) -> f64 {
        contact_force(chi, self)
    }
}

/// The one-sided power `⌊χ^α⌋`: `χ^α` for positive `χ`, zero otherwise.
#[inline]
pub fn bracket_power(chi: f64, alpha: f64) -> f64 {
    if chi > 0.0 {
        chi.powf(alpha)
    } else {
        0.0
    }
}

/// Contact potential `k_c / (α + 1) ⌊χ^(α+1)⌋`.
#[inline]
pub fn contact_potential(chi: f64, law: &ContactLaw) -> f64 {
    let beta = law.exponent + 1.0;
    law.stiffness / beta * bracket_power(chi, beta)
}

/// Contact force `k_c ⌊χ^α⌋`.
#[inline]
pub fn contact_force(chi: f64, law: &ContactLaw) -> f64 {
    law.stiffness * bracket_power(chi, law.exponent)
}

/// Difference-quotient contact force between compression `chi` and
/// `chi - step`:
///
/// ```text
/// k_c / (α + 1) · (⌊(χ - s)^(α+1)⌋ - ⌊χ^(α+1)⌋) / (-s)
/// ```
///
/// Continuous in `step`, with the limit `k_c ⌊χ^α⌋` as `step -> 0`.
#[inline]
pub fn contact_discrete_gradient(chi: f64, step: f64, law: &ContactLaw) -> f64 {
    law.stiffness * unit_quotient(chi, step, law.exponent).value
}

/// Derivative of [`contact_discrete_gradient`] with respect to `step`.
///
/// Always non-positive: the quotient is the mean of the (non-decreasing)
/// force over `[chi - step, chi]`. Its `step -> 0` limit is `-V_c''(χ)/2`.
#[inline]
pub fn contact_discrete_gradient_ds(chi: f64, step: f64, law: &ContactLaw) -> f64 {
    law.stiffness * unit_quotient(chi, step, law.exponent).d_step
}

/// Second derivative of [`contact_discrete_gradient`] with respect to
/// `step`, with limit `V_c'''(χ)/3`.
#[inline]
pub fn contact_discrete_gradient_ds2(chi: f64, step: f64, law: &ContactLaw) -> f64 {
    law.stiffness * unit_quotient(chi, step, law.exponent).d2_step
}

/// Quotient of the unit-stiffness potential `Φ(χ) = ⌊χ^β⌋/β`, `β = α + 1`,
/// together with its first two derivatives in the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quotient {
    /// `(Φ(χ) - Φ(χ - s)) / s`
    pub value: f64,
    /// `d/ds` of `value`
    pub d_step: f64,
    /// `d²/ds²` of `value`
    pub d2_step: f64,
}

impl Quotient {
    const ZERO: Self = Self {
        value: 0.0,
        d_step: 0.0,
        d2_step: 0.0,
    };
}

/// `Φ^(j)(u)` for `u > 0`: `α(α-1)…(α+2-j) u^(α+1-j)`.
#[inline]
fn unit_potential_derivative(u: f64, alpha: f64, order: u32) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let mut coefficient = 1.0;
    for j in 0..order.saturating_sub(1) {
        coefficient *= alpha - j as f64;
    }
    coefficient * u.powf(alpha + 1.0 - order as f64)
}

/// Unit-stiffness difference quotient and its step derivatives.
///
/// Both compressions positive: the quotient is evaluated through
/// `expm1`/`ln_1p` of the ratio `s / (χ - s)` so that no digits are lost to
/// cancellation, and the derivatives switch to their power series for
/// small ratios. Mixed signs: the direct formulas are well conditioned
/// because `|s|` is at least as large as either compression.
pub fn unit_quotient(chi: f64, step: f64, alpha: f64) -> Quotient {
    let next = chi - step;
    if chi <= 0.0 && next <= 0.0 {
        return Quotient::ZERO;
    }
    if step.abs() <= LIMIT_THRESHOLD * chi.abs().max(1.0) {
        return Quotient {
            value: bracket_power(chi, alpha),
            d_step: -0.5 * unit_potential_derivative_or_step(chi, alpha),
            d2_step: unit_potential_derivative(chi, alpha, 3) / 3.0,
        };
    }
    let beta = alpha + 1.0;
    if chi > 0.0 && next > 0.0 {
        let ratio = step / next;
        let base = next.powf(alpha);
        // ((1 + r)^β - 1) / (β r)
        let mean_factor = (beta * ratio.ln_1p()).exp_m1() / (beta * ratio);
        let value = base * mean_factor;
        let (w, v) = if ratio.abs() <= SERIES_RATIO {
            series_terms(beta, ratio)
        } else {
            let w = (1.0 - mean_factor) / ratio;
            (w, (alpha + 2.0 * w) / ratio)
        };
        let d_step = next.powf(alpha - 1.0) * w;
        let d2_step = -next.powf(alpha - 2.0) * v;
        return Quotient {
            value,
            d_step,
            d2_step,
        };
    }
    let phi = |c: f64| bracket_power(c, beta) / beta;
    let value = (phi(chi) - phi(next)) / step;
    let d_step = (bracket_power(next, alpha) - value) / step;
    let d2_step = -(unit_potential_derivative_or_step(next, alpha) + 2.0 * d_step) / step;
    Quotient {
        value,
        d_step,
        d2_step,
    }
}

/// `Φ''(u) = α ⌊u^(α-1)⌋`, which is the unit step for the linear-force law.
#[inline]
fn unit_potential_derivative_or_step(u: f64, alpha: f64) -> f64 {
    if u > 0.0 {
        alpha * u.powf(alpha - 1.0)
    } else {
        0.0
    }
}

/// Series for `W(r) = (1 - E(r)) / r` and `(α + 2W(r)) / r`, where
/// `E(r) = ((1 + r)^β - 1) / (β r)`.
///
/// With `c_k = (β-1)(β-2)…(β-k) / (k+1)!`, `W = -Σ_{k≥1} c_k r^(k-1)` and
/// `(α + 2W)/r = -2 Σ_{k≥2} c_k r^(k-2)`.
fn series_terms(beta: f64, ratio: f64) -> (f64, f64) {
    let mut w = 0.0;
    let mut v = 0.0;
    let mut c = 1.0;
    // r^(k-2), starting from k = 1
    let mut lagged = 1.0 / ratio;
    for k in 1..=14u32 {
        c *= (beta - k as f64) / (k as f64 + 1.0);
        if c == 0.0 {
            break;
        }
        w -= c * lagged * ratio;
        if k >= 2 {
            v -= 2.0 * c * lagged;
        }
        lagged *= ratio;
    }
    (w, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bracket_examples() {
        assert_eq!(bracket_power(-1.0, 2.0), 0.0);
        assert_eq!(bracket_power(0.0, 1.5), 0.0);
        assert_eq!(bracket_power(2.0, 3.0), 8.0);
    }

    #[test]
    fn potential_and_force_examples() {
        let stiff = ContactLaw::new(1e7, 1.0).unwrap();
        assert_eq!(contact_potential(-0.5, &stiff), 0.0);
        assert_relative_eq!(contact_potential(1.0, &ContactLaw::new(3.0, 2.0).unwrap()), 1.0);
        assert_relative_eq!(
            contact_potential(0.01, &ContactLaw::new(5000.0, 1.0).unwrap()),
            0.25,
            max_relative = 1e-14
        );
        assert_eq!(contact_force(-0.1, &stiff), 0.0);
        assert_eq!(contact_force(2.0, &ContactLaw::new(10.0, 1.0).unwrap()), 20.0);
        assert_relative_eq!(
            contact_force(0.1, &ContactLaw::new(5e8, 2.0).unwrap()),
            5e6,
            max_relative = 1e-14
        );
    }

    #[test]
    fn rejects_invalid_laws() {
        assert!(ContactLaw::new(-1.0, 1.0).is_err());
        assert!(ContactLaw::new(1.0, 0.5).is_err());
        assert!(ContactLaw::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn quotient_limit_is_force() {
        let law = ContactLaw::new(5000.0, 1.0).unwrap();
        assert_relative_eq!(contact_discrete_gradient(0.05, 0.0, &law), 250.0);
        assert_relative_eq!(contact_discrete_gradient(0.05, 1e-13, &law), 250.0);
        assert_eq!(contact_discrete_gradient(-1.0, -0.5, &law), 0.0);
    }

    #[test]
    fn linear_law_is_midpoint_force() {
        // α = 1, both in contact: exactly k_c (χ - s/2).
        let law = ContactLaw::new(5000.0, 1.0).unwrap();
        for &(chi, s) in &[(0.02, 0.01), (0.3, -0.1), (1e-3, 5e-4), (0.5, 1e-9)] {
            assert_relative_eq!(
                contact_discrete_gradient(chi, s, &law),
                5000.0 * (chi - s / 2.0),
                max_relative = 1e-13
            );
            assert_relative_eq!(
                contact_discrete_gradient_ds(chi, s, &law),
                -2500.0,
                max_relative = 1e-9
            );
            assert!(contact_discrete_gradient_ds2(chi, s, &law).abs() < 1e-6);
        }
    }

    #[test]
    fn series_matches_direct_at_switch() {
        for &alpha in &[1.0, 1.5, 2.0, 2.3, 3.5] {
            let chi = 0.01;
            let below = unit_quotient(chi, 0.99 * SERIES_RATIO * chi / (1.0 + SERIES_RATIO), alpha);
            let above = unit_quotient(chi, 1.01 * SERIES_RATIO * chi / (1.0 - SERIES_RATIO), alpha);
            assert_relative_eq!(below.d_step, above.d_step, max_relative = 1e-3);
            assert_relative_eq!(below.d2_step, above.d2_step, max_relative = 1e-3, epsilon = 1e-9);
        }
    }

    #[test]
    fn converges_to_force_as_step_shrinks() {
        let law = ContactLaw::new(2.0e3, 2.5).unwrap();
        let chi = 0.03;
        let target = contact_force(chi, &law);
        let mut last = f64::INFINITY;
        for k in 2..=10 {
            let s = 10f64.powi(-k);
            let err = (contact_discrete_gradient(chi, s, &law) - target).abs();
            assert!(err <= last, "error grew at s = 1e-{k}");
            last = err;
        }
        // first-order term: α s / (2χ) relative
        assert!(last < 1e-8 * target);
    }
}
