//! Checks of the `O(1/k²)` objective-gap envelopes
//!
//! ```text
//! θ(w̃ᵏ) − θ*  ≤  (2R₀ + c₀) / (k + 1)²,     R₀ = ‖w̃⁰ − w*‖²_H
//! ```
//!
//! with `c₀ = 0` for exact subproblem solves.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub passed: bool,
    /// `c₀` used for the bound (0 in exact mode).
    pub c0: f64,
    /// Largest `θ(w̃ᵏ) − θ* − bound_k` over the checked range.
    pub worst_excess: f64,
    pub first_failure: Option<usize>,
    /// Some `θ(w̃ᵏ)` lay below `θ* − 10⁻⁸`, so the reference is wrong.
    pub inconsistent_reference: bool,
}

/// `theta[k-1]` holds `θ(w̃ᵏ)` for `k = 1, 2, …`.
pub fn complexity_envelope(
    theta: &[f64],
    theta_star: f64,
    r0: f64,
    c0: f64,
    slack: f64,
) -> EnvelopeReport {
    let mut worst = f64::NEG_INFINITY;
    let mut first_failure = None;
    let mut inconsistent = false;
    for (idx, &t) in theta.iter().enumerate() {
        let k = (idx + 1) as f64;
        let gap = t - theta_star;
        if gap < -1e-8 {
            inconsistent = true;
        }
        let excess = gap - (2.0 * r0 + c0) / ((k + 1.0) * (k + 1.0));
        worst = worst.max(excess);
        if excess > slack && first_failure.is_none() {
            first_failure = Some(idx + 1);
        }
    }
    EnvelopeReport {
        passed: first_failure.is_none() && !inconsistent,
        c0,
        worst_excess: worst,
        first_failure,
        inconsistent_reference: inconsistent,
    }
}

/// Smallest `c₀ ≥ 0` with `θ(w̃ᵏ) − θ* ≤ (2R₀ + c₀)/(k+1)²` on the given
/// prefix of the trace.
pub fn fit_c0(theta: &[f64], theta_star: f64, r0: f64) -> f64 {
    theta
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            let k1 = (idx + 2) as f64;
            (t - theta_star) * k1 * k1 - 2.0 * r0
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_envelope_pass_and_fail() {
        let theta: Vec<f64> = (1..=50).map(|k| 1.0 / ((k + 1) * (k + 1)) as f64).collect();
        let r = complexity_envelope(&theta, 0.0, 0.5, 0.0, 1e-12);
        assert!(r.passed);
        let r = complexity_envelope(&theta, 0.0, 0.4, 0.0, 1e-12);
        assert!(!r.passed);
        assert_eq!(r.first_failure, Some(1));
    }

    #[test]
    fn fitted_c0_makes_bound_tight() {
        let theta: Vec<f64> = (1..=20).map(|k| 3.0 / ((k + 1) * (k + 1)) as f64).collect();
        let c0 = fit_c0(&theta, 0.0, 1.0);
        assert!((c0 - 1.0).abs() < 1e-12);
        assert!(complexity_envelope(&theta, 0.0, 1.0, c0, 1e-12).passed);
    }

    #[test]
    fn below_reference_is_flagged() {
        let r = complexity_envelope(&[-1.0], 0.0, 1.0, 0.0, 0.0);
        assert!(r.inconsistent_reference);
        assert!(!r.passed);
    }
}
