//! Exact results for `η = 0`, `τ = ω → 0`.
//!
//! In this limit the photon-number distribution is
//! `ρ(n) = C 2⁻ⁿ (n + 1) / Γ(n + 3/2)` with
//! `C = √π / (1 + √(2πe) erf(1/√2))`, and the phase-averaged P function is
//! `P(I) = C₀ I eⁱ / (1 − 2I)^{3/2}` on `0 ≤ I < 1/2` with
//! `C₀ = −2 / (π + π √(2πe) erf(1/√2))`.

use std::f64::consts::{E, FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::observables::{mandel_q, MomentSet, PhotonDistribution};
use crate::special::{erf, gamma_half_integer};

/// Tolerance used by [`exact_q`] and [`exact_moments`].
pub const DEFAULT_TOL: f64 = 1e-17;

fn erf_denominator() -> f64 {
    1.0 + (2.0 * PI * E).sqrt() * erf(FRAC_1_SQRT_2)
}

/// Normalization `C` of the exact distribution.
pub fn norm_constant() -> f64 {
    PI.sqrt() / erf_denominator()
}

/// Normalization `C₀` of the P function.
pub fn p_norm_constant() -> f64 {
    -2.0 / (PI * erf_denominator())
}

/// `ρ(n+1)/ρ(n) = (n + 2) / ((n + 1)(2n + 3))`.
pub fn step_ratio(n: usize) -> f64 {
    let n = n as f64;
    (n + 2.0) / ((n + 1.0) * (2.0 * n + 3.0))
}

/// `ρ(n)` evaluated directly from the Γ-function form.
pub fn closed_form_term(n: u32) -> f64 {
    norm_constant() * 0.5f64.powi(n as i32) * (n as f64 + 1.0) / gamma_half_integer(n + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactDistribution {
    probs: Vec<f64>,
    c_norm: f64,
}

impl ExactDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    /// Last index kept.
    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn moments(&self) -> MomentSet {
        let mut m = MomentSet::from_distribution(&self.as_distribution());
        m.d = f64::NAN;
        m
    }

    pub fn as_distribution(&self) -> PhotonDistribution {
        PhotonDistribution::new(self.probs.clone())
            .expect("exact distribution is positive and normalized")
    }
}

/// Terms `ρ(0..=N)` built by the ratio recurrence from `ρ(0) = C/Γ(3/2)`.
///
/// `N ≥ 1` is the first index with `ρ(N) < tol`. Since every ratio from
/// `n = 1` on is below 1/2, the discarded mass is at most `ρ(N)`.
pub fn exact_distribution(tol: f64) -> Result<ExactDistribution> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    let c_norm = norm_constant();
    let mut probs = vec![c_norm / gamma_half_integer(1)];
    loop {
        let n = probs.len() - 1;
        let next = probs[n] * step_ratio(n);
        probs.push(next);
        if next < tol {
            break;
        }
    }
    Ok(ExactDistribution { probs, c_norm })
}

pub fn exact_moments() -> MomentSet {
    exact_distribution(DEFAULT_TOL)
        .expect("default tolerance is valid")
        .moments()
}

/// Mandel Q of the exact distribution.
pub fn exact_q() -> f64 {
    let m = exact_moments();
    mandel_q(m.n1, m.n2).expect("mean photon number is positive")
}

/// Phase-averaged P function on `0 ≤ I < 1/2`.
pub fn p_function(intensity: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&intensity) {
        return Err(Error::Domain {
            func: "p_function",
            value: intensity,
        });
    }
    Ok(p_norm_constant() * intensity * intensity.exp() / (1.0 - 2.0 * intensity).powf(1.5))
}

/// Competing photon-number recurrences for the strong-coupling limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Recurrence {
    /// `ρ(n+1)/ρ(n) = 1/(2n + 3)`, as the three-term recurrence reads when
    /// taken literally.
    Reciprocal,
    /// `ρ(n+1)/ρ(n) = (n + 2)/((n + 1)(2n + 3))`, implied by the closed form.
    ClosedForm,
}

impl Recurrence {
    pub fn ratio(self, n: usize) -> f64 {
        match self {
            Self::Reciprocal => 1.0 / (2.0 * n as f64 + 3.0),
            Self::ClosedForm => step_ratio(n),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Reciprocal => "recurrence 1/(2n+3)",
            Self::ClosedForm => "closed form (n+2)/((n+1)(2n+3))",
        }
    }
}

/// Distribution generated by `variant` and normalized numerically over
/// `0..=len-1`.
pub fn recurrence_distribution(variant: Recurrence, len: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(len);
    let mut x = 1.0;
    for n in 0..len {
        w.push(x);
        x *= variant.ratio(n);
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_constant_value() {
        let c = norm_constant();
        assert!((c - 0.46383).abs() < 1e-5, "C = {c}");
        assert!(c > 0.0 && c < 1.0);
    }

    #[test]
    fn norm_constant_against_series() {
        // Σ 2⁻ⁿ (n+1)/Γ(n+3/2) summed with the Γ recursion.
        let mut sum = 0.0;
        for n in 0..60u32 {
            sum += 0.5f64.powi(n as i32) * (n as f64 + 1.0) / gamma_half_integer(n + 1);
        }
        assert!((1.0 / norm_constant() - sum).abs() < 1e-10);
    }

    #[test]
    fn first_ratio() {
        let d = exact_distribution(1e-15).unwrap();
        assert!((d.probs()[1] / d.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.probs()[0] - 0.5234).abs() < 1e-4);
    }

    #[test]
    fn distribution_sums_to_one() {
        for tol in [1e-13, 1e-15, 1e-17] {
            let d = exact_distribution(tol).unwrap();
            let total: f64 = d.probs().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "tol {tol}: {total}");
            assert!(d.probs().iter().all(|&p| p > 0.0));
        }
        assert!(exact_distribution(0.0).is_err());
        assert!(exact_distribution(f64::NAN).is_err());
    }

    #[test]
    fn p_function_domain() {
        assert_eq!(p_function(0.0).unwrap(), 0.0);
        assert!(p_function(0.5).is_err());
        assert!(p_function(-0.1).is_err());
        assert!(p_function(f64::NAN).is_err());
        assert!(p_function(0.4999999).unwrap().abs() > 1e7);
        assert!((p_norm_constant() + 0.16659).abs() < 1e-5);
        assert!(p_function(0.25).unwrap() < 0.0);
    }

    #[test]
    fn c0_relates_to_c() {
        // C₀ = −2C/π^{3/2}
        let expect = -2.0 * norm_constant() / PI.powf(1.5);
        assert!((p_norm_constant() - expect).abs() < 1e-15);
    }

    #[test]
    fn recurrence_variants_differ() {
        let reciprocal = recurrence_distribution(Recurrence::Reciprocal, 40);
        let closed = recurrence_distribution(Recurrence::ClosedForm, 40);
        let exact = exact_distribution(1e-17).unwrap();
        for (a, b) in closed.iter().zip(exact.probs()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!((reciprocal[1] / reciprocal[0] - 1.0 / 3.0).abs() < 1e-15);
    }
}
