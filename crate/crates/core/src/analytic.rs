//! Closed-form moment relations for the phase-averaged P function.
//!
//! Moments `n1..n4` are raw photon-number moments `⟨(a†a)^k⟩`. Truncating
//! the moment hierarchy sets a normally ordered moment to zero:
//! `⟨a†³a³⟩ = 0` gives `n3 = 3 n2 − 2 n1` (first order) and `⟨a†⁴a⁴⟩ = 0`
//! gives `n4 = 6 n3 − 11 n2 + 6 n1` (second order).

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::liouvillian::ModelParams;
use crate::observables::MomentSet;

/// Coefficients of `⟨n²⟩ + A⟨n⟩ − B = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticRelation {
    pub a: f64,
    pub b: f64,
}

impl QuadraticRelation {
    pub fn residual(&self, n1: f64, n2: f64) -> f64 {
        n2 + self.a * n1 - self.b
    }
}

pub fn quad_coeffs(p: ModelParams) -> Result<QuadraticRelation> {
    let (w, e, t) = (p.omega(), p.eta(), p.tau());
    if w + e == 0.0 {
        return Err(invalid("omega + eta", "must be positive"));
    }
    if t == 0.0 {
        return Err(invalid("tau", "must be positive"));
    }
    let s = w + e + t;
    let a = s / (2.0 * (w + e)) - ((w - e + t) / (2.0 * t) - s * s / 2.0);
    let b = w * s / (2.0 * t * (w + e));
    Ok(QuadraticRelation { a, b })
}

/// Coefficients of the second-order equation
/// `(a02 I² + a03 I³) P'' + (a10 + a11 I + a12 I²) P' + (a20 + a21 I + a22 I²) P = 0`
/// for the phase-averaged P function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeCoeffs {
    pub a02: f64,
    pub a03: f64,
    pub a10: f64,
    pub a11: f64,
    pub a12: f64,
    pub a20: f64,
    pub a21: f64,
    pub a22: f64,
}

pub fn ode_coeffs(p: ModelParams) -> OdeCoeffs {
    let (w, e, t) = (p.omega(), p.eta(), p.tau());
    let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
    OdeCoeffs {
        a02: t3 / 2.0 * (t - w - e),
        a03: t4,
        a10: w / 4.0 * (t - w - e),
        a11: t / 4.0
            * (3.0 * e * e * t + 9.0 * t3 + 4.0 * w - 12.0 * t2 * w
                + e * (2.0 - 12.0 * t2 + 6.0 * t * w)
                + t * (3.0 * w * w - 2.0)),
        a12: t2 / 2.0 * (7.0 * t2 - 3.0 * t * e - 3.0 * t * w - 2.0),
        a20: 0.25
            * (6.0 * t4 + w * w - e * e * e * t - 11.0 * t3 * w - t * w * w * w
                + e * e * (6.0 * t2 - 3.0 * t * w - 1.0)
                + e * t * (12.0 * t * w + 4.0 - 11.0 * t2 - 3.0 * w * w)
                + t2 * (6.0 * w * w - 3.0)),
        a21: t / 2.0
            * (e * e * t + 3.0 * t3 - 2.0 * w - 4.0 * t2 * w
                + t * w * w
                + 2.0 * e * t * (w - 2.0 * t)),
        a22: t2,
    }
}

/// Value of the phase-averaged P function at `I = 0` implied by the mean
/// photon number `n1`.
pub fn boundary_p0(p: ModelParams, n1: f64) -> Result<f64> {
    let (w, e, t) = (p.omega(), p.eta(), p.tau());
    if w == 0.0 {
        return Err(invalid("omega", "must be positive"));
    }
    if t == 0.0 {
        return Err(invalid("tau", "must be positive"));
    }
    let s = w + e;
    let prefactor = 2.0 * t * (s - t) / (std::f64::consts::PI * w * s);
    let bracket = n1 - ((w - e) / (2.0 * t) - s * (s - t) / 2.0);
    Ok(prefactor * bracket)
}

/// Coefficient of `a03` in the `⟨n²⟩` term of the second coupled moment
/// relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SecondRelation {
    /// `−6 a03`. Fails against exact steady-state moments.
    Minus6,
    /// `−60 a03`. Vanishes on exact steady-state moments and reduces to the
    /// matched-regime system.
    Minus60,
}

impl SecondRelation {
    pub fn a03_weight(self) -> f64 {
        match self {
            Self::Minus6 => -6.0,
            Self::Minus60 => -60.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Minus6 => "-6 a03",
            Self::Minus60 => "-60 a03",
        }
    }
}

/// Left-hand sides `(r1, r2)` of the two coupled moment relations with the
/// `−60 a03` second relation.
pub fn moment_residuals(m: &MomentSet, p: ModelParams) -> (f64, f64) {
    moment_residuals_with(m, p, SecondRelation::Minus60)
}

pub fn moment_residuals_with(m: &MomentSet, p: ModelParams, variant: SecondRelation) -> (f64, f64) {
    let OdeCoeffs {
        a02,
        a03,
        a10,
        a11,
        a12,
        a20,
        a21,
        a22,
    } = ode_coeffs(p);
    let r1 = a22 * m.n3
        + (12.0 * a03 - 3.0 * a12 + a21 - 3.0 * a22) * m.n2
        + (6.0 * a02 - 12.0 * a03 - 2.0 * a11 + 3.0 * a12 + a20 - a21 + 2.0 * a22) * m.n1
        - a10;
    let r2 = a22 * m.n4
        + (20.0 * a03 - 4.0 * a12 + a21 - 6.0 * a22) * m.n3
        + (variant.a03_weight() * a03 - 3.0 * a11 + 12.0 * a12 + a20 - 3.0 * a21
            + 12.0 * a02
            + 11.0 * a22)
            * m.n2
        + (40.0 * a03 + 3.0 * a11 - 8.0 * a12 - a20 + 2.0 * a21
            - 12.0 * a02
            - 2.0 * a10
            - 6.0 * a22)
            * m.n1;
    (r1, r2)
}

/// The two coupled relations in the matched regime `(τ, 0, τ)` divided by
/// `τ²`, so they stay informative at `τ = 0`:
///
/// ```text
/// r1 = n3 + (6τ² − 1) n2 − (6τ² + 3/2) n1
/// r2 = n4 + (12τ² − 3) n3 − 36τ² n2 + (24τ² + 2) n1
/// ```
pub fn matched_residuals(m: &MomentSet, tau: f64) -> (f64, f64) {
    let t2 = tau * tau;
    let r1 = m.n3 + (6.0 * t2 - 1.0) * m.n2 - (6.0 * t2 + 1.5) * m.n1;
    let r2 = m.n4 + (12.0 * t2 - 3.0) * m.n3 - 36.0 * t2 * m.n2 + (24.0 * t2 + 2.0) * m.n1;
    (r1, r2)
}

/// `n3` under `⟨a†³a³⟩ = 0`.
pub fn first_order_closure(n1: f64, n2: f64) -> f64 {
    3.0 * n2 - 2.0 * n1
}

/// `n4` under `⟨a†⁴a⁴⟩ = 0`.
pub fn second_order_closure(n1: f64, n2: f64, n3: f64) -> f64 {
    6.0 * n3 - 11.0 * n2 + 6.0 * n1
}

/// Solves the matched-regime system truncated at second order,
///
/// ```text
/// n2 + 2τ² n1 = 1
/// n3 + (6τ² − 1) n2 − (6τ² + 3/2) n1 = 0
/// (12τ² + 3) n3 − (36τ² + 11) n2 + (24τ² + 8) n1 = 0
/// ```
///
/// returning `(n1, n2, n3)`.
pub fn special_system_solve(tau: f64) -> Result<(f64, f64, f64)> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(invalid(
            "tau",
            format!("must be finite and >= 0, got {tau}"),
        ));
    }
    let t2 = tau * tau;
    #[rustfmt::skip]
    let m = Matrix3::new(
        2.0 * t2,              1.0,                   0.0,
        -(6.0 * t2 + 1.5),     6.0 * t2 - 1.0,        1.0,
        24.0 * t2 + 8.0,       -(36.0 * t2 + 11.0),   12.0 * t2 + 3.0,
    );
    let x = m
        .lu()
        .solve(&Vector3::new(1.0, 0.0, 0.0))
        .ok_or_else(|| Error::Singular(format!("second-order system at tau = {tau}")))?;
    Ok((x[0], x[1], x[2]))
}

/// Closed-form second-order solution `(n1, n2)`.
pub fn second_order_closed_form(tau: f64) -> (f64, f64) {
    let t2 = tau * tau;
    let den = 25.0 + 8.0 * t2 * (19.0 + 39.0 * t2 + 36.0 * t2 * t2);
    let n1 = 4.0 * (4.0 + 21.0 * t2 + 36.0 * t2 * t2) / den;
    let n2 = (5.0 + 12.0 * t2).powi(2) / den;
    (n1, n2)
}

/// First-order solution `(n1, n2)`: the quadratic relation together with the
/// first coupled relation closed by `⟨a†³a³⟩ = 0`, i.e.
/// `2τ² n1 + n2 = 1` and `−(6τ² + 7/2) n1 + (6τ² + 2) n2 = 0`.
pub fn first_order_closed_form(tau: f64) -> (f64, f64) {
    let t2 = tau * tau;
    let det = 2.0 * t2 * (6.0 * t2 + 2.0) + (6.0 * t2 + 3.5);
    ((6.0 * t2 + 2.0) / det, (6.0 * t2 + 3.5) / det)
}
