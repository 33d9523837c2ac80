//! Cross-module verification suite behind the `check` subcommand.
//!
//! Every check compares two independent routes (numeric steady state vs.
//! closed form, series vs. closed form, general vs. special-case
//! coefficients) and records the worst deviation found.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{
    matched_residuals, moment_residuals_with, ode_coeffs, quad_coeffs, second_order_closed_form,
    special_system_solve, SecondRelation,
};
use crate::error::Result;
use crate::fock::SpaceConfig;
use crate::liouvillian::{steady_state, ModelParams, SteadyStateResult, DEFAULT_TOL};
use crate::observables::{mandel_q, moments, photon_distribution, MomentSet};
use crate::strong_coupling::{
    exact_distribution, exact_moments, recurrence_distribution, Recurrence,
};
use crate::sweep::tau_grid;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub check_name: String,
    /// Worst observed deviation (or count, for survivor checks). NaN when a
    /// solve failed.
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Diagnostic entries record a rejected variant and do not gate the exit
    /// status.
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantResidual {
    pub variant: String,
    pub residual: f64,
    pub survives: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Adjudication {
    pub discrepancy: String,
    pub variants: Vec<VariantResidual>,
    pub surviving: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckEntry>,
    pub adjudications: Vec<Adjudication>,
    pub all_required_pass: bool,
}

impl CheckReport {
    pub fn failed_required(&self) -> Vec<&CheckEntry> {
        self.checks
            .iter()
            .filter(|c| c.required && !c.pass)
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.check_name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Points per axis of the general `(ω, η, τ) ∈ [0.2, 2]³` grid.
    pub grid_size: usize,
    pub n_max: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            grid_size: 5,
            n_max: 20,
        }
    }
}

/// Residual below which a competing formula is considered to hold.
pub const SURVIVAL_TOL: f64 = 1e-6;

#[derive(Default)]
struct Builder {
    checks: Vec<CheckEntry>,
}

impl Builder {
    fn push(&mut self, name: &str, value: f64, threshold: f64, pass: bool, required: bool) {
        self.checks.push(CheckEntry {
            check_name: name.to_string(),
            value,
            threshold,
            pass,
            required,
        });
    }

    /// `value ≤ threshold`; NaN fails.
    fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value, threshold, value <= threshold, true);
    }

    fn diagnostic(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value, threshold, value <= threshold, false);
    }
}

/// `max` that propagates NaN.
fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc: f64, v| {
        if acc.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            acc.max(v)
        }
    })
}

fn solve(p: ModelParams, n_max: usize) -> Result<(SteadyStateResult, MomentSet)> {
    let res = steady_state(p, SpaceConfig::new(n_max)?, DEFAULT_TOL)?;
    let m = moments(&res.rho);
    Ok((res, m))
}

fn general_grid(size: usize) -> Vec<ModelParams> {
    let axis = tau_grid(0.2, 2.0, size.max(1)).expect("fixed valid range");
    let mut out = Vec::new();
    for &w in &axis {
        for &e in &axis {
            for &t in &axis {
                out.push(ModelParams::new(w, e, t).expect("positive rates"));
            }
        }
    }
    out
}

pub fn run_checks(cfg: &CheckConfig) -> CheckReport {
    let mut b = Builder::default();
    let mut adjudications = Vec::new();

    // General-parameter grid: moment relations on numeric steady states.
    let grid = general_grid(cfg.grid_size);
    let solved: Vec<Option<(ModelParams, MomentSet)>> = grid
        .par_iter()
        .map(|&p| solve(p, cfg.n_max).ok().map(|(_, m)| (p, m)))
        .collect();
    let balance = worst(solved.iter().map(|s| match s {
        Some((p, m)) => {
            (2.0 * p.tau() * m.n1 - (p.omega() - p.eta()) + (p.omega() + p.eta()) * m.d).abs()
        }
        None => f64::NAN,
    }));
    b.at_most("photon_balance", balance, 1e-8);
    let quadratic = worst(solved.iter().map(|s| match s {
        Some((p, m)) => quad_coeffs(*p).map_or(f64::NAN, |q| q.residual(m.n1, m.n2).abs()),
        None => f64::NAN,
    }));
    b.at_most("quadratic_moment_relation", quadratic, 1e-6);

    // Matched-regime numeric points used by several checks.
    let matched_taus = [0.1, 0.5, 1.0, 2.0];
    let matched: Vec<Option<MomentSet>> = matched_taus
        .par_iter()
        .map(|&t| {
            solve(ModelParams::matched(t).unwrap(), cfg.n_max)
                .ok()
                .map(|(_, m)| m)
        })
        .collect();
    let all_points: Vec<Option<(ModelParams, MomentSet)>> = solved
        .iter()
        .cloned()
        .chain(
            matched_taus
                .iter()
                .zip(&matched)
                .map(|(&t, m)| m.map(|m| (ModelParams::matched(t).unwrap(), m))),
        )
        .collect();

    let r1 = worst(all_points.iter().map(|s| {
        match s {
            Some((p, m)) => moment_residuals_with(m, *p, SecondRelation::Minus60)
                .0
                .abs(),
            None => f64::NAN,
        }
    }));
    b.at_most("first_coupled_relation", r1, SURVIVAL_TOL);

    let mut variants = Vec::new();
    for variant in [SecondRelation::Minus6, SecondRelation::Minus60] {
        let r2 = worst(all_points.iter().map(|s| match s {
            Some((p, m)) => moment_residuals_with(m, *p, variant).1.abs(),
            None => f64::NAN,
        }));
        let name = match variant {
            SecondRelation::Minus6 => "second_coupled_relation_minus6",
            SecondRelation::Minus60 => "second_coupled_relation_minus60",
        };
        if variant == SecondRelation::Minus60 {
            b.at_most(name, r2, SURVIVAL_TOL);
        } else {
            b.diagnostic(name, r2, SURVIVAL_TOL);
        }
        variants.push(VariantResidual {
            variant: variant.label().into(),
            residual: r2,
            survives: r2 <= SURVIVAL_TOL,
        });
    }
    let matched_rel = worst(matched_taus.iter().zip(&matched).map(|(&t, m)| match m {
        Some(m) => {
            let (a, c) = matched_residuals(m, t);
            a.abs().max(c.abs())
        }
        None => f64::NAN,
    }));
    b.at_most("matched_coupled_relations", matched_rel, SURVIVAL_TOL);
    adjudications.push(adjudication(
        "second_relation_n2_coefficient",
        variants,
        &mut b,
        "second_relation_single_survivor",
    ));

    // Special-case coefficients against the general formulas.
    let mut matched_coeffs = 0.0f64;
    for k in 1..=100 {
        let t = 0.05 * k as f64;
        let t2 = t * t;
        let p = ModelParams::matched(t).unwrap();
        let q = quad_coeffs(p).expect("positive rates");
        let c = ode_coeffs(p);
        let expect = [
            (q.a, 2.0 * t2),
            (q.b, 1.0),
            (c.a02, 0.0),
            (c.a03, t2 * t2),
            (c.a10, 0.0),
            (c.a11, t2 / 2.0),
            (c.a12, t2 * (2.0 * t2 - 1.0)),
            (c.a20, -t2 / 2.0),
            (c.a21, -t2),
            (c.a22, t2),
        ];
        for (got, want) in expect {
            matched_coeffs = matched_coeffs.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    b.at_most("matched_coefficients", matched_coeffs, 1e-12);

    let closed_vs_system =
        worst(
            tau_grid(0.0, 3.0, 50)
                .unwrap()
                .into_iter()
                .map(|t| match special_system_solve(t) {
                    Ok((n1, n2, _)) => {
                        let (c1, c2) = second_order_closed_form(t);
                        (n1 - c1).abs().max((n2 - c2).abs())
                    }
                    Err(_) => f64::NAN,
                }),
        );
    b.at_most("closed_form_vs_linear_system", closed_vs_system, 1e-12);

    let (s1, s2) = second_order_closed_form(0.0);
    b.at_most("second_order_tau0_mean", (s1 - 0.64).abs(), 1e-12);
    b.at_most("second_order_tau0_second_moment", (s2 - 1.0).abs(), 1e-12);
    let q0 = mandel_q(s1, s2).unwrap_or(f64::NAN);
    b.at_most("second_order_tau0_q", (q0 + 0.0775).abs(), 1e-4);
    let (o1, o2) = second_order_closed_form(std::f64::consts::FRAC_1_SQRT_2);
    b.at_most(
        "second_order_optimum_q",
        (mandel_q(o1, o2).unwrap_or(f64::NAN) + 0.15).abs(),
        0.005,
    );
    let argmin = second_order_q_argmin(0.1, 3.0, 2901);
    b.push(
        "second_order_optimum_location",
        argmin,
        0.8,
        (0.6..=0.8).contains(&argmin),
        true,
    );

    // Exact strong-coupling numbers.
    let ex = exact_moments();
    b.at_most("exact_mean", (ex.n1 - 0.630843).abs(), 1e-5);
    b.at_most("exact_second_moment", (ex.n2 - 1.0).abs(), 1e-6);
    b.at_most(
        "exact_q",
        (ex.q.unwrap_or(f64::NAN) + 0.0456627).abs(),
        1e-5,
    );

    let mut rec_variants = Vec::new();
    for variant in [Recurrence::Reciprocal, Recurrence::ClosedForm] {
        let m = MomentSet::from_distribution(
            &crate::observables::PhotonDistribution::new(recurrence_distribution(variant, 60))
                .expect("normalized"),
        );
        let (r, _) = matched_residuals(&m, 0.0);
        let residual = (m.n2 - 1.0).abs().max(r.abs());
        let name = match variant {
            Recurrence::Reciprocal => "recurrence_reciprocal",
            Recurrence::ClosedForm => "recurrence_closed_form",
        };
        if variant == Recurrence::ClosedForm {
            b.at_most(name, residual, SURVIVAL_TOL);
        } else {
            b.diagnostic(name, residual, SURVIVAL_TOL);
        }
        rec_variants.push(VariantResidual {
            variant: variant.label().into(),
            residual,
            survives: residual <= SURVIVAL_TOL,
        });
    }
    adjudications.push(adjudication(
        "strong_coupling_recurrence",
        rec_variants,
        &mut b,
        "recurrence_single_survivor",
    ));

    // Strong-coupling convergence of numeric steady states.
    let exact = exact_distribution(1e-17).expect("valid tolerance");
    let tv: Vec<f64> = [0.05, 0.04, 0.03, 0.02]
        .par_iter()
        .map(
            |&t| match solve(ModelParams::matched(t).unwrap(), cfg.n_max) {
                Ok((res, _)) => photon_distribution(&res.rho).total_variation(exact.probs()),
                Err(_) => f64::NAN,
            },
        )
        .collect();
    b.at_most("strong_coupling_tv_tau_0.05", tv[0], 0.05);
    let rises = tv.windows(2).filter(|w| !(w[1] < w[0])).count() as f64;
    b.at_most("strong_coupling_tv_monotone", rises, 0.0);

    // Inversion link and bounds in the matched regime.
    let link = worst(matched.iter().map(|m| match m {
        Some(m) => (m.n1 - (1.0 - m.d) / 2.0).abs(),
        None => f64::NAN,
    }));
    b.at_most("matched_inversion_link", link, 1e-8);
    let bound = worst(matched_taus.iter().zip(&matched).map(|(&t, m)| match m {
        Some(m) => (m.n1 - 1.0).max(m.n1 - 1.0 / (2.0 * t * t)).max(0.0),
        None => f64::NAN,
    }));
    b.at_most("matched_mean_bounds", bound, 1e-9);

    // Self-quenching at strong pump.
    match solve(ModelParams::matched(5.0).unwrap(), cfg.n_max) {
        Ok((_, m)) => {
            b.at_most("self_quenching_mean", m.n1, 0.03);
            b.push("self_quenching_inversion", m.d, 0.9, m.d > 0.9, true);
        }
        Err(_) => {
            b.at_most("self_quenching_mean", f64::NAN, 0.03);
            b.push("self_quenching_inversion", f64::NAN, 0.9, false, true);
        }
    }

    // Numeric vs second-order curves.
    let fig: Vec<Option<(f64, f64)>> = tau_grid(0.1, 3.0, 30)
        .unwrap()
        .par_iter()
        .map(|&t| {
            solve(ModelParams::matched(t).unwrap(), cfg.n_max)
                .ok()
                .map(|(_, m)| {
                    let (a1, a2) = second_order_closed_form(t);
                    let dq = (m.q.unwrap_or(f64::NAN) - mandel_q(a1, a2).unwrap_or(f64::NAN)).abs();
                    ((m.n1 - a1).abs(), dq)
                })
        })
        .collect();
    b.at_most(
        "order2_mean_agreement",
        worst(fig.iter().map(|x| x.map_or(f64::NAN, |v| v.0))),
        0.03,
    );
    b.at_most(
        "order2_q_agreement",
        worst(fig.iter().map(|x| x.map_or(f64::NAN, |v| v.1))),
        0.03,
    );

    let all_required_pass = b.checks.iter().all(|c| !c.required || c.pass);
    CheckReport {
        checks: b.checks,
        adjudications,
        all_required_pass,
    }
}

fn adjudication(
    discrepancy: &str,
    variants: Vec<VariantResidual>,
    b: &mut Builder,
    survivor_check: &str,
) -> Adjudication {
    let surviving: Vec<String> = variants
        .iter()
        .filter(|v| v.survives)
        .map(|v| v.variant.clone())
        .collect();
    let count = surviving.len() as f64;
    b.push(survivor_check, count, 1.0, surviving.len() == 1, true);
    Adjudication {
        discrepancy: discrepancy.into(),
        variants,
        surviving,
    }
}

/// Grid minimizer of the second-order Mandel Q over `[lo, hi]`.
pub fn second_order_q_argmin(lo: f64, hi: f64, points: usize) -> f64 {
    tau_grid(lo, hi, points)
        .expect("valid range")
        .into_iter()
        .map(|t| {
            let (n1, n2) = second_order_closed_form(t);
            (t, mandel_q(n1, n2).unwrap_or(f64::INFINITY))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| t)
        .expect("non-empty grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_propagates_nan() {
        assert_eq!(worst([1.0, 3.0, 2.0]), 3.0);
        assert!(worst([1.0, f64::NAN]).is_nan());
        assert_eq!(worst(std::iter::empty()), 0.0);
    }

    #[test]
    fn argmin_near_inverse_sqrt_two() {
        let t = second_order_q_argmin(0.1, 3.0, 2901);
        assert!((0.6..=0.8).contains(&t), "argmin {t}");
    }
}
