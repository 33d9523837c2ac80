//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use atomlaser::analytic::{quad_coeffs, second_order_closed_form};
use atomlaser::check::{run_checks, CheckConfig};
use atomlaser::liouvillian::steady_state;
use atomlaser::observables::{mandel_q, moments, photon_distribution};
use atomlaser::special::erf;
use atomlaser::strong_coupling::{exact_distribution, exact_moments};
use atomlaser::{ModelParams, MomentSet, SpaceConfig};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn numeric(tau: f64, omega: f64, eta: f64) -> Option<MomentSet> {
    let p = ModelParams::new(omega, eta, tau).ok()?;
    steady_state(p, SpaceConfig::default(), 1e-9)
        .ok()
        .map(|r| moments(&r.rho))
}

/// Best of a few timed runs, to keep scheduler noise out of the bound.
fn timed<T>(runs: usize, mut f: impl FnMut() -> T) -> (T, Duration) {
    let mut best = Duration::MAX;
    let mut last = None;
    for _ in 0..runs {
        let start = Instant::now();
        let v = f();
        best = best.min(start.elapsed());
        last = Some(v);
    }
    (last.expect("at least one run"), best)
}

/// Exact moments straight from ρ(n) ∝ 2⁻ⁿ (n+1)/Γ(n+3/2) with Γ built from
/// Γ(1/2) = √π, independent of the library's recurrence.
fn series_oracle() -> (f64, f64) {
    let mut gamma = PI.sqrt() / 2.0;
    let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for n in 0..80 {
        let x = n as f64;
        let w = 0.5f64.powi(n) * (x + 1.0) / gamma;
        z += w;
        s1 += x * w;
        s2 += x * x * w;
        gamma *= x + 1.5;
    }
    (s1 / z, s2 / z)
}

fn exact_strong_coupling() -> Outcome {
    let (m, elapsed) = timed(5, exact_moments);
    let q = m.q.unwrap_or(f64::NAN);
    let (o1, o2) = series_oracle();
    let pass = (m.n1 - 0.630843).abs() <= 1e-5
        && (m.n2 - 1.0).abs() <= 1e-6
        && (q + 0.0456627).abs() <= 1e-5
        && (m.n1 - o1).abs() < 1e-12
        && (m.n2 - o2).abs() < 1e-12
        && (erf(FRAC_1_SQRT_2) - 0.682689492137).abs() <= 1e-11
        && elapsed < Duration::from_millis(1);
    outcome(
        pass,
        format!(
            "<n> = {:.7}, <n^2> = {:.7}, Q = {q:.7}, {elapsed:?}",
            m.n1, m.n2
        ),
    )
}

fn second_order_zero_loss() -> Outcome {
    let (n1, n2) = second_order_closed_form(0.0);
    let q = mandel_q(n1, n2).unwrap_or(f64::NAN);
    let pass =
        (n1 - 0.64).abs() <= 1e-12 && (n2 - 1.0).abs() <= 1e-12 && (q + 0.0775).abs() <= 1e-4;
    outcome(pass, format!("<n> = {n1}, <n^2> = {n2}, Q = {q:.6}"))
}

fn sub_poissonian_optimum() -> Outcome {
    let ((q, argmin), elapsed) = timed(5, || {
        let (a, b) = second_order_closed_form(FRAC_1_SQRT_2);
        let q = mandel_q(a, b).unwrap_or(f64::NAN);
        let argmin = (0..=2900)
            .map(|i| 0.1 + 2.9 * i as f64 / 2900.0)
            .map(|t| {
                let (a, b) = second_order_closed_form(t);
                (t, mandel_q(a, b).unwrap_or(f64::INFINITY))
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(t, _)| t)
            .unwrap_or(f64::NAN);
        (q, argmin)
    });
    let pass = (q + 0.15).abs() <= 0.005
        && (0.6..=0.8).contains(&argmin)
        && elapsed < Duration::from_millis(10);
    outcome(
        pass,
        format!("Q(1/sqrt2) = {q:.6}, argmin = {argmin:.4}, {elapsed:?}"),
    )
}

fn numeric_vs_second_order() -> Outcome {
    let start = Instant::now();
    let grid: Vec<f64> = (0..30).map(|i| 0.1 + 2.9 * i as f64 / 29.0).collect();
    let diffs: Vec<Option<(f64, f64)>> = grid
        .par_iter()
        .map(|&t| {
            let m = numeric(t, t, 0.0)?;
            let (a1, a2) = second_order_closed_form(t);
            Some(((m.n1 - a1).abs(), (m.q? - mandel_q(a1, a2)?).abs()))
        })
        .collect();
    let elapsed = start.elapsed();
    if diffs.iter().any(Option::is_none) {
        return outcome(false, "a grid point failed to solve".into());
    }
    let dn = diffs.iter().flatten().map(|d| d.0).fold(0.0, f64::max);
    let dq = diffs.iter().flatten().map(|d| d.1).fold(0.0, f64::max);
    let pass = dn < 0.03 && dq < 0.03 && elapsed < Duration::from_secs(30);
    outcome(
        pass,
        format!("max |dn| = {dn:.4}, max |dQ| = {dq:.4}, {elapsed:.2?}"),
    )
}

fn quadratic_relation_grid() -> Outcome {
    let start = Instant::now();
    let axis: Vec<f64> = (0..5).map(|i| 0.2 + 1.8 * i as f64 / 4.0).collect();
    let mut points = Vec::with_capacity(125);
    for &w in &axis {
        for &e in &axis {
            for &t in &axis {
                points.push((w, e, t));
            }
        }
    }
    let residuals: Vec<f64> = points
        .par_iter()
        .map(|&(w, e, t)| {
            let p = ModelParams::new(w, e, t).unwrap();
            match (numeric(t, w, e), quad_coeffs(p)) {
                (Some(m), Ok(q)) => q.residual(m.n1, m.n2).abs(),
                _ => f64::NAN,
            }
        })
        .collect();
    let elapsed = start.elapsed();
    let worst = residuals.iter().copied().fold(
        0.0,
        |a: f64, r| if r.is_nan() { f64::NAN } else { a.max(r) },
    );
    let pass = worst < 1e-6 && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "{} points, worst residual {worst:.2e}, {elapsed:.2?}",
            points.len()
        ),
    )
}

fn inversion_link() -> Outcome {
    let mut worst_link = 0.0f64;
    let mut bounds_ok = true;
    for tau in [0.1, 0.5, 1.0, 2.0] {
        let Some(m) = numeric(tau, tau, 0.0) else {
            return outcome(false, format!("tau = {tau} failed to solve"));
        };
        worst_link = worst_link.max((m.n1 - (1.0 - m.d) / 2.0).abs());
        bounds_ok &= m.n1 <= 1.0 && m.n1 <= 1.0 / (2.0 * tau * tau) + 1e-9;
    }
    outcome(
        worst_link < 1e-8 && bounds_ok,
        format!("worst |<n> - (1-D)/2| = {worst_link:.2e}, bounds hold: {bounds_ok}"),
    )
}

fn strong_coupling_convergence() -> Outcome {
    let exact = exact_distribution(1e-17).expect("valid tolerance");
    let mut tv = Vec::new();
    for tau in [0.05, 0.04, 0.03, 0.02] {
        let p = ModelParams::matched(tau).unwrap();
        match steady_state(p, SpaceConfig::default(), 1e-9) {
            Ok(r) => tv.push(photon_distribution(&r.rho).total_variation(exact.probs())),
            Err(e) => return outcome(false, format!("tau = {tau}: {e}")),
        }
    }
    let monotone = tv.windows(2).all(|w| w[1] < w[0]);
    outcome(
        tv[0] < 0.05 && monotone,
        format!(
            "TV at 0.05..0.02 = {:.2e} {:.2e} {:.2e} {:.2e}",
            tv[0], tv[1], tv[2], tv[3]
        ),
    )
}

fn self_quenching() -> Outcome {
    match numeric(5.0, 5.0, 0.0) {
        Some(m) => outcome(
            m.n1 < 0.03 && m.d > 0.9,
            format!("<n> = {:.4}, D = {:.4}", m.n1, m.d),
        ),
        None => outcome(false, "solve failed".into()),
    }
}

fn adjudication() -> Outcome {
    let report = run_checks(&CheckConfig::default());
    let mut pass = report.adjudications.len() == 2;
    let mut parts = Vec::new();
    for a in &report.adjudications {
        pass &= a.surviving.len() == 1;
        parts.push(format!("{}: {:?}", a.discrepancy, a.surviving));
    }
    outcome(pass, parts.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 exact strong-coupling moments", exact_strong_coupling),
        ("2 second-order values at zero loss", second_order_zero_loss),
        ("3 sub-Poissonian optimum", sub_poissonian_optimum),
        ("4 numeric vs second-order curves", numeric_vs_second_order),
        (
            "5 quadratic relation on general grid",
            quadratic_relation_grid,
        ),
        ("6 inversion link and bounds", inversion_link),
        ("7 strong-coupling convergence", strong_coupling_convergence),
        ("8 self-quenching", self_quenching),
        ("9 single surviving variant", adjudication),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
