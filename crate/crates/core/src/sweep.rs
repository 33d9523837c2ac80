//! Cavity-loss sweeps and CSV emission.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::analytic::{first_order_closed_form, second_order_closed_form};
use crate::error::{invalid, Error, Result};
use crate::fock::SpaceConfig;
use crate::liouvillian::{steady_state_with, ModelParams, SteadyStateOptions};
use crate::observables::{mandel_q, moments};

pub const CSV_HEADER: &str =
    "tau,mean_n_numeric,q_numeric,mean_n_order2,q_order2,mean_n_order1,q_order1";
pub const DIST_HEADER: &str = "n,rho_n";

/// One grid point of a sweep. `None` marks an undefined Mandel Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub mean_n_numeric: f64,
    pub q_numeric: Option<f64>,
    pub mean_n_order2: f64,
    pub q_order2: Option<f64>,
    pub mean_n_order1: f64,
    pub q_order1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    /// Fixed pump rate; `None` ties it to the cavity rate (`ω = τ`).
    pub omega: Option<f64>,
    pub eta: f64,
    pub n_max: usize,
    pub steady: SteadyStateOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            tau_min: 0.05,
            tau_max: 3.0,
            points: 60,
            omega: None,
            eta: 0.0,
            n_max: 20,
            steady: SteadyStateOptions::default(),
        }
    }
}

impl SweepConfig {
    /// Whether the closed-form approximations apply (`ω = τ`, `η = 0`).
    pub fn is_matched(&self) -> bool {
        self.omega.is_none() && self.eta == 0.0
    }

    fn params(&self, tau: f64) -> Result<ModelParams> {
        ModelParams::new(self.omega.unwrap_or(tau), self.eta, tau)
    }
}

/// Grid points that could not be solved.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepError {
    pub failures: Vec<(f64, Error)>,
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} grid point(s) failed:", self.failures.len())?;
        for (tau, e) in &self.failures {
            write!(f, "\n  tau = {tau}: {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SweepError {}

/// `points` equally spaced values from `min` to `max` inclusive.
pub fn tau_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && min >= 0.0) {
        return Err(invalid(
            "tau-min",
            format!("must be finite and >= 0, got {min}"),
        ));
    }
    if !(max.is_finite() && max >= min) {
        return Err(invalid(
            "tau-max",
            format!("must be finite and >= tau-min, got {max}"),
        ));
    }
    match points {
        0 => Err(invalid("points", "must be at least 1")),
        1 => Ok(vec![min]),
        _ => Ok((0..points)
            .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
            .collect()),
    }
}

fn row_at(cfg: &SweepConfig, space: SpaceConfig, tau: f64) -> Result<SweepRow> {
    let res = steady_state_with(cfg.params(tau)?, space, &cfg.steady)?;
    let m = moments(&res.rho);
    let ((n2_mean, n2_sq), (n1_mean, n1_sq)) = if cfg.is_matched() {
        (second_order_closed_form(tau), first_order_closed_form(tau))
    } else {
        ((f64::NAN, f64::NAN), (f64::NAN, f64::NAN))
    };
    Ok(SweepRow {
        tau,
        mean_n_numeric: m.n1,
        q_numeric: m.q,
        mean_n_order2: n2_mean,
        q_order2: mandel_q(n2_mean, n2_sq),
        mean_n_order1: n1_mean,
        q_order1: mandel_q(n1_mean, n1_sq),
    })
}

/// Solves every grid point (concurrently) and returns the rows in ascending
/// `τ`, or every failure if any point fails.
pub fn run_sweep(cfg: &SweepConfig) -> std::result::Result<Vec<SweepRow>, SweepError> {
    let single = |e: Error| SweepError {
        failures: vec![(f64::NAN, e)],
    };
    let grid = tau_grid(cfg.tau_min, cfg.tau_max, cfg.points).map_err(single)?;
    let space = SpaceConfig::new(cfg.n_max).map_err(single)?;
    let results: Vec<Result<SweepRow>> = grid
        .par_iter()
        .map(|&tau| row_at(cfg, space, tau))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (tau, r) in grid.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((*tau, e)),
        }
    }
    if failures.is_empty() {
        Ok(rows)
    } else {
        Err(SweepError { failures })
    }
}

/// C-style `%.12e`: twelve mantissa digits, signed exponent of at least two
/// digits. Non-finite values print as `nan`, `inf` or `-inf`.
pub fn format_sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent always present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), format_sci)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            format_sci(r.tau),
            format_sci(r.mean_n_numeric),
            format_opt(r.q_numeric),
            format_sci(r.mean_n_order2),
            format_opt(r.q_order2),
            format_sci(r.mean_n_order1),
            format_opt(r.q_order1),
        )?;
    }
    Ok(())
}

pub fn write_distribution_csv<W: Write>(probs: &[f64], mut w: W) -> io::Result<()> {
    writeln!(w, "{DIST_HEADER}")?;
    for (n, p) in probs.iter().enumerate() {
        writeln!(w, "{n},{}", format_sci(*p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format_matches_printf() {
        assert_eq!(format_sci(0.0), "0.000000000000e+00");
        assert_eq!(format_sci(1.0), "1.000000000000e+00");
        assert_eq!(format_sci(-0.15), "-1.500000000000e-01");
        assert_eq!(format_sci(123456.0), "1.234560000000e+05");
        assert_eq!(format_sci(2.5e-120), "2.500000000000e-120");
        assert_eq!(format_sci(f64::NAN), "nan");
        assert_eq!(format_sci(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn grid_endpoints() {
        let g = tau_grid(0.1, 3.0, 30).unwrap();
        assert_eq!(g.len(), 30);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[29], 3.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(tau_grid(0.5, 0.5, 1).unwrap(), vec![0.5]);
        assert!(tau_grid(1.0, 0.5, 3).is_err());
        assert!(tau_grid(-1.0, 0.5, 3).is_err());
        assert!(tau_grid(0.1, 0.5, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let row = SweepRow {
            tau: 0.5,
            mean_n_numeric: 0.25,
            q_numeric: None,
            mean_n_order2: 1.0,
            q_order2: Some(-0.1),
            mean_n_order1: 2.0,
            q_order1: Some(0.0),
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "5.000000000000e-01,2.500000000000e-01,nan,1.000000000000e+00,\
             -1.000000000000e-01,2.000000000000e+00,0.000000000000e+00"
        );
        assert_eq!(lines[2], "");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn failing_points_are_reported() {
        let cfg = SweepConfig {
            tau_min: 0.0,
            tau_max: 0.5,
            points: 3,
            ..Default::default()
        };
        let err = run_sweep(&cfg).unwrap_err();
        assert_eq!(err.failures.len(), 1);
        assert_eq!(err.failures[0].0, 0.0);
        assert!(matches!(err.failures[0].1, Error::Degenerate(_)));
    }
}
