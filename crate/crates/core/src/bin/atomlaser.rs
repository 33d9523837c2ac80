use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use atomlaser::analytic::quad_coeffs;
use atomlaser::check::{run_checks, CheckConfig};
use atomlaser::liouvillian::{steady_state_with, SteadyStateOptions, DEFAULT_TOL};
use atomlaser::observables::{moments, photon_distribution};
use atomlaser::strong_coupling::exact_distribution;
use atomlaser::sweep::{format_sci, run_sweep, write_csv, write_distribution_csv, SweepConfig};
use atomlaser::{Error, ModelParams, SpaceConfig};

/// Relative `--out` paths are resolved against this directory when set.
const OUTPUT_DIR_ENV: &str = "ATOMLASER_OUTPUT_DIR";

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "atomlaser",
    version,
    about = "Single-atom laser steady states and photon statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one steady state and report its photon statistics.
    Steady(SteadyArgs),
    /// Sweep tau with omega = tau, eta = 0 and emit figure data as CSV.
    Sweep(SweepArgs),
    /// Emit a photon-number distribution as CSV.
    Dist(DistArgs),
    /// Run the cross-module verification suite and emit a JSON report.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistMode {
    Exact,
    Numeric,
}

#[derive(Args)]
struct RateArgs {
    /// Cavity rate kappa/2g.
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// Pump rate Gamma/2g (defaults to tau).
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// Spontaneous emission rate gamma/2g.
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// Atom-field coupling (dimensional input).
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Cavity decay rate (dimensional input).
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    /// Spontaneous decay rate (dimensional input, default 0).
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Incoherent pump rate (dimensional input).
    #[arg(long, allow_negative_numbers = true)]
    pump: Option<f64>,
}

#[derive(Args)]
struct SteadyArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    tau_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    tau_max: f64,
    #[arg(long, default_value_t = 60)]
    points: usize,
    /// Hold the pump fixed instead of tying it to tau (general sweep).
    #[arg(long, allow_negative_numbers = true)]
    fixed_omega: Option<f64>,
    /// Spontaneous emission rate (general sweep).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eta: f64,
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Worker threads (default: one per core).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long, value_enum)]
    mode: DistMode,
    /// Cavity rate for numeric mode (omega = tau, eta = 0).
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    /// Residual tolerance (numeric) or truncation tolerance (exact).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Points per axis of the (omega, eta, tau) grid.
    #[arg(long, default_value_t = 5)]
    grid_size: usize,
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter { .. } | Error::Domain { .. } => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_USAGE,
            message: format!("i/o error: {e}"),
        }
    }
}

/// Names the offending flag for rate validation errors.
fn flag_error(e: Error) -> Failure {
    match e {
        Error::InvalidParameter { name, reason } => {
            Failure::usage(format!("invalid value for --{name}: {reason}"))
        }
        other => other.into(),
    }
}

fn resolve_params(r: &RateArgs) -> Result<ModelParams, Failure> {
    let dimensionless = r.tau.is_some() || r.omega.is_some() || r.eta.is_some();
    let dimensional = r.g.is_some() || r.kappa.is_some() || r.gamma.is_some() || r.pump.is_some();
    match (dimensionless, dimensional) {
        (true, true) => Err(Failure::usage(
            "give either --tau/--omega/--eta or --g/--kappa/--gamma/--pump, not both",
        )),
        (false, false) => Err(Failure::usage(
            "missing rates: give --tau or --g/--kappa/--pump",
        )),
        (true, false) => {
            let tau = r.tau.ok_or_else(|| Failure::usage("missing --tau"))?;
            ModelParams::new(0.0, 0.0, tau).map_err(flag_error)?;
            ModelParams::new(r.omega.unwrap_or(tau), r.eta.unwrap_or(0.0), tau).map_err(flag_error)
        }
        (false, true) => {
            let g = r.g.ok_or_else(|| Failure::usage("missing --g"))?;
            let kappa = r.kappa.ok_or_else(|| Failure::usage("missing --kappa"))?;
            let pump = r.pump.ok_or_else(|| Failure::usage("missing --pump"))?;
            ModelParams::from_dimensional(g, kappa, r.gamma.unwrap_or(0.0), pump)
                .map_err(flag_error)
        }
    }
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match out {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(path) => {
            let path = match std::env::var_os(OUTPUT_DIR_ENV) {
                Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
                _ => path.clone(),
            };
            let file = File::create(&path)
                .map_err(|e| Failure::usage(format!("cannot create {}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

fn space(nmax: usize) -> Result<SpaceConfig, Failure> {
    SpaceConfig::new(nmax)
        .map_err(|_| Failure::usage("invalid value for --nmax: must be at least 1"))
}

fn check_tol(tol: f64) -> Result<f64, Failure> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(Failure::usage(format!(
            "invalid value for --tol: must be positive, got {tol}"
        )))
    }
}

fn cmd_steady(args: SteadyArgs) -> Result<(), Failure> {
    let p = resolve_params(&args.rates)?;
    let opts = SteadyStateOptions {
        tol: check_tol(args.tol)?,
        ..Default::default()
    };
    let res = steady_state_with(p, space(args.nmax)?, &opts)?;
    let m = moments(&res.rho);
    let dist = photon_distribution(&res.rho);
    let quadratic = quad_coeffs(p).map_or(f64::NAN, |q| q.residual(m.n1, m.n2));
    let balance = 2.0 * p.tau() * m.n1 - (p.omega() - p.eta()) + (p.omega() + p.eta()) * m.d;
    let n_max = res.rho.space().n_max();

    let mut w = open_output(&args.out)?;
    match args.format {
        Format::Csv => {
            writeln!(w, "quantity,value")?;
            writeln!(w, "n_max,{n_max}")?;
            let scalars = [
                ("omega", p.omega()),
                ("eta", p.eta()),
                ("tau", p.tau()),
                ("n1", m.n1),
                ("n2", m.n2),
                ("n3", m.n3),
                ("n4", m.n4),
                ("d", m.d),
                ("q", m.q.unwrap_or(f64::NAN)),
                ("quadratic_residual", quadratic),
                ("balance_residual", balance),
                ("residual_norm", res.residual_norm),
                ("tail_mass", res.tail_mass),
            ];
            for (k, v) in scalars {
                writeln!(w, "{k},{}", format_sci(v))?;
            }
            for (n, v) in dist.probs().iter().enumerate() {
                writeln!(w, "rho_{n},{}", format_sci(*v))?;
            }
        }
        Format::Json => {
            let finite = |x: f64| x.is_finite().then_some(x);
            let report = json!({
                "params": { "omega": p.omega(), "eta": p.eta(), "tau": p.tau() },
                "n_max": n_max,
                "moments": {
                    "n1": m.n1, "n2": m.n2, "n3": m.n3, "n4": m.n4, "d": m.d, "q": m.q,
                },
                "quadratic_residual": finite(quadratic),
                "balance_residual": balance,
                "residual_norm": res.residual_norm,
                "tail_mass": res.tail_mass,
                "distribution": dist.probs(),
            });
            serde_json::to_writer_pretty(&mut w, &report).map_err(io::Error::from)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = SweepConfig {
        tau_min: args.tau_min,
        tau_max: args.tau_max,
        points: args.points,
        omega: args.fixed_omega,
        eta: args.eta,
        n_max: space(args.nmax)?.n_max(),
        steady: SteadyStateOptions {
            tol: check_tol(args.tol)?,
            ..Default::default()
        },
    };
    if let Some(w) = cfg.omega {
        ModelParams::new(w, 0.0, 0.0).map_err(|_| {
            Failure::usage(format!(
                "invalid value for --fixed-omega: must be non-negative, got {w}"
            ))
        })?;
    }
    ModelParams::new(0.0, cfg.eta, 0.0).map_err(flag_error)?;
    atomlaser::sweep::tau_grid(cfg.tau_min, cfg.tau_max, cfg.points).map_err(flag_error)?;

    let result = match args.jobs {
        Some(0) => {
            return Err(Failure::usage(
                "invalid value for --jobs: must be at least 1",
            ))
        }
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::usage(format!("cannot start worker pool: {e}")))?
            .install(|| run_sweep(&cfg)),
        None => run_sweep(&cfg),
    };
    let rows = result.map_err(|e| Failure {
        code: EXIT_NUMERIC,
        message: e.to_string(),
    })?;
    let mut w = open_output(&args.out)?;
    write_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_dist(args: DistArgs) -> Result<(), Failure> {
    let probs = match args.mode {
        DistMode::Exact => {
            let tol = check_tol(args.tol.unwrap_or(1e-17))?;
            exact_distribution(tol)?.probs().to_vec()
        }
        DistMode::Numeric => {
            let tau = args
                .tau
                .ok_or_else(|| Failure::usage("--mode numeric requires --tau"))?;
            let p = ModelParams::matched(tau).map_err(flag_error)?;
            let opts = SteadyStateOptions {
                tol: check_tol(args.tol.unwrap_or(DEFAULT_TOL))?,
                ..Default::default()
            };
            let res = steady_state_with(p, space(args.nmax)?, &opts)?;
            photon_distribution(&res.rho).into_vec()
        }
    };
    let mut w = open_output(&args.out)?;
    write_distribution_csv(&probs, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<(), Failure> {
    if args.grid_size == 0 {
        return Err(Failure::usage(
            "invalid value for --grid-size: must be at least 1",
        ));
    }
    let cfg = CheckConfig {
        grid_size: args.grid_size,
        n_max: space(args.nmax)?.n_max(),
    };
    let report = run_checks(&cfg);
    let mut w = open_output(&args.out)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    for c in &report.checks {
        eprintln!(
            "{} {:<36} value={:<14} threshold={:e}{}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check_name,
            format!("{:.6e}", c.value),
            c.threshold,
            if c.required { "" } else { " (diagnostic)" },
        );
    }
    for a in &report.adjudications {
        eprintln!(
            "adjudication {}: surviving {:?}",
            a.discrepancy, a.surviving
        );
    }
    let failed = report.failed_required();
    if failed.is_empty() {
        Ok(())
    } else {
        let names: Vec<&str> = failed.iter().map(|c| c.check_name.as_str()).collect();
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("required checks failed: {}", names.join(", ")),
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Steady(a) => cmd_steady(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Dist(a) => cmd_dist(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
