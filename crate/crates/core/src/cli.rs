//! Batch front end: `cascade-fpe <solve|oracle|mc|moments|residual> --scenario
//! <file> --out <dir>`.
//!
//! Every subcommand writes tidy CSV files into the output directory and prints
//! a one-line summary. Failures print a JSON object on standard error and exit
//! with a code from [`ExitClass`]. Floats are written in Rust's shortest
//! round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::analysis::{moment, moment_closed_form};
use crate::error::Error;
use crate::initial::InitialCondition;
use crate::montecarlo::{
    delta_cdf, field_cdf, histogram, ks_critical, ks_distance, sample_from_initial, PathEnsemble,
};
use crate::oracle::{fd_solve, max_relative_deviation, residual_with_noise, FdConfig};
use crate::propagator::{solve_at, solve_delta, solve_grid, DensityField, QuadratureConfig};
use crate::scenario::{FdSpec, Scenario};

/// Environment variable selecting the worker thread count. Results do not
/// depend on its value.
pub const THREADS_ENV: &str = "CASCADE_FPE_THREADS";

/// Tolerated mass drift of a finite-difference run.
pub const FD_MASS_DRIFT_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Exact density on the scenario grid.
    Solve,
    /// Crank–Nicolson run compared against the exact density.
    Oracle,
    /// Monte-Carlo ensemble with a Kolmogorov–Smirnov check.
    Mc,
    /// Moments from closed form, quadrature and Monte Carlo.
    Moments,
    /// Equation residual of the exact density at interior points.
    Residual,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "cascade-fpe",
    version,
    about = "Exact cascade Fokker-Planck propagator and its oracles"
)]
pub struct Args {
    #[arg(value_enum)]
    pub mode: Mode,
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides mc.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides quadrature.gh_order.
    #[arg(long)]
    pub gh_order: Option<usize>,
    /// Turns on order-doubling error estimates.
    #[arg(long)]
    pub refine: bool,
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitClass {
    Success = 0,
    Io = 1,
    InvalidScenario = 2,
    MassAudit = 3,
    Numeric = 4,
    TestRejected = 5,
}

impl ExitClass {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub error: ExitClass,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn new(class: ExitClass, message: impl Into<String>) -> Self {
        CliError {
            error: class,
            message: message.into(),
            exit_code: class.code(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let class = match e {
            Error::Invalid(_) | Error::Unsupported(_) => ExitClass::InvalidScenario,
            Error::MassAudit(_) => ExitClass::MassAudit,
            Error::ScaleOutOfRange { .. }
            | Error::Domain(_)
            | Error::DegenerateMeasure(_)
            | Error::Range(_)
            | Error::Contract(_) => ExitClass::Numeric,
        };
        CliError::new(class, e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(ExitClass::Io, format!("{}: {e}", path.display()))
}

/// Summary lines plus an optional failure detected after artifacts were
/// written (audit or statistical rejection).
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub lines: Vec<String>,
    pub failure: Option<CliError>,
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Loads the scenario, applies command-line overrides and runs one subcommand.
pub fn run(args: &Args) -> Result<Report, CliError> {
    let mut scenario = Scenario::load(&args.scenario)
        .map_err(|e| CliError::new(ExitClass::InvalidScenario, e.to_string()))?;
    apply_overrides(&mut scenario, args)?;
    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    match args.mode {
        Mode::Solve => run_solve(&scenario, &args.out),
        Mode::Oracle => run_oracle(&scenario, &args.out),
        Mode::Mc => run_mc(&scenario, &args.out),
        Mode::Moments => run_moments(&scenario, &args.out),
        Mode::Residual => run_residual(&scenario, &args.out),
    }
}

fn apply_overrides(s: &mut Scenario, args: &Args) -> Result<(), CliError> {
    let order = args.gh_order.unwrap_or(s.quadrature.gh_order());
    let refine = args.refine || s.quadrature.refine();
    s.quadrature = QuadratureConfig::new(order, refine)
        .map_err(|e| CliError::new(ExitClass::InvalidScenario, e.to_string()))?;
    if let Some(seed) = args.seed {
        if let Some(mc) = s.mc.as_mut() {
            mc.seed = seed;
        }
    }
    Ok(())
}

fn write(path: PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|e| io_error(&path, e))
}

fn exact_field(s: &Scenario) -> Result<DensityField, CliError> {
    Ok(solve_grid(
        &s.profile,
        &s.initial,
        s.lambda,
        &s.grid,
        &s.quadrature,
    )?)
}

fn run_solve(s: &Scenario, out: &Path) -> Result<Report, CliError> {
    let field = exact_field(s)?;
    let mut csv = String::from(if field.error.is_some() {
        "y,v,P,error_estimate\n"
    } else {
        "y,v,P\n"
    });
    for (i, y) in field.grid.nodes().enumerate() {
        let _ = write!(
            csv,
            "{},{},{}",
            fmt_f64(y),
            fmt_f64(y.exp()),
            fmt_f64(field.values[i])
        );
        if let Some(err) = &field.error {
            let _ = write!(csv, ",{}", fmt_f64(err[i]));
        }
        csv.push('\n');
    }
    write(out.join("solve.csv"), &csv)?;
    let mut line = format!(
        "solve: lambda={} nodes={} mass={}",
        fmt_f64(field.lambda),
        field.values.len(),
        fmt_f64(field.mass())
    );
    if let Some(e) = field.max_error() {
        let _ = write!(line, " max_error_estimate={}", fmt_f64(e));
    }
    Ok(Report {
        lines: vec![line],
        failure: None,
    })
}

fn fd_config(s: &Scenario, ic: &InitialCondition) -> Result<FdConfig, CliError> {
    let spec = s.fd.unwrap_or(FdSpec {
        n_y: 2048,
        n_steps: 2000,
        y_min: None,
        y_max: None,
    });
    let cfg = match (spec.y_min, spec.y_max) {
        (Some(lo), Some(hi)) => FdConfig::new(lo, hi, spec.n_y, spec.n_steps),
        _ => FdConfig::auto(&s.profile, ic, s.lambda, spec.n_y, spec.n_steps),
    };
    cfg.map_err(|e| CliError::new(ExitClass::InvalidScenario, e.to_string()))
}

fn run_oracle(s: &Scenario, out: &Path) -> Result<Report, CliError> {
    let cfg = fd_config(s, &s.initial)?;
    let ic = match s.initial {
        InitialCondition::Dirac { v0 } => cfg.dirac_stand_in(v0)?,
        ref other => other.clone(),
    };
    let fd = fd_solve(&s.profile, &ic, s.lambda, &cfg)?;
    let grid = cfg.grid();
    let exact = solve_grid(
        &s.profile,
        &ic,
        s.lambda,
        &grid,
        &s.quadrature.with_refine(false),
    )?;

    let mut field_csv = String::from("y,v,P\n");
    let mut cmp_csv = String::from("y,P_exact,P_fd,abs_diff\n");
    for (i, y) in grid.nodes().enumerate() {
        let (pe, pf) = (exact.values[i], fd.field.values[i]);
        let _ = writeln!(
            field_csv,
            "{},{},{}",
            fmt_f64(y),
            fmt_f64(y.exp()),
            fmt_f64(pf)
        );
        let _ = writeln!(
            cmp_csv,
            "{},{},{},{}",
            fmt_f64(y),
            fmt_f64(pe),
            fmt_f64(pf),
            fmt_f64((pe - pf).abs())
        );
    }
    write(out.join("fd_field.csv"), &field_csv)?;
    write(out.join("comparison.csv"), &cmp_csv)?;

    let deviation = max_relative_deviation(&exact.values, &fd.field.values);
    let summary = format!(
        "max_relative_deviation,mass_initial,mass_final,mass_drift,boundary_ratio,n_y,n_steps\n{},{},{},{},{},{},{}\n",
        fmt_f64(deviation),
        fmt_f64(fd.mass_initial),
        fmt_f64(fd.mass_final),
        fmt_f64(fd.mass_drift()),
        fmt_f64(fd.boundary_ratio),
        cfg.n_y(),
        cfg.n_steps()
    );
    write(out.join("oracle_summary.csv"), &summary)?;

    let mut lines = vec![format!(
        "oracle: max_relative_deviation={} mass_drift={}",
        fmt_f64(deviation),
        fmt_f64(fd.mass_drift())
    )];
    lines.extend(fd.warnings.iter().map(|w| format!("warning: {w}")));
    let failure = if !fd.warnings.is_empty() {
        Some(CliError::new(ExitClass::MassAudit, fd.warnings.join("; ")))
    } else if fd.mass_drift().abs() > FD_MASS_DRIFT_LIMIT {
        Some(CliError::new(
            ExitClass::MassAudit,
            format!(
                "mass drift {} exceeds {FD_MASS_DRIFT_LIMIT:e}",
                fmt_f64(fd.mass_drift())
            ),
        ))
    } else {
        None
    };
    Ok(Report { lines, failure })
}

fn ensemble(s: &Scenario) -> Result<PathEnsemble, CliError> {
    let mc = s.mc.ok_or_else(|| {
        CliError::new(ExitClass::InvalidScenario, "scenario has no \"mc\" section")
    })?;
    Ok(sample_from_initial(
        &s.profile, &s.initial, s.lambda, mc.n, mc.scheme, mc.seed,
    )?)
}

fn run_mc(s: &Scenario, out: &Path) -> Result<Report, CliError> {
    let ens = ensemble(s)?;
    let mc = s.mc.expect("checked by ensemble");
    let ks = match s.initial {
        InitialCondition::Dirac { v0 } => ks_distance(&ens, delta_cdf(&s.profile, v0, s.lambda)?)?,
        _ => ks_distance(&ens, field_cdf(&exact_field(s)?))?,
    };
    let critical = ks_critical(ens.len(), mc.significance);
    let pass = ks <= critical;

    let mut csv = String::with_capacity(ens.len() * 24);
    csv.push_str("v\n");
    for v in &ens.samples {
        csv.push_str(&fmt_f64(*v));
        csv.push('\n');
    }
    write(out.join("ensemble.csv"), &csv)?;
    let mut hist = String::from("bin_center,density\n");
    for (c, d) in histogram(&ens.samples, mc.bins) {
        let _ = writeln!(hist, "{},{}", fmt_f64(c), fmt_f64(d));
    }
    write(out.join("histogram.csv"), &hist)?;
    write(
        out.join("ks.csv"),
        &format!(
            "n,ks_statistic,critical_value,significance,pass\n{},{},{},{},{}\n",
            ens.len(),
            fmt_f64(ks),
            fmt_f64(critical),
            fmt_f64(mc.significance),
            pass
        ),
    )?;
    let line = format!(
        "mc: n={} ks={} critical={} {}",
        ens.len(),
        fmt_f64(ks),
        fmt_f64(critical),
        if pass { "PASS" } else { "FAIL" }
    );
    let failure = (!pass).then(|| {
        CliError::new(
            ExitClass::TestRejected,
            format!(
                "KS statistic {} above critical value {}",
                fmt_f64(ks),
                fmt_f64(critical)
            ),
        )
    });
    Ok(Report {
        lines: vec![line],
        failure,
    })
}

fn run_moments(s: &Scenario, out: &Path) -> Result<Report, CliError> {
    let orders = s.moments.clone().unwrap_or_default().orders;
    let ens = match (&s.mc, &s.initial) {
        (Some(_), InitialCondition::Dirac { .. } | InitialCondition::LogNormal { .. }) => {
            Some(ensemble(s)?)
        }
        _ => None,
    };
    let mut csv = String::from("n,moment,closed_form,mc_estimate\n");
    for &n in &orders {
        let m = moment(&s.profile, &s.initial, n, s.lambda, &s.quadrature)?;
        let closed = moment_closed_form(&s.profile, &s.initial, n, s.lambda)?;
        let mc = ens.as_ref().map(|e| e.moment(n).0);
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(csv, "{n},{},{},{}", fmt_f64(m), opt(closed), opt(mc));
    }
    write(out.join("moments.csv"), &csv)?;
    Ok(Report {
        lines: vec![format!(
            "moments: orders={orders:?} lambda={}",
            fmt_f64(s.lambda)
        )],
        failure: None,
    })
}

fn run_residual(s: &Scenario, out: &Path) -> Result<Report, CliError> {
    let n = s.residual.unwrap_or_default().n_points.max(1);
    let g = s.grid;
    let (lo, hi) = (
        g.y_min + 0.1 * (g.y_max - g.y_min),
        g.y_max - 0.1 * (g.y_max - g.y_min),
    );
    let field = |l: f64, y: f64| match s.initial {
        InitialCondition::Dirac { v0 } => solve_delta(&s.profile, v0, l, y),
        _ => solve_at(&s.profile, &s.initial, l, y, &s.quadrature),
    };
    let mut csv = String::from("lambda,y,residual,scale\n");
    let mut worst = 0.0_f64;
    for i in 0..n {
        let y = if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        };
        let r = residual_with_noise(&s.profile, field, s.lambda, y, 0.0)?;
        worst = worst.max(r.relative());
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_f64(r.lambda),
            fmt_f64(r.y),
            fmt_f64(r.residual),
            fmt_f64(r.scale)
        );
    }
    write(out.join("residual.csv"), &csv)?;
    Ok(Report {
        lines: vec![format!(
            "residual: points={n} max_relative={}",
            fmt_f64(worst)
        )],
        failure: None,
    })
}

/// Configures the worker pool from [`THREADS_ENV`].
pub fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        CliError::new(
            ExitClass::InvalidScenario,
            format!("{THREADS_ENV} must be a positive integer, got '{value}'"),
        )
    })?;
    if n == 0 {
        return Err(CliError::new(
            ExitClass::InvalidScenario,
            format!("{THREADS_ENV} must be >= 1"),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new(ExitClass::InvalidScenario, e.to_string()))
}

/// Runs the tool and returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let outcome = init_threads().and_then(|()| run(&args));
    match outcome {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            match report.failure {
                Some(f) => {
                    eprintln!("{}", f.to_json());
                    f.exit_code
                }
                None => ExitClass::Success.code(),
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code
        }
    }
}
