//! `np-g2`: command-line front end.
//!
//! Exit status: 0 success, 1 numerical or tolerance failure, 2 usage error.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use np_g2::analysis::{sweep, ClosingOptions, SweepOptions};
use np_g2::checks::{oracle_check, residual_check, DEFAULT_RESIDUAL_TOL};
use np_g2::integrate::{solve, EventThresholds, SolveConfig, Termination};
use np_g2::io::{write_sweep_csv, SolveSummary, TrajectoryTable};
use np_g2::np_system::{OracleName, TauElement};
use np_g2::Error;

#[derive(Parser)]
#[command(name = "np-g2", version, about = "SU(2)^3-invariant nearly parallel G2-structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a closed-form solution against the system at interior points.
    OracleCheck {
        /// sine_cone, round_sphere or squashed_sphere
        oracle: OracleName,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Also write the sampled closed form as a trajectory CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve the singular initial value problem for one value of a.
    Solve {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Trajectory CSV.
        #[arg(long)]
        output: Option<PathBuf>,
        /// JSON summary; printed to stdout when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Solve over a uniform grid of a values.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        a_from: f64,
        #[arg(long, allow_hyphen_values = true)]
        a_to: f64,
        #[arg(long)]
        steps: usize,
        /// Allow a range containing 0; grid points at 0 are dropped.
        #[arg(long)]
        split: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Sweep CSV; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a trajectory CSV against the system using finite differences.
    Residual {
        input: PathBuf,
        /// Defaults to the file's `lambda` footer.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RESIDUAL_TOL)]
        tol: f64,
    },
    /// Apply a symmetry to a trajectory CSV.
    Transform {
        /// o, 12, 13, 23, 123 or 132
        #[arg(long)]
        tau: TauElement,
        input: PathBuf,
        /// stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 3.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    #[arg(long, default_value_t = 8)]
    series_order: usize,
    #[arg(long, default_value_t = 1e-3)]
    t_switch: f64,
    /// Uniform output samples.
    #[arg(long, default_value_t = 300)]
    samples: usize,
    #[arg(long, default_value_t = EventThresholds::default().h0_zero_tol)]
    h0_zero_tol: f64,
    #[arg(long, default_value_t = EventThresholds::default().positivity_margin)]
    positivity_margin: f64,
    #[arg(long, default_value_t = EventThresholds::default().drift_max)]
    drift_max: f64,
}

impl SolverArgs {
    fn config(&self, a: f64) -> SolveConfig {
        SolveConfig {
            lambda: self.lambda,
            t_max: self.t_max,
            rtol: self.rtol,
            atol: self.atol,
            series_order: self.series_order,
            t_switch: self.t_switch,
            sample_count: self.samples,
            events: EventThresholds {
                h0_zero_tol: self.h0_zero_tol,
                positivity_margin: self.positivity_margin,
                drift_max: self.drift_max,
            },
            ..SolveConfig::new(a)
        }
    }
}

#[derive(Args)]
struct AnalysisArgs {
    #[arg(long, default_value_t = 1e-5)]
    classify_tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    closing_tol: f64,
    /// Closing fit window as a fraction of t*.
    #[arg(long, default_value_t = ClosingOptions::default().window_fraction)]
    fit_window: f64,
    #[arg(long, default_value_t = ClosingOptions::default().degree)]
    fit_degree: usize,
    #[arg(long, default_value_t = ClosingOptions::default().samples)]
    fit_samples: usize,
}

impl AnalysisArgs {
    fn closing(&self) -> ClosingOptions {
        ClosingOptions { window_fraction: self.fit_window, samples: self.fit_samples, degree: self.fit_degree }
    }
}

/// A failed command: usage problems exit 2, numerical ones 1.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::ZeroA
            | Error::Malformed(_)
            | Error::Io(_)
            | Error::UnknownOracle(_)
            | Error::UnknownTau(_)
            | Error::InsufficientSamples { .. }
            | Error::EmptyGrid => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::OracleCheck { oracle, samples, tol, output } => cmd_oracle_check(oracle, samples, tol, output),
        Command::Solve { a, solver, analysis, output, summary } => {
            cmd_solve(solver.config(a), &analysis, output, summary)
        }
        Command::Sweep { a_from, a_to, steps, split, solver, analysis, output } => {
            cmd_sweep(a_from, a_to, steps, split, &solver, &analysis, output)
        }
        Command::Residual { input, lambda, tol } => cmd_residual(&input, lambda, tol),
        Command::Transform { tau, input, output } => cmd_transform(tau, &input, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

/// Writes to stdout; a reader that hung up early (`| head`) is not an error.
fn emit(bytes: &[u8]) -> Outcome {
    let mut out = io::stdout().lock();
    match out.write_all(bytes).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

macro_rules! say {
    ($($arg:tt)*) => { emit(format!("{}\n", format_args!($($arg)*)).as_bytes()) };
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_table(path: &Path) -> Result<TrajectoryTable, Failure> {
    let file = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    TrajectoryTable::read_csv(BufReader::new(file)).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_table(table: &TrajectoryTable, output: Option<PathBuf>) -> Outcome {
    match output {
        Some(p) => {
            let mut w = create(&p)?;
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            emit(&buf)?;
        }
    }
    Ok(())
}

fn cmd_oracle_check(name: OracleName, samples: usize, tol: f64, output: Option<PathBuf>) -> Outcome {
    if samples < 2 {
        return Err(Failure::Usage("--samples must be at least 2".into()));
    }
    let r = oracle_check(name, samples, tol)?;
    if let Some(p) = output {
        write_table(&TrajectoryTable::from_oracle(name, samples)?, Some(p))?;
    }
    say!(
        "{}: max residual {:.3e} ({}) at t = {} over {} points; tol {:e}: {}",
        r.oracle,
        r.max_residual,
        r.component,
        r.t_at_max,
        r.samples,
        r.tol,
        if r.pass { "pass" } else { "FAIL" }
    )?;
    if r.pass { Ok(()) } else { Err(Failure::Numerical(format!("{} residual above tolerance", r.oracle))) }
}

fn cmd_solve(config: SolveConfig, analysis: &AnalysisArgs, output: Option<PathBuf>, summary: Option<PathBuf>) -> Outcome {
    config.validate()?;
    let traj = solve(&config)?;
    let s = SolveSummary::new(&traj, analysis.classify_tol, &analysis.closing(), analysis.closing_tol)?;
    if output.is_some() {
        write_table(&TrajectoryTable::from_trajectory(&traj), output)?;
    }
    let json = s.to_json();
    match summary {
        Some(p) => {
            let mut w = create(&p)?;
            writeln!(w, "{json}")?;
            w.flush()?;
            say!("a = {}: {}; class {}", s.a, s.termination, s.classification)?;
        }
        None => say!("{json}")?,
    }
    if let Termination::DriftExceeded { t_star } = traj.termination {
        return Err(Failure::Numerical(format!("constraint drift exceeded drift_max at t = {t_star}")));
    }
    Ok(())
}

fn sweep_grid(a_from: f64, a_to: f64, steps: usize, split: bool) -> Result<Vec<f64>, Failure> {
    if steps == 0 {
        return Err(Failure::Usage("--steps must be at least 1".into()));
    }
    if !(a_from.is_finite() && a_to.is_finite()) {
        return Err(Failure::Usage("a range must be finite".into()));
    }
    let (lo, hi) = (a_from.min(a_to), a_from.max(a_to));
    if lo <= 0.0 && hi >= 0.0 && !split {
        return Err(Failure::Usage(format!("a range [{lo}, {hi}] contains 0; pass --split to drop a = 0")));
    }
    let grid: Vec<f64> = if steps == 1 {
        vec![a_from]
    } else {
        (0..steps).map(|i| a_from + (a_to - a_from) * i as f64 / (steps - 1) as f64).collect()
    };
    let tiny = 1e-12 * (hi - lo).max(lo.abs()).max(hi.abs());
    let grid: Vec<f64> = grid.into_iter().filter(|a| a.abs() > tiny).collect();
    if grid.is_empty() {
        return Err(Failure::Usage("no nonzero a in the grid".into()));
    }
    Ok(grid)
}

fn cmd_sweep(
    a_from: f64,
    a_to: f64,
    steps: usize,
    split: bool,
    solver: &SolverArgs,
    analysis: &AnalysisArgs,
    output: Option<PathBuf>,
) -> Outcome {
    let grid = sweep_grid(a_from, a_to, steps, split)?;
    let base = solver.config(grid[0]);
    base.validate()?;
    let opts = SweepOptions {
        base,
        closing: analysis.closing(),
        closing_tol: analysis.closing_tol,
        classify_tol: analysis.classify_tol,
    };
    let rows = sweep(&grid, &opts)?;
    match output {
        Some(p) => {
            let mut w = create(&p)?;
            write_sweep_csv(&rows, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            emit(&buf)?;
        }
    }
    let failed: Vec<String> =
        rows.iter().filter_map(|r| r.error.as_ref().map(|e| format!("a = {}: {e}", r.a))).collect();
    for f in &failed {
        eprintln!("row failed: {f}");
    }
    if failed.is_empty() { Ok(()) } else { Err(Failure::Numerical(format!("{} of {} rows failed", failed.len(), rows.len()))) }
}

fn cmd_residual(input: &Path, lambda: Option<f64>, tol: f64) -> Outcome {
    let table = read_table(input)?;
    let r = residual_check(&table, lambda, tol)?;
    say!(
        "max residual {:.3e} ({}) at t = {}; {} rows checked, {} skipped; tol {:e}: {}",
        r.max_residual,
        r.component,
        r.t_at_max,
        r.rows_checked,
        r.rows_skipped,
        r.tol,
        if r.pass { "pass" } else { "FAIL" }
    )?;
    say!("max constraint residual {:.3e} at t = {}", r.max_constraint, r.t_at_max_constraint)?;
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("residual {:.3e} at t = {} exceeds {:e}", r.max_residual, r.t_at_max, r.tol)))
    }
}

fn cmd_transform(tau: TauElement, input: &Path, output: Option<PathBuf>) -> Outcome {
    let table = read_table(input)?;
    write_table(&table.transform(tau)?, output)
}
