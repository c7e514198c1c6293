//! Python bindings: the coefficient algebra, closed-form solutions, the
//! singular solver and the diagnostics. Reports come back as plain dicts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use g2::analysis::{self, ClosingOptions, SweepOptions};
use g2::checks;
use g2::g2_algebra as alg;
use g2::integrate::{self, SolveConfig};
use g2::io::{SolveSummary, TrajectoryTable};
use g2::np_system::{self as np, OracleName, TauElement};
use g2::singular_ivp;
use g2::Error;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_)
        | Error::ZeroA
        | Error::Malformed(_)
        | Error::Io(_)
        | Error::UnknownOracle(_)
        | Error::UnknownTau(_)
        | Error::InsufficientSamples { .. }
        | Error::EmptyGrid => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", path.display()))
}

/// Serializable report -> Python object, through the json module.
fn to_object<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn parse_oracle(name: &str) -> PyResult<OracleName> {
    name.parse().map_err(to_py)
}

fn parse_tau(tau: &str) -> PyResult<TauElement> {
    tau.parse().map_err(to_py)
}

/// Coefficients `(f0, .., f4)` of an invariant 3-form.
#[pyclass(name = "FCoeffs", module = "np_g2", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyFCoeffs(alg::FCoeffs);

#[pymethods]
impl PyFCoeffs {
    #[new]
    fn new(f0: f64, f1: f64, f2: f64, f3: f64, f4: f64) -> Self {
        PyFCoeffs(alg::FCoeffs::new(f0, f1, f2, f3, f4))
    }

    #[getter]
    fn f0(&self) -> f64 {
        self.0.f0
    }
    #[getter]
    fn f1(&self) -> f64 {
        self.0.f1
    }
    #[getter]
    fn f2(&self) -> f64 {
        self.0.f2
    }
    #[getter]
    fn f3(&self) -> f64 {
        self.0.f3
    }
    #[getter]
    fn f4(&self) -> f64 {
        self.0.f4
    }

    #[allow(clippy::wrong_self_convention)]
    fn to_list(&self) -> [f64; 5] {
        self.0.to_array()
    }

    fn is_admissible(&self) -> bool {
        alg::is_admissible(&self.0)
    }

    /// `(g1, g2, g3)` blocks of the induced metric.
    fn metric_blocks(&self) -> PyResult<(f64, f64, f64)> {
        let m = alg::metric_blocks(&self.0).map_err(to_py)?;
        Ok((m.g1, m.g2, m.g3))
    }

    /// Coefficients of the Hodge dual 4-form.
    fn hodge_dual(&self) -> PyResult<[f64; 5]> {
        Ok(alg::hodge_dual(&self.0).map_err(to_py)?.to_array())
    }

    /// `(R1, R2)` at the given `lambda`.
    fn constraints(&self, lam: f64) -> (f64, f64) {
        let c = np::constraints(&self.0, lam);
        (c.r1, c.r2)
    }

    /// Image under a symmetry: `12`, `13`, `23`, `123`, `132` or `id`.
    fn transform(&self, tau: &str) -> PyResult<Self> {
        Ok(PyFCoeffs(parse_tau(tau)?.apply(&self.0)))
    }

    fn __repr__(&self) -> String {
        let f = self.0;
        format!("FCoeffs({}, {}, {}, {}, {})", f.f0, f.f1, f.f2, f.f3, f.f4)
    }
}

/// Right-hand side `f'` of the regular system.
#[pyfunction]
fn rhs(f: PyFCoeffs, lam: f64) -> PyResult<PyFCoeffs> {
    np::rhs_f(&f.0, lam).map(PyFCoeffs).map_err(to_py)
}

/// Components of `d phi - lambda * phi` and the arc-length residual.
#[pyfunction]
fn np_residual(f: PyFCoeffs, fprime: PyFCoeffs, lam: f64) -> PyResult<[f64; 6]> {
    np::np_residual(&f.0, &fprime.0, lam).map_err(to_py)
}

/// `(f, f')` of a closed-form solution at `t`.
#[pyfunction]
fn oracle(name: &str, t: f64) -> PyResult<(PyFCoeffs, PyFCoeffs)> {
    let s = np::oracle(parse_oracle(name)?, t).map_err(to_py)?;
    Ok((PyFCoeffs(s.f), PyFCoeffs(s.fprime)))
}

#[pyfunction]
fn oracle_lambda(name: &str) -> PyResult<f64> {
    Ok(parse_oracle(name)?.lambda())
}

#[pyfunction]
#[pyo3(signature = (name, samples = 1000, tol = 1e-9))]
fn oracle_check<'py>(py: Python<'py>, name: &str, samples: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, &checks::oracle_check(parse_oracle(name)?, samples, tol).map_err(to_py)?)
}

/// Initial state `h_bar(a, lambda)` of the singular problem.
#[pyfunction]
#[pyo3(signature = (a, lam = 1.0))]
fn initial_state(a: f64, lam: f64) -> PyResult<[f64; 4]> {
    Ok(singular_ivp::initial_state(a, lam).map_err(to_py)?.h_bar.to_array())
}

/// Even Taylor coefficients `c_0, c_2, .., c_order` of `h`.
#[pyfunction]
#[pyo3(signature = (a, lam = 1.0, order = 8))]
fn taylor_coefficients(a: f64, lam: f64, order: usize) -> PyResult<Vec<[f64; 4]>> {
    let init = singular_ivp::initial_state(a, lam).map_err(to_py)?;
    Ok(singular_ivp::taylor_startup(&init, order).map_err(to_py)?.coeffs)
}

/// `det(dA - l I)` at `h_bar(a, lambda)`.
#[pyfunction]
fn shifted_det(a: f64, lam: f64, l: f64) -> PyResult<f64> {
    Ok(singular_ivp::linearization(a, lam).map_err(to_py)?.shifted_det(l))
}

/// A solved trajectory of the singular problem.
#[pyclass(name = "Trajectory", module = "np_g2", frozen)]
struct PyTrajectory(integrate::Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn a(&self) -> Option<f64> {
        self.0.a
    }
    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.0.times()
    }
    /// Rows `[f0, .., f4]` at the sample times.
    #[getter]
    fn f(&self) -> Vec<[f64; 5]> {
        self.0.samples.iter().map(|s| s.f.to_array()).collect()
    }
    #[getter]
    fn termination<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &self.0.termination)
    }
    #[getter]
    fn t_star(&self) -> Option<f64> {
        self.0.termination.t_star()
    }
    #[getter]
    fn max_drift(&self) -> f64 {
        self.0.max_drift
    }

    /// Dense output at any `t` inside the solved interval.
    fn f_at(&self, t: f64) -> PyResult<PyFCoeffs> {
        Ok(PyFCoeffs(self.0.sample_at(t).map_err(to_py)?.f))
    }

    /// `(t, g1, g2, g3)` at every sample.
    fn metric_norms(&self) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let n = analysis::metric_norms(&self.0).map_err(to_py)?;
        Ok(n.into_iter().map(|s| (s.t, s.g1, s.g2, s.g3)).collect())
    }

    #[pyo3(signature = (tol = 1e-5))]
    fn classify<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &analysis::classify_homogeneous(&self.0, tol))
    }

    /// Closing diagnostics at the degeneration; raises when there is none.
    #[pyo3(signature = (tol = 1e-5))]
    fn closing<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let r = analysis::closing_diagnostics(&self.0, &ClosingOptions::default(), tol).map_err(to_py)?;
        to_object(py, &r)
    }

    fn g2_quadratic_coefficient(&self) -> PyResult<f64> {
        analysis::g2_quadratic_coefficient(&self.0).map_err(to_py)
    }

    #[pyo3(signature = (classify_tol = 1e-5, closing_tol = 1e-5))]
    fn summary<'py>(&self, py: Python<'py>, classify_tol: f64, closing_tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let s = SolveSummary::new(&self.0, classify_tol, &ClosingOptions::default(), closing_tol).map_err(to_py)?;
        to_object(py, &s)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let mut w = BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?);
        TrajectoryTable::from_trajectory(&self.0).write_csv(&mut w).map_err(to_py)?;
        w.flush().map_err(|e| io_err(&path, e))
    }

    fn __len__(&self) -> usize {
        self.0.samples.len()
    }
}

fn config(a: f64, lam: f64, t_max: f64, rtol: f64, atol: f64, series_order: usize, samples: usize) -> SolveConfig {
    SolveConfig { lambda: lam, t_max, rtol, atol, series_order, sample_count: samples, ..SolveConfig::new(a) }
}

/// Solves the singular initial value problem for one `a`.
#[pyfunction]
#[pyo3(signature = (a, lam = 1.0, t_max = 3.0, rtol = 1e-10, atol = 1e-12, series_order = 8, samples = 300))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    a: f64,
    lam: f64,
    t_max: f64,
    rtol: f64,
    atol: f64,
    series_order: usize,
    samples: usize,
) -> PyResult<PyTrajectory> {
    let c = config(a, lam, t_max, rtol, atol, series_order, samples);
    c.validate().map_err(to_py)?;
    py.detach(|| integrate::solve(&c)).map(PyTrajectory).map_err(to_py)
}

/// One summary dict per value of `a`, computed in parallel.
#[pyfunction]
#[pyo3(signature = (grid, lam = 1.0, t_max = 3.0, closing_tol = 1e-5, classify_tol = 1e-5))]
fn sweep<'py>(
    py: Python<'py>,
    grid: Vec<f64>,
    lam: f64,
    t_max: f64,
    closing_tol: f64,
    classify_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let first = *grid.first().ok_or_else(|| to_py(Error::EmptyGrid))?;
    let base = SolveConfig { lambda: lam, t_max, ..SolveConfig::new(first) };
    base.validate().map_err(to_py)?;
    let opts = SweepOptions { closing_tol, classify_tol, ..SweepOptions::new(base) };
    let rows = py.detach(|| analysis::sweep(&grid, &opts)).map_err(to_py)?;
    to_object(py, &rows)
}

fn read_table(path: &Path) -> PyResult<TrajectoryTable> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    TrajectoryTable::read_csv(BufReader::new(file)).map_err(to_py)
}

/// Finite-difference check of a trajectory CSV.
#[pyfunction]
#[pyo3(signature = (path, lam = None, tol = 1e-6))]
fn residual_check<'py>(py: Python<'py>, path: PathBuf, lam: Option<f64>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let table = read_table(&path)?;
    to_object(py, &checks::residual_check(&table, lam, tol).map_err(to_py)?)
}

/// Writes the image of a trajectory CSV under a symmetry (`o` reflects time).
#[pyfunction]
fn transform_csv(tau: &str, input: PathBuf, output: PathBuf) -> PyResult<()> {
    let table = read_table(&input)?.transform(parse_tau(tau)?).map_err(to_py)?;
    let mut w = BufWriter::new(File::create(&output).map_err(|e| io_err(&output, e))?);
    table.write_csv(&mut w).map_err(to_py)?;
    w.flush().map_err(|e| io_err(&output, e))
}

/// Samples a closed-form solution into a trajectory CSV.
#[pyfunction]
#[pyo3(signature = (name, output, samples = 1000))]
fn write_oracle_csv(name: &str, output: PathBuf, samples: usize) -> PyResult<()> {
    let table = TrajectoryTable::from_oracle(parse_oracle(name)?, samples).map_err(to_py)?;
    let mut w = BufWriter::new(File::create(&output).map_err(|e| io_err(&output, e))?);
    table.write_csv(&mut w).map_err(to_py)?;
    w.flush().map_err(|e| io_err(&output, e))
}

#[pymodule]
fn np_g2(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFCoeffs>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(rhs, m)?)?;
    m.add_function(wrap_pyfunction!(np_residual, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(initial_state, m)?)?;
    m.add_function(wrap_pyfunction!(taylor_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(shifted_det, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(residual_check, m)?)?;
    m.add_function(wrap_pyfunction!(transform_csv, m)?)?;
    m.add_function(wrap_pyfunction!(write_oracle_csv, m)?)?;
    m.add_function(wrap_pyfunction!(g2_quadratic_expected, m)?)?;
    Ok(())
}

/// `-(5/576) a^2 + a/8 + 27/4`.
#[pyfunction]
fn g2_quadratic_expected(a: f64) -> f64 {
    analysis::g2_quadratic_expected(a)
}
