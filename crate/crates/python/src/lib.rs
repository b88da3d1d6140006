//! Python bindings: `import pysigmak`.

use pyo3::exceptions::{PyNotImplementedError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sigmak::checks;
use sigmak::mu as seeds;
use sigmak::nonlinear::{self, SolveReport};
use sigmak::symfun;
use sigmak::{Error, GridSpec, Mode, ScalarField, SolverConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Unsupported(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::Diverged { .. } | Error::Numeric { .. } | Error::Internal(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(to_py)
}

/// `sigma_j(mu)`.
#[pyfunction]
fn sigma(mu: Vec<f64>, j: usize) -> f64 {
    symfun::sigma(&mu, j)
}

/// `sigma_j(mu)` with entry `i` (zero-based) removed.
#[pyfunction]
fn sigma_deleted(mu: Vec<f64>, j: usize, i: usize) -> PyResult<f64> {
    symfun::sigma_deleted(&mu, j, i).map_err(to_py)
}

fn sym_from_rows(rows: Vec<Vec<f64>>) -> PyResult<symfun::SymMatrix> {
    symfun::SymMatrix::from_rows(&rows).map_err(to_py)
}

/// `sigma_k` of the eigenvalues of a symmetric matrix, by principal minors.
#[pyfunction]
fn sigma_k_matrix(rows: Vec<Vec<f64>>, k: usize) -> PyResult<f64> {
    symfun::sigma_k_matrix(&sym_from_rows(rows)?, k).map_err(to_py)
}

/// The same value through Jacobi eigenvalues.
#[pyfunction]
fn sigma_k_matrix_oracle(rows: Vec<Vec<f64>>, k: usize) -> PyResult<f64> {
    symfun::sigma_k_matrix_oracle(&sym_from_rows(rows)?, k).map_err(to_py)
}

/// An admissible seed `mu` with `sigma_k(mu) = M`.
#[pyclass(name = "MuVector", frozen)]
struct PyMuVector {
    inner: seeds::MuVector,
}

#[pymethods]
impl PyMuVector {
    #[new]
    fn new(entries: Vec<f64>, k: usize, target: f64) -> PyResult<Self> {
        let inner = seeds::MuVector::new(entries, k, target).map_err(to_py)?;
        Ok(PyMuVector { inner })
    }

    #[getter]
    fn entries(&self) -> Vec<f64> {
        self.inner.entries().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn target(&self) -> f64 {
        self.inner.target()
    }

    #[getter]
    fn margin(&self) -> f64 {
        self.inner.margin()
    }

    /// `sigma_{k-1}(mu|i)` for each `i`.
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients()
    }

    /// Validation report as a dict.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = seeds::validate_mu(&self.inner);
        let d = PyDict::new(py);
        d.set_item("sigma_residual", r.sigma_residual)?;
        d.set_item("coefficients", r.coefficients)?;
        d.set_item("margin", r.margin)?;
        d.set_item("passed", r.passed)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "MuVector(entries={:?}, k={}, target={}, margin={})",
            self.inner.entries(),
            self.inner.k(),
            self.inner.target(),
            self.inner.margin()
        )
    }
}

fn wrap(r: sigmak::Result<seeds::MuVector>) -> PyResult<PyMuVector> {
    r.map(|inner| PyMuVector { inner }).map_err(to_py)
}

#[pyfunction]
fn construct_mu(n: usize, k: usize, target: f64) -> PyResult<PyMuVector> {
    wrap(seeds::construct_mu(n, k, target))
}

#[pyfunction]
fn convex_mu(n: usize, k: usize, target: f64) -> PyResult<PyMuVector> {
    wrap(seeds::convex_mu(n, k, target))
}

#[pyfunction]
fn gauss_mu(n: usize, target: f64) -> PyResult<PyMuVector> {
    wrap(seeds::gauss_mu(n, target))
}

/// The seed `solve` uses: trivial for `k = 1`, `gauss_mu` for `k = n`.
#[pyfunction]
fn seed_mu(n: usize, k: usize, target: f64) -> PyResult<PyMuVector> {
    wrap(seeds::seed_mu(n, k, target))
}

/// A parsed right-hand side `psi(x1, ..., xn)`.
#[pyclass(name = "Psi", frozen)]
struct PyPsi {
    inner: sigmak::PsiExpr,
}

#[pymethods]
impl PyPsi {
    #[new]
    fn new(text: &str, n: usize) -> PyResult<Self> {
        let inner = sigmak::PsiExpr::parse(text, n).map_err(to_py)?;
        Ok(PyPsi { inner })
    }

    fn __call__(&self, point: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&point).map_err(to_py)
    }

    fn at_origin(&self) -> PyResult<f64> {
        self.inner.at_origin().map_err(to_py)
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Psi('{}', {})", self.inner, self.inner.n_vars())
    }
}

/// A converged (or not) Picard solve.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    cfg: SolverConfig,
    w: ScalarField,
    u: ScalarField,
    report: SolveReport,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn converged(&self) -> bool {
        self.report.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.report.iterations
    }

    #[getter]
    fn residual_history(&self) -> Vec<f64> {
        self.report.residual_history.clone()
    }

    #[getter]
    fn mu(&self) -> Vec<f64> {
        self.report.mu.clone()
    }

    #[getter]
    fn w_maxnorm(&self) -> f64 {
        self.report.final_w_maxnorm
    }

    /// `w` at every node, row-major.
    #[getter]
    fn w(&self) -> Vec<f64> {
        self.w.values().to_vec()
    }

    /// `u` at every node, row-major.
    #[getter]
    fn u(&self) -> Vec<f64> {
        self.u.values().to_vec()
    }

    /// Solver coordinates of every node.
    fn coords(&self) -> Vec<Vec<f64>> {
        (0..self.cfg.grid.len())
            .map(|p| self.cfg.grid.coords(p))
            .collect()
    }

    /// Physical coordinates `eps^2 x` of every node.
    fn physical_coords(&self) -> Vec<Vec<f64>> {
        (0..self.cfg.grid.len())
            .map(|p| self.cfg.physical_coords(p))
            .collect()
    }

    /// Re-differences `u` and compares against `psi`.
    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = nonlinear::verify_summary(&self.u, &self.cfg).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("max_error", s.max_error)?;
        d.set_item("inner_max_error", s.inner_max_error)?;
        d.set_item("origin_error", s.origin_error)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(n={}, k={}, mode={}, converged={}, iterations={}, residual={:e})",
            self.report.n,
            self.report.k,
            self.report.mode,
            self.report.converged,
            self.report.iterations,
            self.report.final_residual()
        )
    }
}

/// Solves `sigma_k = psi` near the origin; `M = psi(0)` picks the seed.
#[pyfunction]
#[pyo3(signature = (n, k, mode, psi, epsilon=0.1, grid=21, max_iter=50, tol=1e-9, convex=false))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    n: usize,
    k: usize,
    mode: &str,
    psi: &str,
    epsilon: f64,
    grid: usize,
    max_iter: usize,
    tol: f64,
    convex: bool,
) -> PyResult<PySolution> {
    let mode = parse_mode(mode)?;
    let expr = sigmak::PsiExpr::parse(psi, n).map_err(to_py)?;
    let grid_spec = GridSpec::new(n, grid).map_err(to_py)?;
    let cfg = if convex {
        let mu = seeds::convex_mu(n, k, expr.at_origin().map_err(to_py)?).map_err(to_py)?;
        SolverConfig::new(mode, mu, expr, epsilon, grid_spec)
    } else {
        SolverConfig::seeded(k, mode, expr, epsilon, grid_spec)
    }
    .map_err(to_py)?
    .with_tolerance(tol, max_iter);
    let (w, report, u) = py
        .detach(|| -> sigmak::Result<_> {
            let (w, report) = nonlinear::picard_solve(&cfg)?;
            let u = nonlinear::reconstruct_u(&w, &cfg)?;
            Ok((w, report, u))
        })
        .map_err(to_py)?;
    Ok(PySolution { cfg, w, u, report })
}

/// Randomized expansion-order and Newton checks; one dict per check.
#[pyfunction]
#[pyo3(signature = (n, k, trials=200, seed=0))]
fn expand_check<'py>(
    py: Python<'py>,
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let rows = checks::expand_check(n, k, trials, seed).map_err(to_py)?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("name", r.name)?;
            d.set_item("passed", r.passed())?;
            d.set_item("trials", r.trials)?;
            d.set_item("failures", r.failures)?;
            d.set_item("worst", r.worst)?;
            d.set_item("detail", r.detail)?;
            d.set_item("skipped", r.skipped)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn pysigmak(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sigma, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_deleted, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_k_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_k_matrix_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(construct_mu, m)?)?;
    m.add_function(wrap_pyfunction!(convex_mu, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_mu, m)?)?;
    m.add_function(wrap_pyfunction!(seed_mu, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(expand_check, m)?)?;
    m.add_class::<PyMuVector>()?;
    m.add_class::<PyPsi>()?;
    m.add_class::<PySolution>()?;
    Ok(())
}
