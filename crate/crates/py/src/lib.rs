//! Python bindings for the `supgnet` core library.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use supgnet::dataset::{generate_dataset as generate, DatasetConfig, Sampling};
use supgnet::fem::{build_mesh, build_space, DiscreteSolution, SupgSolver};
use supgnet::metrics::{default_norm_degree, nodal_error, norms, values_at_dofs};
use supgnet::mlp::MlpModel;
use supgnet::problems::{ProblemId, ProblemSpec};
use supgnet::stabilization;
use supgnet::tau_search::{find_optimal_tau as search, mesh_size, SearchSettings};
use supgnet::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            PyFileNotFoundError::new_err(err.to_string())
        }
        Error::InvalidArgument(_)
        | Error::UnsupportedDegree(_)
        | Error::OutOfDomain(_)
        | Error::UnsupportedMetric(_)
        | Error::InvalidModel(_)
        | Error::Deserialization { .. }
        | Error::IncompatibleVersion { .. } => PyValueError::new_err(err.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

#[pyfunction]
fn upwind_xi(t: f64) -> PyResult<f64> {
    stabilization::upwind_xi(t).map_err(to_py)
}

/// Classical stabilization parameter for degree-`r` elements.
#[pyfunction]
fn tau_theory(beta_norm: f64, h: f64, mu: f64, r: usize) -> PyResult<f64> {
    stabilization::tau_theory(beta_norm, h, mu, r).map_err(to_py)
}

#[pyfunction]
fn mu_from_local_peclet(beta_norm: f64, h: f64, pe_h: f64) -> PyResult<f64> {
    stabilization::mu_from_local_peclet(beta_norm, h, pe_h).map_err(to_py)
}

#[pyfunction]
fn mu_from_global_peclet(beta_norm: f64, char_length: f64, pe_g: f64) -> PyResult<f64> {
    stabilization::mu_from_global_peclet(beta_norm, char_length, pe_g).map_err(to_py)
}

/// `h` of the uniform mesh with `n` subdivisions per axis.
#[pyfunction]
fn element_size(dim: usize, n: usize) -> f64 {
    mesh_size(dim, n)
}

/// A benchmark problem at a fixed diffusion coefficient.
#[pyclass(frozen)]
struct Problem {
    spec: ProblemSpec,
}

#[pymethods]
impl Problem {
    #[new]
    #[pyo3(signature = (name, mu, theta=None))]
    fn new(name: &str, mu: f64, theta: Option<f64>) -> PyResult<Self> {
        let id: ProblemId = name.parse().map_err(to_py)?;
        Ok(Problem {
            spec: id.build(mu, theta).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.spec.id.as_str()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.spec.mu
    }

    #[getter]
    fn dim(&self) -> usize {
        self.spec.dim
    }

    #[getter]
    fn beta_norm(&self) -> f64 {
        self.spec.beta_norm()
    }

    /// Exact solution at `(x, y)`, or `None` without a closed form.
    #[pyo3(signature = (x, y=0.0))]
    fn exact(&self, x: f64, y: f64) -> Option<f64> {
        self.spec.exact_value([x, y])
    }

    fn __repr__(&self) -> String {
        format!("Problem({:?}, mu={:e})", self.spec.id.as_str(), self.spec.mu)
    }
}

/// Finite element solution with its coefficients at the dofs.
#[pyclass(frozen)]
struct Solution {
    inner: DiscreteSolution,
    problem: ProblemSpec,
}

#[pymethods]
impl Solution {
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau_used()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }

    #[getter]
    fn dof_coords(&self) -> Vec<(f64, f64)> {
        self.inner.space().dof_coords().iter().map(|x| (x[0], x[1])).collect()
    }

    #[pyo3(signature = (x, y=0.0))]
    fn evaluate(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.evaluate([x, y]).map_err(to_py)
    }

    /// Sum of absolute dof errors against the exact solution.
    fn nodal_error(&self) -> PyResult<f64> {
        let exact = self.exact()?;
        let at_dofs = values_at_dofs(self.inner.space(), exact).map_err(to_py)?;
        nodal_error(&self.inner, &at_dofs).map_err(to_py)
    }

    /// `(l2, h1)` norms of the error against the exact solution.
    fn norms(&self) -> PyResult<(f64, f64)> {
        let q = default_norm_degree(self.inner.space().degree());
        let n = norms(&self.inner, self.exact()?, q).map_err(to_py)?;
        Ok((n.l2, n.h1))
    }
}

impl Solution {
    fn exact(&self) -> PyResult<&supgnet::problems::ExactSolution> {
        self.problem
            .exact
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("problem has no closed-form solution"))
    }
}

fn solver_for(problem: &ProblemSpec, n: usize, r: usize) -> PyResult<SupgSolver> {
    let mesh = build_mesh(problem.dim, n).map_err(to_py)?;
    let space = build_space(mesh, r).map_err(to_py)?;
    SupgSolver::new(problem, &space).map_err(to_py)
}

/// SUPG solution on the uniform mesh with `n` subdivisions and degree `r`.
#[pyfunction]
fn solve(py: Python<'_>, problem: &Problem, n: usize, r: usize, tau: f64) -> PyResult<Solution> {
    let spec = problem.spec.clone();
    py.detach(|| {
        let sol = solver_for(&spec, n, r)?.solve(tau).map_err(to_py)?;
        Ok(Solution { inner: sol, problem: spec })
    })
}

#[pyclass(frozen, get_all)]
struct SearchResult {
    tau_star: f64,
    e_at_star: f64,
    evaluations: usize,
    converged: bool,
}

/// Minimizes the nodal error over `τ` by golden-section search in `log10 τ`.
#[pyfunction]
#[pyo3(signature = (problem, n, r, bracket=(1e-8, 1e2), tol=1e-3, budget=200))]
fn find_optimal_tau(
    py: Python<'_>,
    problem: &Problem,
    n: usize,
    r: usize,
    bracket: (f64, f64),
    tol: f64,
    budget: usize,
) -> PyResult<SearchResult> {
    let settings = SearchSettings { bracket, tol, budget };
    let spec = problem.spec.clone();
    py.detach(|| {
        let mesh = build_mesh(spec.dim, n).map_err(to_py)?;
        let res = search(&spec, &mesh, r, &settings).map_err(to_py)?;
        Ok(SearchResult {
            tau_star: res.tau_star,
            e_at_star: res.e_at_star,
            evaluations: res.evaluations,
            converged: res.converged,
        })
    })
}

#[pyclass(frozen, get_all)]
struct Record {
    r: usize,
    h: f64,
    pe_g: f64,
    mu: f64,
    tau_star: f64,
    e_at_star: f64,
    seed: u64,
}

/// Optimal-`τ` records of the training problem.
#[pyfunction]
#[pyo3(signature = (m, seed=7, r_set=vec![1, 2, 3], n_set=vec![10, 20, 40], pe_range=(7.0, 70710.0), sampling="log-uniform"))]
fn generate_dataset(
    py: Python<'_>,
    m: usize,
    seed: u64,
    r_set: Vec<usize>,
    n_set: Vec<usize>,
    pe_range: (f64, f64),
    sampling: &str,
) -> PyResult<Vec<Record>> {
    let sampling: Sampling = sampling.parse().map_err(to_py)?;
    let config = DatasetConfig {
        m,
        r_set,
        n_set,
        pe_range,
        sampling,
        seed,
        ..DatasetConfig::default()
    };
    let data = py.detach(|| generate(&config)).map_err(to_py)?;
    Ok(data
        .records
        .into_iter()
        .map(|t| Record {
            r: t.r,
            h: t.h,
            pe_g: t.pe_g,
            mu: t.mu,
            tau_star: t.tau_star,
            e_at_star: t.e_at_star,
            seed: t.seed,
        })
        .collect())
}

/// Trained network predicting `τ` from `(r, h, Pe_g)`.
#[pyclass(frozen)]
struct Model {
    inner: Arc<MlpModel>,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model {
            inner: Arc::new(MlpModel::load(&path).map_err(to_py)?),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[getter]
    fn sizes(&self) -> Vec<usize> {
        self.inner.sizes()
    }

    fn predict_tau(&self, r: usize, h: f64, pe_g: f64) -> PyResult<f64> {
        self.inner.predict_tau(r, h, pe_g).map_err(to_py)
    }
}

#[pymodule]
fn supgnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", supgnet::VERSION)?;
    m.add_function(wrap_pyfunction!(upwind_xi, m)?)?;
    m.add_function(wrap_pyfunction!(tau_theory, m)?)?;
    m.add_function(wrap_pyfunction!(mu_from_local_peclet, m)?)?;
    m.add_function(wrap_pyfunction!(mu_from_global_peclet, m)?)?;
    m.add_function(wrap_pyfunction!(element_size, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(find_optimal_tau, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_class::<Problem>()?;
    m.add_class::<Solution>()?;
    m.add_class::<SearchResult>()?;
    m.add_class::<Record>()?;
    m.add_class::<Model>()?;
    Ok(())
}
