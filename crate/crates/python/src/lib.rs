//! Python bindings for the `mixed-urn` crate.
//!
//! Structured results (theory reports, replicate summaries, convergence
//! curves) come back as plain dicts built from their JSON form.

use mixed_urn::exact::{exact_distribution_rational, exact_distribution_with_limit, DEFAULT_FRONTIER_LIMIT};
use mixed_urn::mc::{self, DEFAULT_BINS};
use mixed_urn::stats::{self, BetaDist, Ecdf, Uniform};
use mixed_urn::{theory, urn, MixingProb, UrnState};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn mixing_from(p: &Bound<'_, PyAny>) -> PyResult<MixingProb> {
    if let Ok(s) = p.cast::<PyString>() {
        return s.to_str()?.parse().map_err(value_err);
    }
    MixingProb::new(p.extract::<f64>()?).map_err(value_err)
}

/// Urn parameters. `p` may be a float or a string such as `"1/20"`.
#[pyclass(name = "UrnParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyUrnParams(mixed_urn::UrnParams);

#[pymethods]
impl PyUrnParams {
    #[new]
    #[pyo3(signature = (y0, b0, alpha, beta, gamma, p))]
    fn new(y0: u64, b0: u64, alpha: u64, beta: u64, gamma: u64, p: &Bound<'_, PyAny>) -> PyResult<Self> {
        let mixing = mixing_from(p)?;
        mixed_urn::UrnParams::new(y0, b0, alpha, beta, gamma, mixing)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn y0(&self) -> u64 {
        self.0.y0()
    }
    #[getter]
    fn b0(&self) -> u64 {
        self.0.b0()
    }
    #[getter]
    fn alpha(&self) -> u64 {
        self.0.alpha()
    }
    #[getter]
    fn beta(&self) -> u64 {
        self.0.beta()
    }
    #[getter]
    fn gamma(&self) -> u64 {
        self.0.gamma()
    }
    #[getter]
    fn p(&self) -> f64 {
        self.0.p()
    }

    fn within_theorem(&self) -> bool {
        self.0.within_theorem()
    }

    fn __repr__(&self) -> String {
        let q = &self.0;
        format!(
            "UrnParams(y0={}, b0={}, alpha={}, beta={}, gamma={}, p='{}')",
            q.y0(),
            q.b0(),
            q.alpha(),
            q.beta(),
            q.gamma(),
            q.mixing()
        )
    }
}

/// One-step law from `(y, b)`: list of `((y', b'), prob)`.
#[pyfunction]
fn transition_kernel(params: &PyUrnParams, y: u64, b: u64) -> Vec<((u64, u64), f64)> {
    urn::transition_kernel(&UrnState { y, b, n: 0 }, &params.0)
        .into_iter()
        .map(|(s, q)| ((s.y, s.b), q))
        .collect()
}

/// `X_n` at the given checkpoints for a single trajectory.
#[pyfunction]
#[pyo3(signature = (params, n_steps, seed, stream = 0, checkpoints = None))]
fn trajectory(
    params: &PyUrnParams,
    n_steps: u64,
    seed: u64,
    stream: u64,
    checkpoints: Option<Vec<u64>>,
) -> PyResult<Vec<(u64, f64)>> {
    let cps = checkpoints.unwrap_or_else(|| vec![n_steps]);
    let mut rng = mixed_urn::RngStream::new(seed, stream);
    let out = mixed_urn::run_trajectory(&params.0, n_steps, &mut rng, &cps).map_err(value_err)?;
    Ok(out.into_iter().map(|(n, s)| (n, s.proportion())).collect())
}

/// Exact law of `X_n` as `(x_num, x_den, prob)` triples sorted by `x`.
/// With `rational=True` each entry is `(x_num, x_den, prob_num, prob_den)`
/// with the probability as decimal strings.
#[pyfunction]
#[pyo3(signature = (params, n, frontier_limit = DEFAULT_FRONTIER_LIMIT, rational = false))]
fn exact_x_law<'py>(
    py: Python<'py>,
    params: &PyUrnParams,
    n: u64,
    frontier_limit: usize,
    rational: bool,
) -> PyResult<Bound<'py, PyAny>> {
    if rational {
        let d = exact_distribution_rational(&params.0, n, frontier_limit).map_err(value_err)?;
        let law: Vec<(u64, u64, String, String)> = d
            .x_law()
            .into_iter()
            .map(|(num, den, q)| (num, den, q.numer().to_string(), q.denom().to_string()))
            .collect();
        return law.into_pyobject(py).map(|o| o.into_any());
    }
    let d = exact_distribution_with_limit(&params.0, n, frontier_limit).map_err(value_err)?;
    let law: Vec<(u64, u64, f64)> = d.x_law().into_iter().map(|pt| (pt.x_num, pt.x_den, pt.prob)).collect();
    law.into_pyobject(py).map(|o| o.into_any())
}

#[pyfunction]
fn analyze<'py>(py: Python<'py>, params: &PyUrnParams) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &theory::analyze(&params.0))
}

#[pyfunction]
fn envelope(params: &PyUrnParams, n: u64) -> PyResult<f64> {
    theory::envelope(&params.0, n).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (params, n_steps, replicates, seed = 42, checkpoints = None, bins = DEFAULT_BINS, workers = 0))]
#[allow(clippy::too_many_arguments)]
fn run_replicates<'py>(
    py: Python<'py>,
    params: &PyUrnParams,
    n_steps: u64,
    replicates: u64,
    seed: u64,
    checkpoints: Option<Vec<u64>>,
    bins: usize,
    workers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cps = checkpoints.unwrap_or_else(|| vec![n_steps]);
    let p = params.0.clone();
    let summary = py
        .detach(|| mc::run_replicates(&p, n_steps, replicates, seed, &cps, bins, workers))
        .map_err(value_err)?;
    to_py(py, &summary)
}

/// Raw `X_n` values, one list per checkpoint.
#[pyfunction]
#[pyo3(signature = (params, n_steps, replicates, seed = 42, checkpoints = None, workers = 0))]
fn sample_checkpoints(
    py: Python<'_>,
    params: &PyUrnParams,
    n_steps: u64,
    replicates: u64,
    seed: u64,
    checkpoints: Option<Vec<u64>>,
    workers: usize,
) -> PyResult<Vec<Vec<f64>>> {
    let cps = checkpoints.unwrap_or_else(|| vec![n_steps]);
    let p = params.0.clone();
    py.detach(|| mc::sample_checkpoints(&p, n_steps, replicates, seed, &cps, workers))
        .map(|s| s.values)
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (params, n_max, replicates, seed = 42, workers = 0))]
fn convergence_curve<'py>(
    py: Python<'py>,
    params: &PyUrnParams,
    n_max: u64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params.0.clone();
    let curve = py
        .detach(|| mc::convergence_curve(&p, n_max, replicates, seed, workers))
        .map_err(value_err)?;
    to_py(py, &curve)
}

/// Regularised incomplete beta `I_x(a, b)`.
#[pyfunction]
fn beta_cdf(a: f64, b: f64, x: f64) -> PyResult<f64> {
    stats::beta_cdf(a, b, x).map_err(value_err)
}

/// KS distance of `samples` to Uniform[0, 1], or to Beta(a, b) if both
/// shapes are given.
#[pyfunction]
#[pyo3(signature = (samples, a = None, b = None))]
fn ks_statistic(samples: Vec<f64>, a: Option<f64>, b: Option<f64>) -> PyResult<f64> {
    let ecdf = Ecdf::new(samples).map_err(value_err)?;
    match (a, b) {
        (None, None) => Ok(stats::ks_statistic(&ecdf, &Uniform)),
        (Some(a), Some(b)) => Ok(stats::ks_statistic(&ecdf, &BetaDist::new(a, b).map_err(value_err)?)),
        _ => Err(PyValueError::new_err("give both beta shapes or neither")),
    }
}

#[pymodule]
fn mixed_urn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUrnParams>()?;
    m.add_function(wrap_pyfunction!(transition_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(exact_x_law, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(envelope, m)?)?;
    m.add_function(wrap_pyfunction!(run_replicates, m)?)?;
    m.add_function(wrap_pyfunction!(sample_checkpoints, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_curve, m)?)?;
    m.add_function(wrap_pyfunction!(beta_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    Ok(())
}
