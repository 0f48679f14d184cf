//! Python bindings. Reports and search results come back as plain dicts.

use dyadic_bellman::verifier::{self, measured_params};
use dyadic_bellman::{
    self as core, search::SearchConfig, BellmanParams, Branch, CorollaryVariant, DomainPoint,
    DyadicWeight,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Round-trips through JSON so nested reports arrive as dicts and lists.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn branch(name: &str) -> PyResult<Branch> {
    match name {
        "plus" | "+" => Ok(Branch::Plus),
        "minus" | "-" => Ok(Branch::Minus),
        other => Err(PyValueError::new_err(format!(
            "branch must be 'plus' or 'minus', got {other:?}"
        ))),
    }
}

fn variant(name: &str) -> PyResult<CorollaryVariant> {
    match name {
        "w" => Ok(CorollaryVariant::W),
        "w_pow_p" => Ok(CorollaryVariant::WPowP),
        other => Err(PyValueError::new_err(format!(
            "variant must be 'w' or 'w_pow_p', got {other:?}"
        ))),
    }
}

#[pyclass(name = "DyadicWeight", frozen)]
struct PyDyadicWeight {
    inner: DyadicWeight,
}

#[pymethods]
impl PyDyadicWeight {
    #[new]
    fn new(leaves: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: DyadicWeight::new(leaves).map_err(err)?,
        })
    }

    /// Parses the plain-text or JSON weight file format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::weight_io::parse(text).map_err(err)?,
        })
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.inner.depth()
    }

    #[getter]
    fn leaves(&self) -> Vec<f64> {
        self.inner.leaves().to_vec()
    }

    /// Averages of `w^r` for every node, root first, level by level.
    fn power_averages(&self, r: f64) -> Vec<f64> {
        core::power_averages(&self.inner, r).values().to_vec()
    }

    fn to_json(&self) -> String {
        core::weight_io::to_json(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.leaves().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "DyadicWeight(depth={}, leaves={:?})",
            self.inner.depth(),
            self.inner.leaves()
        )
    }
}

#[pyclass(name = "BellmanParams", frozen)]
struct PyBellmanParams {
    inner: BellmanParams,
}

#[pymethods]
impl PyBellmanParams {
    #[new]
    fn new(p: f64, delta: f64, big_q: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::make_params(p, delta, big_q).map_err(err)?,
        })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn big_q(&self) -> f64 {
        self.inner.big_q
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps
    }

    #[getter]
    fn s_minus(&self) -> f64 {
        self.inner.s_minus
    }

    #[getter]
    fn s_plus(&self) -> f64 {
        self.inner.s_plus
    }

    fn q_interval(&self) -> (f64, f64) {
        self.inner.q_interval()
    }

    fn midpoint_q(&self) -> f64 {
        self.inner.midpoint_q()
    }

    fn b_max(&self, x1: f64, x2: f64, q: f64) -> PyResult<f64> {
        let point = DomainPoint::new(x1, x2).map_err(err)?;
        Ok(core::b_max(&point, q, &self.inner).map_err(err)?.value)
    }

    fn b_max_gradient(&self, x1: f64, x2: f64, q: f64) -> PyResult<(f64, f64)> {
        let point = DomainPoint::new(x1, x2).map_err(err)?;
        let [a, b] = core::b_max_gradient(&point, q, &self.inner).map_err(err)?;
        Ok((a, b))
    }

    fn r_minus(&self, x1: f64, x2: f64) -> PyResult<f64> {
        let point = DomainPoint::new(x1, x2).map_err(err)?;
        core::r_minus(&point, &self.inner).map_err(err)
    }

    fn corollary_constant(&self, q_muck: f64, variant_name: &str) -> PyResult<f64> {
        core::corollary_constant(q_muck, &self.inner, variant(variant_name)?).map_err(err)
    }

    #[pyo3(signature = (q, nx = 64, ny = 64, region_margin = 0.02))]
    fn hessian_scan(
        &self,
        py: Python<'_>,
        q: f64,
        nx: usize,
        ny: usize,
        region_margin: f64,
    ) -> PyResult<Py<PyAny>> {
        let report = py
            .detach(|| core::hessian_scan(&self.inner, q, (nx, ny), region_margin))
            .map_err(err)?;
        to_py(py, &report)
    }

    #[pyo3(signature = (q, trials, seed = 0))]
    fn midpoint_concavity(
        &self,
        py: Python<'_>,
        q: f64,
        trials: usize,
        seed: u64,
    ) -> PyResult<Py<PyAny>> {
        let report = py
            .detach(|| verifier::midpoint_concavity(&self.inner, q, trials, seed))
            .map_err(err)?;
        to_py(py, &report)
    }

    #[pyo3(signature = (trials, seed = 0))]
    fn segment_containment(&self, py: Python<'_>, trials: usize, seed: u64) -> PyResult<Py<PyAny>> {
        let report = py
            .detach(|| core::segment_containment(&self.inner, trials, seed))
            .map_err(err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        let b = &self.inner;
        format!(
            "BellmanParams(p={}, delta={}, big_q={}, eps={}, s_minus={})",
            b.p, b.delta, b.big_q, b.eps, b.s_minus
        )
    }
}

#[pyfunction]
fn u_branch(t: f64, p: f64, which: &str) -> PyResult<f64> {
    core::u_branch(t, p, branch(which)?).map_err(err)
}

#[pyfunction]
fn make_params(p: f64, delta: f64, big_q: f64) -> PyResult<PyBellmanParams> {
    PyBellmanParams::new(p, delta, big_q)
}

#[pyfunction]
fn rh_characteristic(w: &PyDyadicWeight, p: f64) -> PyResult<f64> {
    Ok(core::rh_characteristic(&w.inner, p).map_err(err)?.value)
}

#[pyfunction]
fn aq_characteristic(w: &PyDyadicWeight, q_muck: f64) -> PyResult<f64> {
    Ok(core::aq_characteristic(&w.inner, q_muck)
        .map_err(err)?
        .value)
}

#[pyfunction]
fn doubling_constant(w: &PyDyadicWeight) -> f64 {
    core::doubling_constant(&w.inner).value
}

#[pyfunction]
#[pyo3(signature = (w, p, q_muck = 2.0))]
fn profile(py: Python<'_>, w: &PyDyadicWeight, p: f64, q_muck: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &core::profile(&w.inner, p, q_muck).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (w, p, q, delta = None, big_q = None))]
fn verify_theorem(
    py: Python<'_>,
    w: &PyDyadicWeight,
    p: f64,
    q: f64,
    delta: Option<f64>,
    big_q: Option<f64>,
) -> PyResult<Py<PyAny>> {
    to_py(
        py,
        &core::verify_theorem(&w.inner, p, q, delta, big_q).map_err(err)?,
    )
}

#[pyfunction]
#[pyo3(signature = (w, p, q_muck, variant_name = "w"))]
fn verify_corollary(
    py: Python<'_>,
    w: &PyDyadicWeight,
    p: f64,
    q_muck: f64,
    variant_name: &str,
) -> PyResult<Py<PyAny>> {
    to_py(
        py,
        &core::verify_corollary(&w.inner, p, q_muck, variant(variant_name)?).map_err(err)?,
    )
}

/// The level-sum chain with parameters measured from `w` unless overridden.
#[pyfunction]
#[pyo3(signature = (w, p, q, delta = None, big_q = None))]
fn induction_chain(
    py: Python<'_>,
    w: &PyDyadicWeight,
    p: f64,
    q: f64,
    delta: Option<f64>,
    big_q: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let params = measured_params(&w.inner, p, delta, big_q).map_err(err)?;
    to_py(
        py,
        &core::induction_chain(&w.inner, p, q, &params).map_err(err)?,
    )
}

#[allow(clippy::too_many_arguments)]
fn search_config(
    depth: u32,
    p: f64,
    q: f64,
    delta_cap: f64,
    q_cap: f64,
    iterations: usize,
    step_scale: f64,
    seed: u64,
) -> SearchConfig {
    SearchConfig {
        iterations,
        step_scale,
        seed,
        ..SearchConfig::new(depth, p, q, delta_cap, q_cap)
    }
}

#[pyfunction]
#[pyo3(signature = (depth, p, q, delta_cap, q_cap, seed = 0))]
fn sample_weight(
    depth: u32,
    p: f64,
    q: f64,
    delta_cap: f64,
    q_cap: f64,
    seed: u64,
) -> PyResult<PyDyadicWeight> {
    let config = search_config(depth, p, q, delta_cap, q_cap, 0, 0.5, seed);
    Ok(PyDyadicWeight {
        inner: core::sample_weight(&config).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (depth, p, q, delta_cap, q_cap, iterations = 1000, step_scale = 0.5, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn local_search(
    py: Python<'_>,
    depth: u32,
    p: f64,
    q: f64,
    delta_cap: f64,
    q_cap: f64,
    iterations: usize,
    step_scale: f64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let config = search_config(depth, p, q, delta_cap, q_cap, iterations, step_scale, seed);
    let result = py.detach(|| core::local_search(&config)).map_err(err)?;
    to_py(py, &result)
}

#[pymodule]
fn dyadic_bellman_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDyadicWeight>()?;
    m.add_class::<PyBellmanParams>()?;
    m.add_function(wrap_pyfunction!(u_branch, m)?)?;
    m.add_function(wrap_pyfunction!(make_params, m)?)?;
    m.add_function(wrap_pyfunction!(rh_characteristic, m)?)?;
    m.add_function(wrap_pyfunction!(aq_characteristic, m)?)?;
    m.add_function(wrap_pyfunction!(doubling_constant, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(verify_corollary, m)?)?;
    m.add_function(wrap_pyfunction!(induction_chain, m)?)?;
    m.add_function(wrap_pyfunction!(sample_weight, m)?)?;
    m.add_function(wrap_pyfunction!(local_search, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
