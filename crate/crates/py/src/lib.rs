//! Python bindings for sbvpx.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use sbvpx::counterex3d::{build_complex, r_grid, verify_violation};
use sbvpx::geom::P2;
use sbvpx::retract::{project_w as core_project_w, RetractionConfig};
use sbvpx::sbv2d::{synthesize, DiscreteSbvMap, SynthSpec};
use sbvpx::scenario::{parse_scenario, run};
use sbvpx::sobolev_approx::{global_approx as core_global_approx, local_phi as core_local_phi, LocalConfig};
use sbvpx::vexp::{log_holder_diagnose, luxembourg_norm as core_norm, modular as core_modular, ExponentField, ExponentSpec, DEFAULT_SCALES};
use serde::Serialize;

fn err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (s,))
}

/// Variable exponent p(x) built from a JSON spec.
#[pyclass(name = "ExponentField", module = "sbvpx_py", frozen)]
struct PyExponent(ExponentField);

#[pymethods]
impl PyExponent {
    #[new]
    fn new(spec_json: &str) -> PyResult<Self> {
        let spec: ExponentSpec = serde_json::from_str(spec_json).map_err(err)?;
        ExponentField::new(spec).map(PyExponent).map_err(err)
    }

    #[staticmethod]
    fn constant(value: f64, radius: f64) -> PyResult<Self> {
        let d = sbvpx::vexp::Domain::Disk { center: P2::ZERO, radius };
        ExponentField::constant(value, d).map(PyExponent).map_err(err)
    }

    fn __call__(&self, x: f64, y: f64) -> f64 {
        self.0.eval(P2::new(x, y))
    }

    #[getter]
    fn p_minus(&self) -> f64 {
        self.0.p_minus
    }

    #[getter]
    fn p_plus(&self) -> f64 {
        self.0.p_plus
    }

    #[getter]
    fn is_constant(&self) -> bool {
        self.0.is_constant()
    }

    #[pyo3(signature = (sample_budget = 20000, seed = 0))]
    fn log_holder<'py>(&self, py: Python<'py>, sample_budget: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let r = log_holder_diagnose(&self.0, sample_budget, &DEFAULT_SCALES, seed).map_err(err)?;
        to_py(py, &r)
    }
}

/// Piecewise smooth map on a disk with a polygonal jump set.
#[pyclass(name = "SbvMap", module = "sbvpx_py", frozen)]
struct PyMap(DiscreteSbvMap);

#[pymethods]
impl PyMap {
    #[staticmethod]
    fn synthesize(spec_json: &str, seed: u64) -> PyResult<Self> {
        let spec: SynthSpec = serde_json::from_str(spec_json).map_err(err)?;
        synthesize(&spec, seed).map(PyMap).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let m = DiscreteSbvMap::from_json(text).map_err(err)?;
        m.validate().map_err(err)?;
        Ok(PyMap(m))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[pyo3(signature = (size = 480.0))]
    fn to_svg(&self, size: f64) -> String {
        self.0.to_svg(size)
    }

    fn __call__(&self, x: f64, y: f64) -> Option<Vec<f64>> {
        self.0.eval(P2::new(x, y))
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.0.radius
    }

    #[getter]
    fn center(&self) -> (f64, f64) {
        (self.0.center.x, self.0.center.y)
    }

    fn jump_length(&self) -> f64 {
        self.0.jump.total_length()
    }

    /// (bulk, jump) parts of the total variation over the domain.
    fn total_variation(&self) -> (f64, f64) {
        self.0.total_variation_parts(&self.0.domain())
    }

    fn linf(&self) -> f64 {
        self.0.linf(&self.0.domain())
    }

    fn __repr__(&self) -> String {
        format!("SbvMap(k={}, cells={}, jump_segments={})", self.0.k, self.0.cells.len(), self.0.jump.segments.len())
    }
}

/// Luxembourg norm of |∇u| over the domain of u.
#[pyfunction]
fn gradient_norm(u: &PyMap, p: &PyExponent) -> PyResult<f64> {
    core_norm(&u.0.grad_integrand(), &p.0, &u.0.domain()).map_err(err)
}

/// Modular ∫|∇u|^p(x) over the domain of u.
#[pyfunction]
fn gradient_modular(u: &PyMap, p: &PyExponent) -> PyResult<f64> {
    core_modular(&u.0.grad_integrand(), &p.0, &u.0.domain()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (u, x, y, r, p, eta, seed))]
#[allow(clippy::too_many_arguments)]
fn local_phi<'py>(py: Python<'py>, u: &PyMap, x: f64, y: f64, r: f64, p: &PyExponent, eta: f64, seed: u64) -> PyResult<(PyMap, Bound<'py, PyAny>)> {
    let res = core_local_phi(&u.0, P2::new(x, y), r, &p.0, eta, seed, &LocalConfig::default()).map_err(err)?;
    let rep = to_py(py, &res.report)?;
    Ok((PyMap(res.phi), rep))
}

#[pyfunction]
fn global_approx<'py>(py: Python<'py>, u: &PyMap, p: &PyExponent, s: f64, eta: f64, seed: u64) -> PyResult<(PyMap, Bound<'py, PyAny>)> {
    let rep = core_global_approx(&u.0, &p.0, s, eta, seed, &LocalConfig::default()).map_err(err)?;
    let summary = serde_json::json!({ "estimates": rep.estimates, "checks": rep.checks, "balls": rep.family.balls.len() });
    Ok((PyMap(rep.w), to_py(py, &summary)?))
}

#[pyfunction]
#[pyo3(signature = (w, p, seed, m_bound = None))]
fn project_w<'py>(py: Python<'py>, w: &PyMap, p: &PyExponent, seed: u64, m_bound: Option<f64>) -> PyResult<(PyMap, Bound<'py, PyAny>)> {
    let m = m_bound.unwrap_or_else(|| w.0.linf(&w.0.domain()).max(1.0));
    let cfg = RetractionConfig::new(w.0.k, m).map_err(err)?;
    let pr = core_project_w(&w.0, &p.0, &cfg, seed).map_err(err)?;
    let summary = serde_json::json!({
        "shift": pr.a, "energy_in": pr.energy_in, "energy_out": pr.energy_out,
        "energy_ratio": pr.energy_ratio, "newton_gap": pr.newton_gap,
    });
    Ok((PyMap(pr.w), to_py(py, &summary)?))
}

/// Builds the cone complex and returns its invariants with the R-grid margins.
#[pyfunction]
#[pyo3(signature = (epsilon, c_target, seed, axis_count = 200, grid = 32))]
fn counterexample<'py>(py: Python<'py>, epsilon: f64, c_target: f64, seed: u64, axis_count: usize, grid: usize) -> PyResult<Bound<'py, PyAny>> {
    let cx = build_complex(epsilon, c_target, axis_count, seed).map_err(err)?;
    let rep = verify_violation(&cx, &r_grid(cx.outer, grid)).map_err(err)?;
    let out = serde_json::json!({
        "cones": cx.len(), "kappa": cx.kappa, "h0": cx.h0, "invariants": cx.invariants(),
        "margins": rep.rows.iter().map(|r| r.margin).collect::<Vec<_>>(), "holds": rep.holds,
    });
    to_py(py, &out)
}

/// Runs a scenario given as JSON text and returns its report.
#[pyfunction]
#[pyo3(signature = (scenario_json, base_dir = "."))]
fn run_scenario<'py>(py: Python<'py>, scenario_json: &str, base_dir: &str) -> PyResult<Bound<'py, PyAny>> {
    let sc = parse_scenario(scenario_json).map_err(err)?;
    let out = run(&sc, std::path::Path::new(base_dir)).map_err(err)?;
    to_py(py, &out.report)
}

#[pymodule]
fn sbvpx_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExponent>()?;
    m.add_class::<PyMap>()?;
    m.add_function(wrap_pyfunction!(gradient_norm, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_modular, m)?)?;
    m.add_function(wrap_pyfunction!(local_phi, m)?)?;
    m.add_function(wrap_pyfunction!(global_approx, m)?)?;
    m.add_function(wrap_pyfunction!(project_w, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
