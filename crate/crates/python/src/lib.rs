//! Python bindings: parameters, the vector field and its equilibria, local
//! stability, integration, Lyapunov estimates and the hole diagnostics.

use lv_core::analysis::{self, LyapunovConfig};
use lv_core::integrator::{self, IntegratorConfig};
use lv_core::model::{self, SteadyLabel};
use lv_core::topology::{self, BandConfig, BaseParams, ScanOptions, ScanSim, Thresholds};
use lv_core::{Error, State};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(lv_surgery, IntegrationError, PyRuntimeError, "The integrator failed or left the admissible region.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::EmptyResult(_) | Error::InsufficientData(_) => PyValueError::new_err(e.to_string()),
        _ => IntegrationError::new_err(e.to_string()),
    }
}

type Triple = (f64, f64, f64);

fn state(s: Triple) -> State {
    State::new(s.0, s.1, s.2)
}

fn triple(s: &State) -> Triple {
    (s.x, s.y, s.z)
}

fn label(name: &str) -> PyResult<SteadyLabel> {
    name.parse::<SteadyLabel>().map_err(PyValueError::new_err)
}

/// Nonnegative model parameters `(A, B, C)`.
#[pyclass(frozen, skip_from_py_object, name = "Params", module = "lv_surgery")]
#[derive(Clone, Copy)]
struct PyParams(model::Params);

#[pymethods]
impl PyParams {
    #[new]
    #[allow(non_snake_case)]
    fn new(A: f64, B: f64, C: f64) -> PyResult<Self> {
        model::Params::new(A, B, C).map(PyParams).map_err(to_py)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c()
    }

    /// `B/A`, or `None` when `A = 0`.
    #[getter]
    fn ratio(&self) -> Option<f64> {
        self.0.ratio()
    }

    fn __repr__(&self) -> String {
        format!("Params(A={}, B={}, C={})", self.0.a(), self.0.b(), self.0.c())
    }
}

#[pyclass(frozen, name = "Trajectory", module = "lv_surgery")]
struct PyTrajectory(integrator::Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    /// Samples as `(X, Y, Z)` tuples.
    #[getter]
    fn states(&self) -> Vec<Triple> {
        self.0.states.iter().map(triple).collect()
    }

    #[getter]
    fn accepted_steps(&self) -> u64 {
        self.0.stats.accepted
    }

    #[getter]
    fn rejected_steps(&self) -> u64 {
        self.0.stats.rejected
    }

    /// Samples with `t >= t_cut`.
    fn after(&self, t_cut: f64) -> PyResult<PyTrajectory> {
        integrator::discard_transient(&self.0, t_cut).map(PyTrajectory).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Trajectory(samples={}, t_end={:?})", self.0.len(), self.0.final_time())
    }
}

#[pyfunction]
fn vector_field(p: &PyParams, s: Triple) -> PyResult<Triple> {
    let f = model::vector_field(&p.0, &state(s)).map_err(to_py)?;
    Ok((f[0], f[1], f[2]))
}

#[pyfunction]
fn jacobian(p: &PyParams, s: Triple) -> PyResult<[[f64; 3]; 3]> {
    model::jacobian(&p.0, &state(s)).map_err(to_py)
}

/// All five equilibria as dicts with `label`, `point` (or `None`), `defined` and `admissible`.
#[pyfunction]
fn steady_states<'py>(py: Python<'py>, p: &PyParams) -> PyResult<Vec<Bound<'py, PyDict>>> {
    model::steady_states(&p.0)
        .entries
        .iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("label", e.label.as_str())?;
            d.set_item("point", e.point.as_ref().map(triple))?;
            d.set_item("defined", e.defined)?;
            d.set_item("admissible", e.admissible)?;
            Ok(d)
        })
        .collect()
}

/// Closed-form eigenvalues of `Ss1`, `Ss2` or `Ss3`.
#[pyfunction]
fn spectrum(p: &PyParams, which: &str) -> PyResult<Vec<Complex64>> {
    let spec = model::spectrum_closed_form(&p.0, label(which)?).map_err(to_py)?;
    Ok(spec.eigenvalues.to_vec())
}

/// Eigenvalues of the Jacobian at an arbitrary state, from its characteristic cubic.
#[pyfunction]
fn spectrum_numeric(p: &PyParams, s: Triple) -> PyResult<Vec<Complex64>> {
    let spec = model::spectrum_numeric(&p.0, &state(s)).map_err(to_py)?;
    Ok(spec.eigenvalues.to_vec())
}

/// Stability class of an equilibrium, e.g. `"saddle"` or `"stable_vortex_in"`.
#[pyfunction]
fn classify(p: &PyParams, which: &str) -> PyResult<String> {
    let spec = model::spectrum_closed_form(&p.0, label(which)?).map_err(to_py)?;
    let kind = analysis::classify_point(&spec).kind;
    Ok(kind_name(kind))
}

fn kind_name(kind: analysis::PointKind) -> String {
    use analysis::PointKind::*;
    match kind {
        Saddle => "saddle",
        StableNode => "stable_node",
        UnstableNode => "unstable_node",
        StableVortexIn => "stable_vortex_in",
        UnstableVortexOut => "unstable_vortex_out",
        RepellingPlanarAttractingAxis => "repelling_planar_attracting_axis",
        AttractingPlanarRepellingAxis => "attracting_planar_repelling_axis",
        Degenerate => "degenerate",
    }
    .to_string()
}

#[pyfunction]
fn chaotic_candidate(p: &PyParams) -> PyResult<bool> {
    analysis::chaotic_candidate(&p.0).map(|r| r.chaotic_candidate).map_err(to_py)
}

/// Distance from a state to the slow manifold `X = 1, Y + A Z = 1 + C`.
#[pyfunction]
fn slow_manifold_distance(p: &PyParams, s: Triple) -> PyResult<f64> {
    Ok(model::slow_manifold(&p.0).map_err(to_py)?.distance(&state(s)))
}

#[pyfunction]
#[pyo3(signature = (p, s0, t_end, rtol = 1e-9, atol = 1e-12))]
fn integrate(py: Python<'_>, p: &PyParams, s0: Triple, t_end: f64, rtol: f64, atol: f64) -> PyResult<PyTrajectory> {
    let cfg = IntegratorConfig { rtol, atol, ..Default::default() };
    let p = p.0;
    py.detach(|| integrator::integrate(&p, &state(s0), t_end, &cfg)).map(PyTrajectory).map_err(to_py)
}

/// Classical RK4 with a constant step; bit-reproducible.
#[pyfunction]
fn integrate_fixed(py: Python<'_>, p: &PyParams, s0: Triple, h: f64, n_steps: u64) -> PyResult<PyTrajectory> {
    let p = p.0;
    py.detach(|| integrator::integrate_fixed(&p, &state(s0), h, n_steps)).map(PyTrajectory).map_err(to_py)
}

/// Largest Lyapunov exponent as `(estimate, standard_error, windows)`.
#[pyfunction]
#[pyo3(signature = (p, s0 = None, t_total = 5000.0, t_transient = 500.0, t_renorm = 1.0))]
fn lyapunov_max(
    py: Python<'_>,
    p: &PyParams,
    s0: Option<Triple>,
    t_total: f64,
    t_transient: f64,
    t_renorm: f64,
) -> PyResult<(f64, f64, usize)> {
    let cfg = LyapunovConfig { t_total, t_transient, t_renorm, ..Default::default() };
    let s0 = s0.map(state).unwrap_or(integrator::DEFAULT_INITIAL_STATE);
    let p = p.0;
    let est = py.detach(|| analysis::lyapunov_max(&p, &s0, &cfg)).map_err(to_py)?;
    Ok((est.estimate, est.standard_error, est.windows))
}

/// Hole metrics of a (post-transient) trajectory around the slow manifold.
#[pyfunction]
fn hole_metrics<'py>(py: Python<'py>, tr: &PyTrajectory, p: &PyParams) -> PyResult<Bound<'py, PyDict>> {
    let m = topology::hole_metrics(&tr.0, &p.0, &BandConfig::default()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("min_distance", m.min_distance)?;
    d.set_item("angular_coverage", m.angular_coverage)?;
    d.set_item("n_samples_in_band", m.n_samples_in_band)?;
    d.set_item("axial_band", (m.band.axial_lo, m.band.axial_hi))?;
    d.set_item("shell_radius", m.band.shell_radius)?;
    Ok(d)
}

/// Sweep `A` with `B` and `C` fixed. One dict per value, ordered by `A`.
#[pyfunction]
#[pyo3(signature = (b, c, a_values, t_end = 40000.0, t_cut = None, jobs = None))]
fn surgery_scan<'py>(
    py: Python<'py>,
    b: f64,
    c: f64,
    a_values: Vec<f64>,
    t_end: f64,
    t_cut: Option<f64>,
    jobs: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let sim = ScanSim { t_end, t_cut, ..Default::default() };
    let opts = ScanOptions { jobs, keep_trajectories: false };
    let result = py
        .detach(|| {
            topology::surgery_scan(
                &BaseParams { b, c },
                &a_values,
                &sim,
                &BandConfig::default(),
                &Thresholds::default(),
                &opts,
            )
        })
        .map_err(to_py)?;
    result
        .entries
        .iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("A", e.a)?;
            d.set_item("run_id", &e.run_id)?;
            d.set_item("min_distance", e.outcome.metrics().map(|m| m.min_distance))?;
            d.set_item("angular_coverage", e.outcome.metrics().map(|m| m.angular_coverage))?;
            d.set_item("verdict", e.outcome.verdict_label())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn lv_surgery(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyTrajectory>()?;
    m.add("IntegrationError", m.py().get_type::<IntegrationError>())?;
    m.add("DEFAULT_INITIAL_STATE", triple(&integrator::DEFAULT_INITIAL_STATE))?;
    m.add_function(wrap_pyfunction!(vector_field, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(steady_states, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(chaotic_candidate, m)?)?;
    m.add_function(wrap_pyfunction!(slow_manifold_distance, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_fixed, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_max, m)?)?;
    m.add_function(wrap_pyfunction!(hole_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(surgery_scan, m)?)?;
    Ok(())
}
