//! Python bindings: physical constants, Emden integration, field
//! evaluation, lifespan classification and residual checks.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use rotsol::classification;
use rotsol::emden::{self, EmdenState2D, EmdenState3D, IntegrateOptions};
use rotsol::fields::{Field3D, TrajectoryField3D};
use rotsol::profile::DensityProfile;
use rotsol::verification::{self, QuadOptions};
use rotsol::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::State(_) | Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Polytropic constant `K`, exponent `gamma`, profile constants `lambda`
/// and `alpha`, swirl `xi` and optional viscosity `mu`.
#[pyclass(name = "PhysParams", frozen)]
struct PyPhysParams(rotsol::PhysParams);

#[pymethods]
impl PyPhysParams {
    #[new]
    #[pyo3(signature = (k, gamma, lambda_, alpha, xi, mu = 0.0))]
    fn new(k: f64, gamma: f64, lambda_: f64, alpha: f64, xi: f64, mu: f64) -> PyResult<Self> {
        rotsol::PhysParams::new(k, gamma, lambda_, alpha, xi)
            .and_then(|p| p.with_mu(mu))
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn k(&self) -> f64 {
        self.0.k()
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }
    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda()
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }
    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi()
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu()
    }

    fn pressure(&self, rho: f64) -> f64 {
        self.0.pressure(rho)
    }

    /// Density profile `f(s)`.
    fn profile(&self, s: f64) -> PyResult<f64> {
        DensityProfile::new(self.0).eval(s).map_err(to_py)
    }

    /// `(f'(s), smooth)`; `smooth` is false at a non-C¹ cutoff.
    fn profile_slope(&self, s: f64) -> PyResult<(f64, bool)> {
        let d = DensityProfile::new(self.0).derivative(s).map_err(to_py)?;
        Ok((d.value, d.smooth))
    }

    /// Support boundary `s*`, if the profile has compact support.
    fn cutoff_s(&self) -> Option<f64> {
        DensityProfile::new(self.0).cutoff_s()
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "PhysParams(k={}, gamma={}, lambda_={}, alpha={}, xi={}, mu={})",
            p.k(),
            p.gamma(),
            p.lambda(),
            p.alpha(),
            p.xi(),
            p.mu()
        )
    }
}

/// Scale factors and rates `(t, a, a_dot, b, b_dot)` of the 3D family.
#[pyclass(name = "EmdenState3D", frozen)]
struct PyState3D(EmdenState3D);

#[pymethods]
impl PyState3D {
    #[new]
    #[pyo3(signature = (a, a_dot, b, b_dot, t = 0.0))]
    fn new(a: f64, a_dot: f64, b: f64, b_dot: f64, t: f64) -> PyResult<Self> {
        EmdenState3D::new(t, a, a_dot, b, b_dot).map(Self).map_err(to_py)
    }

    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }
    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }
    #[getter]
    fn a_dot(&self) -> f64 {
        self.0.a_dot
    }
    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }
    #[getter]
    fn b_dot(&self) -> f64 {
        self.0.b_dot
    }

    fn __repr__(&self) -> String {
        let s = &self.0;
        format!(
            "EmdenState3D(a={}, a_dot={}, b={}, b_dot={}, t={})",
            s.a, s.a_dot, s.b, s.b_dot, s.t
        )
    }
}

/// An integrated 3D trajectory together with its solution fields.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory(TrajectoryField3D);

#[pymethods]
impl PyTrajectory {
    /// Recorded samples as `(t, a, a_dot, b, b_dot)` tuples.
    fn samples(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        self.0
            .trajectory
            .samples
            .iter()
            .map(|s| (s.t, s.a, s.a_dot, s.b, s.b_dot))
            .collect()
    }

    /// Termination record as a dict.
    fn termination<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json(py, &self.0.trajectory.termination)
    }

    fn span(&self) -> (f64, f64) {
        self.0.trajectory.span()
    }

    fn state_at(&self, t: f64) -> Option<PyState3D> {
        self.0.trajectory.state_at(t).map(PyState3D)
    }

    /// `(rho, (u1, u2, u3), s, p)` at time `t`.
    fn field(&self, t: f64, x: f64, y: f64, z: f64) -> PyResult<FieldTuple> {
        let s = self.0.at(t).and_then(|f| f.eval(x, y, z)).map_err(to_py)?;
        Ok((s.rho, (s.u[0], s.u[1], s.u[2]), s.s, s.p))
    }

    /// Mass and momentum residuals at stencil size `h` (and `h/2` for the
    /// observed order), as a dict.
    #[pyo3(signature = (t, x, y, z, h = 1e-3, mu = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn residual<'py>(
        &self,
        py: Python<'py>,
        t: f64,
        x: f64,
        y: f64,
        z: f64,
        h: f64,
        mu: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let rep = verification::refined_residual(&self.0, t, x, y, z, h, mu).map_err(to_py)?;
        json(py, &rep)
    }

    /// Total mass at time `t` with the default quadrature.
    fn total_mass(&self, t: f64) -> PyResult<f64> {
        verification::total_mass(&self.0, t, &QuadOptions::default())
            .map(|m| m.total_mass)
            .map_err(to_py)
    }
}

type FieldTuple = (f64, (f64, f64, f64), f64, f64);

#[pyfunction]
fn emden_rhs_3d(p: PyRef<'_, PyPhysParams>, state: PyRef<'_, PyState3D>) -> PyResult<(f64, f64, f64, f64)> {
    let r = emden::emden_rhs_3d(&state.0, &p.0).map_err(to_py)?;
    Ok((r.a_dot, r.a_ddot, r.b_dot, r.b_ddot))
}

#[pyfunction]
fn energy_3d(p: PyRef<'_, PyPhysParams>, state: PyRef<'_, PyState3D>) -> PyResult<f64> {
    emden::energy_3d(&state.0, &p.0).map(|e| e.value).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p, a, a_dot, t = 0.0))]
fn energy_2d(p: PyRef<'_, PyPhysParams>, a: f64, a_dot: f64, t: f64) -> PyResult<f64> {
    let s = EmdenState2D::new(t, a, a_dot).map_err(to_py)?;
    emden::energy_2d(&s, &p.0).map(|e| e.value).map_err(to_py)
}

/// Integrates the 3D Emden system; `times` selects the recorded samples
/// (every accepted step when omitted).
#[pyfunction]
#[pyo3(signature = (p, initial, t_end, rel_tol = 1e-10, abs_tol = 1e-12, times = None))]
fn integrate_3d(
    p: PyRef<'_, PyPhysParams>,
    initial: PyRef<'_, PyState3D>,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
    times: Option<Vec<f64>>,
) -> PyResult<PyTrajectory> {
    let opts = IntegrateOptions::new(rel_tol, abs_tol).with_dense_times(times.unwrap_or_default());
    let traj = emden::integrate_3d(&p.0, &initial.0, t_end, &opts).map_err(to_py)?;
    Ok(PyTrajectory(TrajectoryField3D::new(p.0, traj)))
}

/// `(rho, (u1, u2, u3), s, p)` of the field frozen at `state`.
#[pyfunction]
fn eval_field_3d(
    p: PyRef<'_, PyPhysParams>,
    state: PyRef<'_, PyState3D>,
    x: f64,
    y: f64,
    z: f64,
) -> PyResult<FieldTuple> {
    let s = Field3D::new(p.0, state.0)
        .and_then(|f| f.eval(x, y, z))
        .map_err(to_py)?;
    Ok((s.rho, (s.u[0], s.u[1], s.u[2]), s.s, s.p))
}

#[pyfunction]
fn vorticity_3d(p: PyRef<'_, PyPhysParams>, state: PyRef<'_, PyState3D>) -> PyResult<(f64, f64, f64)> {
    let w = Field3D::new(p.0, state.0).map_err(to_py)?.vorticity();
    Ok((w[0], w[1], w[2]))
}

/// Lifespan classification as a dict with `verdict`, `T`, `basis`, `case`.
#[pyfunction]
fn classify_3d<'py>(
    py: Python<'py>,
    p: PyRef<'_, PyPhysParams>,
    initial: PyRef<'_, PyState3D>,
) -> PyResult<Bound<'py, PyAny>> {
    json(py, &classification::classify_3d(&p.0, &initial.0))
}

#[pyfunction]
fn probe_open_case<'py>(
    py: Python<'py>,
    p: PyRef<'_, PyPhysParams>,
    initial: PyRef<'_, PyState3D>,
    t_horizon: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let c = classification::probe_open_case(&p.0, &initial.0, t_horizon, tol).map_err(to_py)?;
    json(py, &c)
}

/// Period of the 2D scale factor as a dict with an `outcome` key.
#[pyfunction]
#[pyo3(signature = (p, a0, a1, t_max, tol = 1e-10))]
fn detect_period_2d<'py>(
    py: Python<'py>,
    p: PyRef<'_, PyPhysParams>,
    a0: f64,
    a1: f64,
    t_max: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = EmdenState2D::new(0.0, a0, a1).map_err(to_py)?;
    let out = classification::detect_period_2d(&p.0, &s, t_max, tol).map_err(to_py)?;
    json(py, &out)
}

/// C¹ regularity of the profile at its cutoff, as a dict.
#[pyfunction]
fn cutoff_regularity<'py>(py: Python<'py>, p: PyRef<'_, PyPhysParams>) -> PyResult<Bound<'py, PyAny>> {
    json(py, &verification::cutoff_regularity_check(&DensityProfile::new(p.0)))
}

#[pymodule]
fn pyrotsol(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPhysParams>()?;
    m.add_class::<PyState3D>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(emden_rhs_3d, m)?)?;
    m.add_function(wrap_pyfunction!(energy_3d, m)?)?;
    m.add_function(wrap_pyfunction!(energy_2d, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_3d, m)?)?;
    m.add_function(wrap_pyfunction!(eval_field_3d, m)?)?;
    m.add_function(wrap_pyfunction!(vorticity_3d, m)?)?;
    m.add_function(wrap_pyfunction!(classify_3d, m)?)?;
    m.add_function(wrap_pyfunction!(probe_open_case, m)?)?;
    m.add_function(wrap_pyfunction!(detect_period_2d, m)?)?;
    m.add_function(wrap_pyfunction!(cutoff_regularity, m)?)?;
    Ok(())
}
