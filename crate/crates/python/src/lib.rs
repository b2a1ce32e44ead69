//! Python bindings for the scattering, asymptotics and evolver pipeline.

use hslab_core::asympt::{Asymptotics as CoreAsymptotics, DEFAULT_P};
use hslab_core::evolve::{evolve_to, init_state_with, sample_u, DtControl, EvolverState};
use hslab_core::field::{build_profile, DiffMethod, InitialProfile, ProfileSpec};
use hslab_core::harness::{self, config::RunConfig, Command};
use hslab_core::scattering::{scattering_table, validate_scattering, KGrid, Potential, ScatteringData};
use hslab_core::{special, HsError};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use std::path::PathBuf;

fn py_err(e: HsError) -> PyErr {
    match e {
        HsError::Config(_)
        | HsError::Domain(_)
        | HsError::Hypothesis { .. }
        | HsError::Truncation { .. }
        | HsError::Transition { .. }
        | HsError::Cfl { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Converts any serialisable value to plain Python objects; complex numbers
/// become `[re, im]` lists.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

/// Initial data `u0` with `m0 = -u0''` on a uniform grid over `[-L, L]`.
#[pyclass(name = "Profile", frozen)]
struct PyProfile {
    inner: InitialProfile,
}

#[pymethods]
impl PyProfile {
    #[staticmethod]
    #[pyo3(signature = (amplitude, sigma=1.0, center=0.0, half_width=12.0, nodes=2048))]
    fn gaussian(amplitude: f64, sigma: f64, center: f64, half_width: f64, nodes: usize) -> PyResult<Self> {
        let spec = ProfileSpec::gaussian(amplitude, sigma, center, half_width, nodes);
        Ok(Self {
            inner: build_profile(&spec).map_err(py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (half_width=12.0, nodes=2048))]
    fn zero(half_width: f64, nodes: usize) -> PyResult<Self> {
        Ok(Self {
            inner: build_profile(&ProfileSpec::zero(half_width, nodes)).map_err(py_err)?,
        })
    }

    /// Reads an `x,u0` CSV on a uniform grid symmetric about zero.
    #[staticmethod]
    fn from_csv(path: PathBuf) -> PyResult<Self> {
        let spec = ProfileSpec::from_csv(&path).map_err(py_err)?;
        Ok(Self {
            inner: build_profile(&spec).map_err(py_err)?,
        })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid.nodes()
    }

    #[getter]
    fn u0(&self) -> Vec<f64> {
        self.inner.u0.clone()
    }

    #[getter]
    fn m0(&self) -> Vec<f64> {
        self.inner.m0.clone()
    }

    fn min_m_plus_1(&self) -> f64 {
        self.inner.min_m_plus_1()
    }

    fn __repr__(&self) -> String {
        format!(
            "Profile(L={}, N={}, derivatives={})",
            self.inner.grid.half_width,
            self.inner.grid.node_count,
            self.inner.method.name()
        )
    }
}

/// Sampled `a(k)`, `b(k)`, `r(k)` with the shifts `c` and `c0`.
#[pyclass(name = "ScatteringData", frozen)]
struct PyScatteringData {
    inner: ScatteringData,
}

#[pymethods]
impl PyScatteringData {
    #[getter]
    fn k(&self) -> Vec<f64> {
        self.inner.k.clone()
    }

    #[getter]
    fn a(&self) -> Vec<Complex64> {
        self.inner.a.clone()
    }

    #[getter]
    fn b(&self) -> Vec<Complex64> {
        self.inner.b.clone()
    }

    #[getter]
    fn r(&self) -> Vec<Complex64> {
        self.inner.r.clone()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0
    }

    /// Unitarity, symmetry, small-k slope and gap diagnostics.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &validate_scattering(&self.inner))
    }

    /// Interpolated reflection coefficient (zero outside the sampled band).
    fn reflection(&self, k: f64) -> Complex64 {
        self.inner.reflection().eval(k)
    }

    fn __len__(&self) -> usize {
        self.inner.k.len()
    }
}

/// Scattering data of `profile` on a symmetric k-grid, optionally refined
/// around the given points.
#[pyfunction]
#[pyo3(signature = (profile, k_count=1024, k_max=8.0, refine=Vec::new(), refine_width=0.1, refine_factor=4))]
fn scatter(
    py: Python<'_>,
    profile: &PyProfile,
    k_count: usize,
    k_max: f64,
    refine: Vec<f64>,
    refine_width: f64,
    refine_factor: usize,
) -> PyResult<PyScatteringData> {
    let inner = py
        .detach(|| -> hslab_core::Result<ScatteringData> {
            let pot = Potential::from_profile(&profile.inner)?;
            let mut grid = KGrid::symmetric(k_count, k_max)?;
            if !refine.is_empty() && refine_factor > 1 {
                grid = grid.refined(&refine, refine_width, refine_factor);
            }
            scattering_table(&pot, &grid)
        })
        .map_err(py_err)?;
    Ok(PyScatteringData { inner })
}

/// Leading-order long-time asymptotics built from scattering data.
#[pyclass(name = "Asymptotics", frozen)]
struct PyAsymptotics {
    inner: CoreAsymptotics,
}

#[pymethods]
impl PyAsymptotics {
    #[new]
    fn new(data: &PyScatteringData) -> Self {
        Self {
            inner: CoreAsymptotics::new(data.inner.clone()),
        }
    }

    /// All slow-region scalars for `xi < 0` at time `t`.
    fn coefficients<'py>(&self, py: Python<'py>, xi: f64, t: f64) -> PyResult<Bound<'py, PyAny>> {
        let c = self.inner.coefficients(xi, t).map_err(py_err)?;
        to_py(py, &c)
    }

    /// `u` and `x(y, t)` at leading order, with the error scale.
    #[pyo3(signature = (y, t, p=DEFAULT_P))]
    fn leading_order<'py>(&self, py: Python<'py>, y: f64, t: f64, p: f64) -> PyResult<Bound<'py, PyAny>> {
        let s = self.inner.leading_order(y, t, p).map_err(py_err)?;
        to_py(py, &s)
    }
}

/// Direct solver for the HS equation started from a profile.
#[pyclass(name = "Evolver")]
struct PyEvolver {
    state: EvolverState,
}

#[pymethods]
impl PyEvolver {
    #[new]
    #[pyo3(signature = (profile, method="fd4"))]
    fn new(profile: &PyProfile, method: &str) -> PyResult<Self> {
        let method = match method {
            "fd4" => DiffMethod::FiniteDifference4,
            "spectral" => DiffMethod::Spectral,
            other => return Err(PyValueError::new_err(format!("method must be fd4 or spectral, got {other}"))),
        };
        Ok(Self {
            state: init_state_with(&profile.inner, method).map_err(py_err)?,
        })
    }

    /// Advances to time `target`; returns the conservation log.
    #[pyo3(signature = (target, dt=None, conservation_tol=1e-6))]
    fn evolve_to<'py>(
        &mut self,
        py: Python<'py>,
        target: f64,
        dt: Option<f64>,
        conservation_tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let control = DtControl {
            dt,
            ..DtControl::auto(conservation_tol * self.state.c_initial.abs().max(1.0))
        };
        let state = &self.state;
        let (next, log) = py.detach(|| evolve_to(state, target, &control)).map_err(py_err)?;
        self.state = next;
        to_py(py, &log)
    }

    fn sample_u(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        sample_u(&self.state, &x).map_err(py_err)
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.state.grid.nodes()
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.state.u.clone()
    }

    #[getter]
    fn m(&self) -> Vec<f64> {
        self.state.m.clone()
    }

    #[getter]
    fn c_initial(&self) -> f64 {
        self.state.c_initial
    }

    /// `|c(t) - c(0)|` with the flux through the left edge accounted for.
    fn drift(&self) -> f64 {
        self.state.drift()
    }
}

#[pyfunction]
fn log_gamma(z: Complex64) -> PyResult<Complex64> {
    special::log_gamma(z).map_err(py_err)
}

#[pyfunction]
fn nu_of_modulus(r_sq: f64) -> PyResult<f64> {
    special::nu_of_modulus(r_sq).map_err(py_err)
}

/// Runs a batch command (`scatter`, `asympt`, `evolve`, `compare`) and
/// returns the CLI exit code.
#[pyfunction]
#[pyo3(signature = (command, config, out=None))]
fn run(py: Python<'_>, command: &str, config: PathBuf, out: Option<PathBuf>) -> PyResult<i32> {
    let cmd = Command::parse(command).ok_or_else(|| PyValueError::new_err(format!("unknown command {command}")))?;
    let cfg = match RunConfig::load(&config) {
        Ok(c) => c,
        Err(_) => return Ok(harness::EXIT_CONFIG),
    };
    let out = out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(py.detach(|| match harness::run(cmd, &cfg, &out) {
        Ok(o) => o.exit_code(),
        Err(e) => harness::exit_code(&e),
    }))
}

#[pymodule]
fn hslab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_class::<PyScatteringData>()?;
    m.add_class::<PyAsymptotics>()?;
    m.add_class::<PyEvolver>()?;
    m.add_function(wrap_pyfunction!(scatter, m)?)?;
    m.add_function(wrap_pyfunction!(log_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(nu_of_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
