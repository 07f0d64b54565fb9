//! Python bindings: walks, probe scans, reconstruction and phonon fits.

use ionwalk::dynamics::{step_size_from_physical, CarrierScale, FidelityModel};
use ionwalk::fock::{coherent_state, exact_position_density, fock_state, HilbertParams, MotionalEnsemble};
use ionwalk::grid::PositionGrid;
use ionwalk::probe::{self, ProbeAxis, SpinPrep};
use ionwalk::reconstruct::{self, ForwardKind, FourierData, ReconstructOptions};
use ionwalk::walk;
use ionwalk::C64;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: ionwalk::Error) -> PyErr {
    match e {
        ionwalk::Error::InvalidParameter(_)
        | ionwalk::Error::UnsupportedQuadrature { .. }
        | ionwalk::Error::DimensionMismatch { .. }
        | ionwalk::Error::InfeasibleBound { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

pub fn parse_model(s: &str) -> PyResult<FidelityModel> {
    FidelityModel::ALL
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| PyValueError::new_err(format!("unknown model {s:?}; expected lamb_dicke, third_order, x_diagonal or all_order")))
}

pub fn parse_axis(s: &str) -> PyResult<ProbeAxis> {
    match s {
        "x" => Ok(ProbeAxis::X),
        "p" => Ok(ProbeAxis::P),
        _ => Err(PyValueError::new_err(format!("unknown axis {s:?}; expected x or p"))),
    }
}

pub fn parse_prep(s: &str) -> PyResult<SpinPrep> {
    match s {
        "plus_z" => Ok(SpinPrep::PlusZ),
        "plus_y" => Ok(SpinPrep::PlusY),
        _ => Err(PyValueError::new_err(format!("unknown spin preparation {s:?}; expected plus_z or plus_y"))),
    }
}

pub fn parse_forward(s: &str) -> PyResult<ForwardKind> {
    match s {
        "linear" => Ok(ForwardKind::Linear),
        "x_diagonal" => Ok(ForwardKind::XDiagonal),
        _ => Err(PyValueError::new_err(format!("unknown forward model {s:?}; expected linear or x_diagonal"))),
    }
}

/// Walk parameters. `step_size` defaults to 2 Δx per ion.
#[pyclass(name = "WalkConfig", module = "ionwalk_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWalkConfig {
    inner: walk::WalkConfig,
}

#[pymethods]
impl PyWalkConfig {
    #[new]
    #[pyo3(signature = (n_steps, n_ions=1, eta=0.06, model="lamb_dicke", n_max=None, step_size=None, trials=walk::DEFAULT_TRIALS, seed=walk::DEFAULT_SEED, debye_waller=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_steps: usize,
        n_ions: usize,
        eta: f64,
        model: &str,
        n_max: Option<usize>,
        step_size: Option<f64>,
        trials: usize,
        seed: u64,
        debye_waller: bool,
    ) -> PyResult<Self> {
        let mut inner = walk::WalkConfig::new(n_steps, n_ions, eta, parse_model(model)?).map_err(to_py)?.with_trials(trials, seed);
        if let Some(n) = n_max {
            inner = inner.with_n_max(n);
        }
        if let Some(s) = step_size {
            inner = inner.with_step_size(s);
        }
        if debye_waller {
            inner.carrier_scale = CarrierScale::DebyeWaller;
        }
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.params.n_max
    }

    #[getter]
    fn step_size(&self) -> f64 {
        self.inner.step_size
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model.name()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "WalkConfig(n_steps={}, n_ions={}, eta={}, model='{}', n_max={}, step_size={})",
            c.n_steps, c.params.n_ions, c.params.eta, c.model, c.params.n_max, c.step_size
        )
    }
}

/// Motional state of the oscillator, possibly mixed.
#[pyclass(name = "Ensemble", module = "ionwalk_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnsemble {
    inner: MotionalEnsemble,
}

#[pymethods]
impl PyEnsemble {
    #[staticmethod]
    #[pyo3(signature = (n, n_max=60, eta=0.06))]
    fn fock(n: usize, n_max: usize, eta: f64) -> PyResult<Self> {
        let p = HilbertParams::new(n_max, eta, 1).map_err(to_py)?;
        let v = fock_state(n, &p).map_err(to_py)?;
        Ok(Self { inner: MotionalEnsemble::pure(p, v).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, n_max=60, eta=0.06))]
    fn coherent(alpha: num_complex::Complex64, n_max: usize, eta: f64) -> PyResult<Self> {
        let p = HilbertParams::new(n_max, eta, 1).map_err(to_py)?;
        let v = coherent_state(C64::new(alpha.re, alpha.im), &p).map_err(to_py)?;
        Ok(Self { inner: MotionalEnsemble::pure(p, v).map_err(to_py)? })
    }

    #[getter]
    fn mean_x(&self) -> f64 {
        self.inner.mean_x()
    }

    #[getter]
    fn x_second_moment(&self) -> f64 {
        self.inner.x_second_moment()
    }

    #[getter]
    fn pi_second_moment(&self) -> f64 {
        self.inner.pi_second_moment()
    }

    #[getter]
    fn mean_phonon(&self) -> f64 {
        self.inner.mean_phonon()
    }

    fn fock_populations(&self) -> Vec<f64> {
        self.inner.fock_populations()
    }

    /// Exact position density on `[-extent, extent]`; returns `(x, p)`.
    #[pyo3(signature = (extent, spacing=0.1))]
    fn density(&self, extent: f64, spacing: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let grid = PositionGrid::new(extent, spacing).map_err(to_py)?;
        let p = exact_position_density(&self.inner, &grid).map_err(to_py)?;
        Ok((grid.points().to_vec(), p))
    }

    /// Noiseless probe signal `<cos(k x)>` (`plus_z`) or `<sin(k x)>` (`plus_y`).
    #[pyo3(signature = (k, prep="plus_z", axis="x", model="lamb_dicke"))]
    fn expected_observable(&self, k: f64, prep: &str, axis: &str, model: &str) -> PyResult<f64> {
        probe::expected_observable(&self.inner, parse_prep(prep)?, k, parse_axis(axis)?, parse_model(model)?).map_err(to_py)
    }
}

#[pyclass(name = "WalkResult", module = "ionwalk_py", frozen, skip_from_py_object)]
struct PyWalkResult {
    inner: walk::WalkResult,
}

#[pymethods]
impl PyWalkResult {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Motional state after step `i` (0 is the initial state).
    fn ensemble(&self, i: usize) -> PyResult<PyEnsemble> {
        if i >= self.inner.len() {
            return Err(PyIndexError::new_err(format!("snapshot {i} out of range ({} snapshots)", self.inner.len())));
        }
        Ok(PyEnsemble { inner: self.inner.ensemble(i).map_err(to_py)? })
    }

    fn return_fidelity(&self) -> Option<f64> {
        self.inner.return_fidelity()
    }
}

#[pyfunction]
fn quantum_walk(config: &PyWalkConfig) -> PyResult<PyWalkResult> {
    Ok(PyWalkResult { inner: walk::quantum_walk(&config.inner).map_err(to_py)? })
}

#[pyfunction]
fn classical_walk(py: Python<'_>, config: &PyWalkConfig) -> PyResult<PyWalkResult> {
    let inner = py.detach(|| walk::classical_walk(&config.inner)).map_err(to_py)?;
    Ok(PyWalkResult { inner })
}

#[pyfunction]
fn reversed_walk(config: &PyWalkConfig) -> PyResult<PyWalkResult> {
    Ok(PyWalkResult { inner: walk::reversed_walk(&config.inner).map_err(to_py)? })
}

#[pyfunction]
fn two_ion_walk(config: &PyWalkConfig) -> PyResult<PyWalkResult> {
    Ok(PyWalkResult { inner: walk::two_ion_walk(&config.inner).map_err(to_py)? })
}

#[pyclass(name = "ProbeScan", module = "ionwalk_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProbeScan {
    inner: probe::ProbeScan,
}

#[pymethods]
impl PyProbeScan {
    #[getter]
    fn k(&self) -> Vec<f64> {
        self.inner.k_values()
    }

    #[getter]
    fn estimates(&self) -> Vec<f64> {
        self.inner.estimates()
    }

    /// Width from the small-k curvature (cosine scans only).
    fn width(&self) -> PyResult<f64> {
        Ok(probe::width_from_curvature(&self.inner).map_err(to_py)?.width)
    }
}

/// Probe scan of an ensemble; `shots = 0` gives exact expectation values.
#[pyfunction]
#[pyo3(signature = (ensemble, k, prep="plus_z", axis="x", model="lamb_dicke", shots=0, seed=0))]
fn scan(ensemble: &PyEnsemble, k: Vec<f64>, prep: &str, axis: &str, model: &str, shots: u64, seed: u64) -> PyResult<PyProbeScan> {
    let (prep, axis, model) = (parse_prep(prep)?, parse_axis(axis)?, parse_model(model)?);
    let inner = if shots == 0 {
        probe::exact_scan(&ensemble.inner, prep, &k, axis, model)
    } else {
        probe::simulate_scan(&ensemble.inner, prep, &k, axis, model, shots, seed)
    }
    .map_err(to_py)?;
    Ok(PyProbeScan { inner })
}

/// Bound on `<π²>` (with safety margin) from a momentum-axis cosine scan.
#[pyfunction]
fn kinetic_bound(p_scan: &PyProbeScan) -> PyResult<f64> {
    Ok(reconstruct::estimate_kinetic_bound(&p_scan.inner).map_err(to_py)?.bound)
}

/// Density from cosine (and optionally sine) scans; returns `(x, p, info)`.
#[pyfunction]
#[pyo3(signature = (cos_scan, extent, sin_scan=None, spacing=0.1, forward="linear", eta=0.06, kinetic_bound=None, even=false))]
#[allow(clippy::too_many_arguments)]
fn reconstruct_density(
    py: Python<'_>,
    cos_scan: &PyProbeScan,
    extent: f64,
    sin_scan: Option<&PyProbeScan>,
    spacing: f64,
    forward: &str,
    eta: f64,
    kinetic_bound: Option<f64>,
    even: bool,
) -> PyResult<(Vec<f64>, Vec<f64>, Py<PyAny>)> {
    let grid = PositionGrid::new(extent, spacing).map_err(to_py)?;
    let data = FourierData::from_scans(&cos_scan.inner, sin_scan.map(|s| &s.inner)).map_err(to_py)?;
    let model = reconstruct::build_forward_model(&data.k, &grid, parse_forward(forward)?, eta).map_err(to_py)?;
    let opts = ReconstructOptions { kinetic_bound, even, ..Default::default() };
    let est = py.detach(|| reconstruct::reconstruct_density(&data, &model, &opts)).map_err(to_py)?;
    let info = pyo3::types::PyDict::new(py);
    info.set_item("objective", est.objective)?;
    info.set_item("fisher", est.fisher)?;
    info.set_item("converged", est.converged)?;
    info.set_item("iterations", est.iterations)?;
    info.set_item("duality_gap", est.duality_gap)?;
    Ok((grid.points().to_vec(), est.density, info.into_any().unbind()))
}

/// Mean phonon number fitted to a simulated carrier Rabi scan.
#[pyfunction]
#[pyo3(signature = (ensemble, shots=0, seed=0))]
fn fitted_mean_phonon(ensemble: &PyEnsemble, shots: u64, seed: u64) -> PyResult<f64> {
    let scan = probe::carrier_rabi_scan(&ensemble.inner, &probe::default_rabi_times(), CarrierScale::Bare, shots, seed).map_err(to_py)?;
    let fit = probe::fit_mean_phonon(&scan, None, Some(ensemble.inner.mean_phonon())).map_err(to_py)?;
    Ok(fit.mean_phonon)
}

/// Step size `2 η Ω τ` in Δx for Rabi frequency `Ω/2π` in Hz and duration in s.
#[pyfunction]
fn step_size(eta: f64, rabi_frequency_hz: f64, duration_s: f64) -> f64 {
    step_size_from_physical(eta, 2.0 * std::f64::consts::PI * rabi_frequency_hz, duration_s)
}

/// `n` evenly spaced wavenumbers on `[0, k_max]`.
#[pyfunction]
#[pyo3(signature = (k_max=3.0, n=61))]
fn k_grid(k_max: f64, n: usize) -> Vec<f64> {
    probe::k_grid(k_max, n)
}

#[pymodule]
fn ionwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWalkConfig>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyWalkResult>()?;
    m.add_class::<PyProbeScan>()?;
    m.add_function(wrap_pyfunction!(quantum_walk, m)?)?;
    m.add_function(wrap_pyfunction!(classical_walk, m)?)?;
    m.add_function(wrap_pyfunction!(reversed_walk, m)?)?;
    m.add_function(wrap_pyfunction!(two_ion_walk, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(kinetic_bound, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_density, m)?)?;
    m.add_function(wrap_pyfunction!(fitted_mean_phonon, m)?)?;
    m.add_function(wrap_pyfunction!(step_size, m)?)?;
    m.add_function(wrap_pyfunction!(k_grid, m)?)?;
    Ok(())
}
