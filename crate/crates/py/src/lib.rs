//! Python bindings: `import rtk`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rtk_core::classical::{torus_flow_simulate, torus_recurrence_time, TorusSpec};
use rtk_core::models::{critical_sweep, linear_grid, quench_spectrum, QuenchSpec, SweepConfig, SweepModel};
use rtk_core::quasifree::{ln_recurrence_time_integrable, quasifree_stats};
use rtk_core::recurrence::{density_generic, ln_recurrence_time_generic, universal_function as universal};
use rtk_core::spectrum::SpectrumDocument;
use rtk_core::synthetic::{random_spectrum as synth, Profile};
use rtk_core::{scan_crossings, spectral_stats, CrossingReport, DiscreteSpectrum, ErrorKind, ScanConfig};

fn err(e: rtk_core::Error) -> PyErr {
    match e.kind() {
        ErrorKind::Validation => PyValueError::new_err(e.to_string()),
        ErrorKind::Numerical => PyArithmeticError::new_err(e.to_string()),
    }
}

/// Normalized (or sub-normalized) spectrum `{Eₙ, pₙ}` of an initial state.
#[pyclass(name = "Spectrum", module = "rtk", frozen)]
struct PySpectrum(DiscreteSpectrum);

#[pymethods]
impl PySpectrum {
    #[new]
    fn new(energies: Vec<f64>, weights: Vec<f64>) -> PyResult<Self> {
        rtk_core::validate_spectrum(&energies, &weights).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        SpectrumDocument::from_json(text).and_then(|d| d.into_spectrum()).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        SpectrumDocument::from(&self.0).to_json().map_err(err)
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.0.energies().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn label(&self) -> Option<String> {
        self.0.label().map(str::to_string)
    }

    fn __len__(&self) -> usize {
        self.0.dimension()
    }

    fn fidelity(&self, t: f64) -> f64 {
        self.0.fidelity(t)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let st = spectral_stats(&self.0);
        let d = PyDict::new(py);
        d.set_item("moment_d", st.moment_d)?;
        d.set_item("moment_e", st.moment_e)?;
        d.set_item("moment_f", st.moment_f)?;
        d.set_item("delta", st.delta)?;
        d.set_item("mean_fidelity", st.mean_fidelity)?;
        d.set_item("delta_E", st.delta_e)?;
        d.set_item("total_weight", st.total_weight)?;
        d.set_item("spectral_width", st.spectral_width)?;
        Ok(d)
    }

    /// Predicted density of solutions of `F(t) = u`.
    fn density(&self, u: f64) -> PyResult<f64> {
        density_generic(u, &spectral_stats(&self.0)).map_err(err)
    }

    fn ln_recurrence_time(&self, u: f64) -> PyResult<f64> {
        ln_recurrence_time_generic(u, &spectral_stats(&self.0)).map_err(err)
    }

    fn recurrence_time(&self, u: f64) -> PyResult<f64> {
        self.ln_recurrence_time(u).map(f64::exp)
    }

    #[pyo3(signature = (u, horizon, oversample=16, blocks=16, burn_in=0.0))]
    fn scan(&self, py: Python<'_>, u: f64, horizon: f64, oversample: usize, blocks: usize, burn_in: f64) -> PyResult<PyReport> {
        let cfg = ScanConfig::new(horizon).with_oversample(oversample).with_blocks(blocks).with_burn_in(burn_in);
        py.detach(|| scan_crossings(&self.0.evaluator(), u, &cfg)).map(PyReport).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(d={})", self.0.dimension())
    }
}

#[pyclass(name = "CrossingReport", module = "rtk", frozen)]
struct PyReport(CrossingReport);

#[pymethods]
impl PyReport {
    #[getter]
    fn count(&self) -> usize {
        self.0.count
    }

    #[getter]
    fn root_times(&self) -> Vec<f64> {
        self.0.root_times.clone()
    }

    #[getter]
    fn density_estimate(&self) -> f64 {
        self.0.density_estimate
    }

    #[getter]
    fn density_stderr(&self) -> Option<f64> {
        self.0.density_stderr
    }

    #[getter]
    fn suspected_tangencies(&self) -> usize {
        self.0.suspected_tangencies
    }

    #[getter]
    fn supremum(&self) -> f64 {
        self.0.supremum
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("CrossingReport(u={}, count={})", self.0.level_u, self.0.count)
    }
}

/// Free-fermion modes `(α_k, ε_k)` of a quench.
#[pyclass(name = "ModeSet", module = "rtk", frozen)]
struct PyModeSet(rtk_core::ModeSet);

#[pymethods]
impl PyModeSet {
    #[new]
    #[pyo3(signature = (alpha, epsilon, length=0))]
    fn new(alpha: Vec<f64>, epsilon: Vec<f64>, length: usize) -> PyResult<Self> {
        let n = if length == 0 { 2 * alpha.len() } else { length };
        rtk_core::ModeSet::new(alpha, epsilon, n).map(Self).map_err(err)
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.0.alpha.clone()
    }

    #[getter]
    fn epsilon(&self) -> Vec<f64> {
        self.0.epsilon.clone()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn fidelity(&self, t: f64) -> f64 {
        self.0.fidelity(t)
    }

    fn log_fidelity(&self, t: f64) -> f64 {
        self.0.log_fidelity(t).value()
    }

    /// `(mean_logF, sigma_Z, sigma_Zprime)`.
    fn stats(&self) -> PyResult<(f64, f64, f64)> {
        let st = quasifree_stats(&self.0).map_err(err)?;
        Ok((st.mean_log_f, st.sigma_z, st.sigma_zprime))
    }

    fn ln_recurrence_time(&self, u: f64) -> PyResult<f64> {
        let st = quasifree_stats(&self.0).map_err(err)?;
        ln_recurrence_time_integrable(u, &st).map_err(err)
    }

    /// Scan `ln F(t) = ln u`.
    #[pyo3(signature = (u, horizon, oversample=16, blocks=16, burn_in=0.0))]
    fn scan(&self, py: Python<'_>, u: f64, horizon: f64, oversample: usize, blocks: usize, burn_in: f64) -> PyResult<PyReport> {
        if !(u > 0.0) {
            return Err(PyValueError::new_err("u must be positive"));
        }
        let cfg = ScanConfig::new(horizon).with_oversample(oversample).with_blocks(blocks).with_burn_in(burn_in);
        py.detach(|| scan_crossings(&self.0.log_signal(), u.ln(), &cfg)).map(PyReport).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ModeSet(modes={}, L={})", self.0.len(), self.0.length)
    }
}

#[pyfunction]
fn universal_function(x: f64) -> PyResult<f64> {
    universal(x).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (d, seed, profile="flat", energy_scale=1.0))]
fn random_spectrum(d: usize, seed: u64, profile: &str, energy_scale: f64) -> PyResult<PySpectrum> {
    let p: Profile = profile.parse().map_err(err)?;
    synth(d, seed, p, energy_scale).map(PySpectrum).map_err(err)
}

/// Ground-state quench spectrum of the chain with next-nearest couplings.
#[pyfunction]
#[pyo3(signature = (length, kappa1, h1, kappa2, h2, deg_tol=1e-10))]
fn tam_spectrum(py: Python<'_>, length: usize, kappa1: f64, h1: f64, kappa2: f64, h2: f64, deg_tol: f64) -> PyResult<PySpectrum> {
    let spec = QuenchSpec::new(length, kappa1, h1, kappa2, h2);
    py.detach(|| quench_spectrum(&spec, deg_tol)).map(PySpectrum).map_err(err)
}

#[pyfunction]
fn tfim_modes(length: usize, h1: f64, h2: f64) -> PyResult<PyModeSet> {
    rtk_core::models::tfim_modes(length, h1, h2).map(PyModeSet).map_err(err)
}

/// `(h1, ln T_R)` pairs over `steps` points of `[h1_min, h1_max]`.
#[pyfunction]
#[pyo3(signature = (model, h1_min, h1_max, steps, dh, u, length, kappa=0.0))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    model: &str,
    h1_min: f64,
    h1_max: f64,
    steps: usize,
    dh: f64,
    u: f64,
    length: usize,
    kappa: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let model: SweepModel = model.parse().map_err(err)?;
    let grid = linear_grid(h1_min, h1_max, steps).map_err(err)?;
    let rows = py.detach(|| critical_sweep(&SweepConfig::new(model, length, kappa, dh, u), &grid)).map_err(err)?;
    Ok(rows.iter().map(|r| (r.h1, r.recurrence.ln())).collect())
}

#[pyfunction]
fn torus_time(omegas: Vec<f64>, windows: Vec<f64>) -> PyResult<f64> {
    TorusSpec::new(omegas, windows).map(|s| torus_recurrence_time(&s)).map_err(err)
}

/// `(entries, empirical T_R)` from a direct flow simulation.
#[pyfunction]
#[pyo3(signature = (omegas, windows, horizon, step=None))]
fn torus_simulate(py: Python<'_>, omegas: Vec<f64>, windows: Vec<f64>, horizon: f64, step: Option<f64>) -> PyResult<(u64, f64)> {
    let spec = TorusSpec::new(omegas, windows).map_err(err)?;
    let step = step.unwrap_or(spec.max_step());
    let sim = py.detach(|| torus_flow_simulate(&spec, horizon, step)).map_err(err)?;
    Ok((sim.entries, sim.empirical_tr))
}

#[pymodule]
fn rtk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyModeSet>()?;
    m.add_function(wrap_pyfunction!(universal_function, m)?)?;
    m.add_function(wrap_pyfunction!(random_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(tam_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(tfim_modes, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(torus_time, m)?)?;
    m.add_function(wrap_pyfunction!(torus_simulate, m)?)?;
    Ok(())
}
