//! Python bindings: generators, filter bank design, the adaptive filter
//! family, theory helpers and the Monte Carlo harness.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fonspn_core::adaptive::{self, AlgoConfig, Algorithm};
use fonspn_core::harness::{self, parse_override, ExperimentConfig};
use fonspn_core::signalgen::{self, Ar1Params, NoiseKind};
use fonspn_core::{filterbank, theory, Error, SubbandFrame};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Shape { .. } | Error::Design(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyfunction]
fn sample_sas(alpha: f64, zeta: f64, count: usize, seed: u64) -> PyResult<Vec<f64>> {
    let params = signalgen::AlphaStableParams::new(alpha, zeta).map_err(py_err)?;
    signalgen::sample_sas(params, count, seed).map_err(py_err)
}

#[pyfunction]
fn sample_gaussian(variance: f64, count: usize, seed: u64) -> PyResult<Vec<f64>> {
    signalgen::sample_gaussian(variance, count, seed).map_err(py_err)
}

#[pyfunction]
fn color_ar1(white: Vec<f64>, pole: f64) -> PyResult<Vec<f64>> {
    let params = Ar1Params::new(pole, NoiseKind::Gaussian { variance: 1.0 }).map_err(py_err)?;
    signalgen::color_ar1(&white, &params).map_err(py_err)
}

#[pyfunction]
fn gain(e: f64, p: f64, beta: f64) -> PyResult<f64> {
    adaptive::gain(e, p, beta).map_err(py_err)
}

#[pyfunction]
fn fractional_power_derivative(n: f64, beta: f64, x: f64) -> PyResult<f64> {
    adaptive::fractional_power_derivative(n, beta, x).map_err(py_err)
}

/// Returns `(lower, upper)` of the half-open interval `(lower, upper]`.
#[pyfunction]
fn beta_range(p: f64, alpha: f64) -> PyResult<(f64, f64)> {
    let r = theory::beta_range(p, alpha).map_err(py_err)?;
    Ok((r.lower, r.upper))
}

#[pyclass(frozen, module = "fonspn")]
struct FilterBank {
    inner: filterbank::FilterBank,
}

#[pymethods]
impl FilterBank {
    #[getter]
    fn num_bands(&self) -> usize {
        self.inner.num_bands()
    }

    #[getter]
    fn length(&self) -> usize {
        self.inner.length()
    }

    #[getter]
    fn coeffs(&self) -> Vec<Vec<f64>> {
        self.inner.coeffs().to_vec()
    }

    fn band_energies(&self) -> Vec<f64> {
        self.inner.band_energies()
    }

    fn power_response(&self, band: usize, omega: f64) -> PyResult<f64> {
        if band >= self.inner.num_bands() {
            return Err(PyValueError::new_err(format!("band {band} out of range")));
        }
        Ok(self.inner.power_response(band, omega))
    }

    fn power_complementarity_ripple(&self) -> f64 {
        self.inner.power_complementarity_ripple()
    }

    fn __repr__(&self) -> String {
        format!(
            "FilterBank(bands={}, length={})",
            self.inner.num_bands(),
            self.inner.length()
        )
    }
}

#[pyfunction]
fn design_bank(bands: usize, length: usize) -> PyResult<FilterBank> {
    Ok(FilterBank {
        inner: filterbank::design_bank(bands, length).map_err(py_err)?,
    })
}

#[pyclass(module = "fonspn")]
struct AdaptiveFilter {
    inner: adaptive::AdaptiveFilter,
}

#[pymethods]
impl AdaptiveFilter {
    #[new]
    #[pyo3(signature = (algorithm, mu, taps, p=None, beta=None, eps=adaptive::DEFAULT_EPS))]
    fn new(
        algorithm: &str,
        mu: f64,
        taps: usize,
        p: Option<f64>,
        beta: Option<f64>,
        eps: f64,
    ) -> PyResult<Self> {
        let algorithm: Algorithm = algorithm.parse().map_err(py_err)?;
        let config = match algorithm {
            Algorithm::Nsaf => AlgoConfig::nsaf(mu, taps),
            Algorithm::Nspn => AlgoConfig::nspn(mu, p.unwrap_or(2.0), taps),
            Algorithm::Fonspn => {
                AlgoConfig::fonspn(mu, p.unwrap_or(2.0), beta.unwrap_or(1.0), taps)
            }
        }
        .with_eps(eps);
        Ok(Self {
            inner: adaptive::AdaptiveFilter::new(config).map_err(py_err)?,
        })
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.state.weights.clone()
    }

    #[getter]
    fn update_count(&self) -> u64 {
        self.inner.state.update_count as u64
    }

    #[getter]
    fn diverged(&self) -> bool {
        self.inner.state.diverged()
    }

    /// One update from per-band regressors and desired samples. Returns the
    /// a-priori subband errors.
    fn step(&mut self, band_inputs: Vec<Vec<f64>>, band_desired: Vec<f64>) -> PyResult<Vec<f64>> {
        let frame = SubbandFrame {
            band_inputs,
            band_desired,
            frame_index: self.inner.state.update_count,
        };
        self.inner.step(&frame).map_err(py_err)
    }
}

fn load_config(toml: &str, overrides: Option<Vec<String>>) -> PyResult<ExperimentConfig> {
    let overrides = overrides
        .unwrap_or_default()
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(py_err)?;
    ExperimentConfig::from_toml_str(toml, &overrides).map_err(py_err)
}

/// Runs a Monte Carlo experiment described by a TOML string. `overrides` are
/// `key=value` strings as accepted by the CLI's `--set`.
#[pyfunction]
#[pyo3(signature = (toml, overrides=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    toml: &str,
    overrides: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = load_config(toml, overrides)?;
    let result = py
        .detach(|| harness::run_experiment(&cfg))
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("trials", cfg.trials)?;
    out.set_item("diverged_trials", result.diverged_trials())?;
    if let Some(agg) = &result.aggregate {
        out.set_item("nmsd_db", agg.mean_db())?;
        out.set_item("p10_db", agg.p10_db.clone())?;
        out.set_item("p90_db", agg.p90_db.clone())?;
        let window = cfg.steady_window.min(agg.len());
        out.set_item("steady_db", agg.steady_state(window).map_err(py_err)?.db)?;
    }
    Ok(out)
}

/// Step-size bound and steady-state prediction for a TOML config.
#[pyfunction]
#[pyo3(signature = (toml, overrides=None))]
fn theory_report<'py>(
    py: Python<'py>,
    toml: &str,
    overrides: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = load_config(toml, overrides)?;
    let report = py.detach(|| harness::theory_report(&cfg)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item(
        "beta_interval",
        report.beta_interval.map(|r| (r.lower, r.upper)),
    )?;
    out.set_item("mu_bound", report.step_bound.value)?;
    out.set_item("mu_bound_with_h0", report.step_bound_h0.value)?;
    out.set_item("steady_msd", report.steady_msd.map(|m| m.value))?;
    out.set_item(
        "warnings",
        report
            .step_bound
            .warnings
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>(),
    )?;
    Ok(out)
}

#[pymodule]
fn fonspn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sample_sas, m)?)?;
    m.add_function(wrap_pyfunction!(sample_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(color_ar1, m)?)?;
    m.add_function(wrap_pyfunction!(gain, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_power_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(beta_range, m)?)?;
    m.add_function(wrap_pyfunction!(design_bank, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(theory_report, m)?)?;
    m.add_class::<FilterBank>()?;
    m.add_class::<AdaptiveFilter>()?;
    Ok(())
}
