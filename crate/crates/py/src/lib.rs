//! Python bindings: a thin layer over the `isohazard` crate exposing the
//! sample container, the isotonic and smoothed estimators, confidence
//! intervals, and the Monte Carlo harness.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use isohazard::{
    asymptotic_ci, bootstrap_ci, breslow, fit_beta, generate_sample, grenander, grenander_ci,
    grenander_slope_at, inverse_process, load_sample, mle_baseline, naive_kernel_estimator, phi_n,
    run_coverage_study, smooth_monotone, sort_sample, BootstrapMethod, BootstrapPlan,
    BoundaryPolicy, CiConfig, CiMethod, FitOptions, KernelFamily, KernelSpec, Scenario,
    SortedSample, SurvivalSample,
};

fn err(e: isohazard::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    Ok(match value {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_py_any(py)?,
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)?
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)?
            }
        }
        serde_json::Value::String(s) => s.into_py_any(py)?,
        serde_json::Value::Array(items) => {
            let converted: Vec<Py<PyAny>> = items
                .iter()
                .map(|item| json_to_py(py, item))
                .collect::<PyResult<_>>()?;
            PyList::new(py, converted)?.into_py_any(py)?
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.into_py_any(py)?
        }
    })
}

fn parse_kernel(name: &str) -> PyResult<KernelFamily> {
    match name {
        "triweight" => Ok(KernelFamily::Triweight),
        "epanechnikov" => Ok(KernelFamily::Epanechnikov),
        other => Err(PyValueError::new_err(format!(
            "unknown kernel \"{other}\" (use triweight or epanechnikov)"
        ))),
    }
}

fn parse_boundary(name: &str) -> PyResult<BoundaryPolicy> {
    match name {
        "none" => Ok(BoundaryPolicy::None),
        "linear" => Ok(BoundaryPolicy::LinearCorrection),
        other => Err(PyValueError::new_err(format!(
            "unknown boundary policy \"{other}\" (use none or linear)"
        ))),
    }
}

/// A nondecreasing left-continuous step hazard.
#[pyclass]
struct Hazard {
    inner: isohazard::MonotoneHazard,
}

#[pymethods]
impl Hazard {
    #[getter]
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints().to_vec()
    }

    #[getter]
    fn levels(&self) -> Vec<f64> {
        self.inner.levels().to_vec()
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }

    /// Kernel-smooth the hazard at `x`.
    #[pyo3(signature = (x, bandwidth, kernel="triweight", boundary="none"))]
    fn smooth(&self, x: f64, bandwidth: f64, kernel: &str, boundary: &str) -> PyResult<f64> {
        let spec = KernelSpec::new(parse_kernel(kernel)?, bandwidth, parse_boundary(boundary)?)
            .map_err(err)?;
        smooth_monotone(&self.inner, &spec, x).map_err(err)
    }
}

/// Right-censored regression data, sorted by follow-up time.
#[pyclass]
struct Sample {
    inner: SortedSample,
}

impl Sample {
    fn beta_or_fit(&self, beta: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        match beta {
            Some(b) => Ok(b),
            None if self.inner.num_covariates() == 0 => Ok(Vec::new()),
            None => {
                let fit = fit_beta(&self.inner, &FitOptions::default()).map_err(err)?;
                if !fit.converged {
                    return Err(PyValueError::new_err(
                        "partial likelihood fit did not converge",
                    ));
                }
                Ok(fit.beta)
            }
        }
    }
}

#[pymethods]
impl Sample {
    #[new]
    #[pyo3(signature = (times, events, covariates=None))]
    fn new(
        times: Vec<f64>,
        events: Vec<bool>,
        covariates: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let n = times.len();
        let records: Vec<(f64, bool, Vec<f64>)> = match covariates {
            Some(z) => {
                if z.len() != n {
                    return Err(PyValueError::new_err(format!(
                        "covariates has {} rows, expected {n}",
                        z.len()
                    )));
                }
                times
                    .into_iter()
                    .zip(events)
                    .zip(z)
                    .map(|((t, d), zi)| (t, d, zi))
                    .collect()
            }
            None => times
                .into_iter()
                .zip(events)
                .map(|(t, d)| (t, d, Vec::new()))
                .collect(),
        };
        let sample = SurvivalSample::from_records(records).map_err(err)?;
        Ok(Self {
            inner: sort_sample(sample),
        })
    }

    /// Parse CSV text with header `time,event,z1,...,zp`.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        let sample = load_sample(text.as_bytes()).map_err(err)?;
        Ok(Self {
            inner: sort_sample(sample),
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.num_covariates()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn events(&self) -> Vec<bool> {
        self.inner.events().to_vec()
    }

    /// Maximize the Cox partial likelihood; returns
    /// `{"beta", "loglik", "iterations", "converged"}`.
    fn fit(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let fit = fit_beta(&self.inner, &FitOptions::default()).map_err(err)?;
        json_to_py(py, &fit.to_json())
    }

    /// Empirical risk-set functional at `x`.
    #[pyo3(signature = (x, beta=None))]
    fn phi(&self, x: f64, beta: Option<Vec<f64>>) -> PyResult<f64> {
        let beta = self.beta_or_fit(beta)?;
        phi_n(&self.inner, x, &beta).map_err(err)
    }

    /// Breslow cumulative baseline hazard as `(knots, values)`.
    #[pyo3(signature = (beta=None))]
    fn breslow(&self, beta: Option<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let beta = self.beta_or_fit(beta)?;
        let cumhaz = breslow(&self.inner, &beta).map_err(err)?;
        Ok((cumhaz.knots().to_vec(), cumhaz.values().to_vec()))
    }

    /// Grenander-type estimator (left slope of the GCM of the Breslow
    /// estimator).
    #[pyo3(signature = (beta=None))]
    fn grenander(&self, beta: Option<Vec<f64>>) -> PyResult<Hazard> {
        let beta = self.beta_or_fit(beta)?;
        Ok(Hazard {
            inner: grenander(&self.inner, &beta).map_err(err)?,
        })
    }

    /// Isotonic maximum likelihood estimator of the baseline hazard.
    #[pyo3(signature = (beta=None))]
    fn mle(&self, beta: Option<Vec<f64>>) -> PyResult<Hazard> {
        let beta = self.beta_or_fit(beta)?;
        Ok(Hazard {
            inner: mle_baseline(&self.inner, &beta).map_err(err)?,
        })
    }

    /// Largest minimizer of `Lambda_n(x) - a x` (the inverse process).
    #[pyo3(signature = (a, beta=None))]
    fn inverse_process(&self, a: f64, beta: Option<Vec<f64>>) -> PyResult<f64> {
        let beta = self.beta_or_fit(beta)?;
        inverse_process(&self.inner, &beta, a).map_err(err)
    }

    /// Evaluate an estimator on a grid. `method` is one of
    /// grenander | mle | sg | smle | kernel.
    #[pyo3(signature = (method, grid, kernel="triweight", bandwidth=None, boundary="none", beta=None))]
    fn estimate(
        &self,
        method: &str,
        grid: Vec<f64>,
        kernel: &str,
        bandwidth: Option<f64>,
        boundary: &str,
        beta: Option<Vec<f64>>,
    ) -> PyResult<Vec<f64>> {
        let beta = self.beta_or_fit(beta)?;
        let b = bandwidth.unwrap_or_else(|| (self.inner.len() as f64).powf(-0.2));
        let spec =
            KernelSpec::new(parse_kernel(kernel)?, b, parse_boundary(boundary)?).map_err(err)?;
        match method {
            "grenander" => {
                let h = grenander(&self.inner, &beta).map_err(err)?;
                Ok(grid.iter().map(|&x| h.eval(x)).collect())
            }
            "mle" => {
                let h = mle_baseline(&self.inner, &beta).map_err(err)?;
                Ok(grid.iter().map(|&x| h.eval(x)).collect())
            }
            "sg" => {
                let h = grenander(&self.inner, &beta).map_err(err)?;
                grid.iter()
                    .map(|&x| smooth_monotone(&h, &spec, x).map_err(err))
                    .collect()
            }
            "smle" => {
                let h = mle_baseline(&self.inner, &beta).map_err(err)?;
                grid.iter()
                    .map(|&x| smooth_monotone(&h, &spec, x).map_err(err))
                    .collect()
            }
            "kernel" => {
                let cumhaz = breslow(&self.inner, &beta).map_err(err)?;
                Ok(grid
                    .iter()
                    .map(|&x| naive_kernel_estimator(&cumhaz, &spec, x))
                    .collect())
            }
            other => Err(PyValueError::new_err(format!("unknown method \"{other}\""))),
        }
    }

    /// Pointwise confidence interval at `x0`. `method` is one of
    /// sg | smle | kernel | grenander; `ci` one of
    /// asymptotic | chernoff | bootstrap.
    #[pyo3(signature = (method, ci, x0, level=0.95, c=None, samples=1000, seed=None,
                        kernel="triweight", bandwidth=None, boundary="none"))]
    #[allow(clippy::too_many_arguments)]
    fn confidence_interval(
        &self,
        py: Python<'_>,
        method: &str,
        ci: &str,
        x0: f64,
        level: f64,
        c: Option<f64>,
        samples: usize,
        seed: Option<u64>,
        kernel: &str,
        bandwidth: Option<f64>,
        boundary: &str,
    ) -> PyResult<Py<PyAny>> {
        let alpha = 1.0 - level;
        let n = self.inner.len();
        let beta = self.beta_or_fit(None)?;
        let family = parse_kernel(kernel)?;
        let policy = parse_boundary(boundary)?;
        let result = match (ci, method) {
            ("asymptotic", "sg" | "smle" | "kernel") => {
                let c_val = c.unwrap_or(self.inner.last_time() - self.inner.first_time());
                let b = bandwidth.unwrap_or_else(|| c_val * (n as f64).powf(-0.25));
                let spec = KernelSpec::new(family, b, policy).map_err(err)?;
                let (estimate, tag) = match method {
                    "sg" => (
                        smooth_monotone(&grenander(&self.inner, &beta).map_err(err)?, &spec, x0)
                            .map_err(err)?,
                        CiMethod::AsymptoticSg,
                    ),
                    "smle" => (
                        smooth_monotone(&mle_baseline(&self.inner, &beta).map_err(err)?, &spec, x0)
                            .map_err(err)?,
                        CiMethod::AsymptoticSmle,
                    ),
                    _ => (
                        naive_kernel_estimator(
                            &breslow(&self.inner, &beta).map_err(err)?,
                            &spec,
                            x0,
                        ),
                        CiMethod::AsymptoticKernel,
                    ),
                };
                let phi = phi_n(&self.inner, x0, &beta).map_err(err)?;
                asymptotic_ci(x0, estimate.max(0.0), phi, n, c_val, alpha, &spec, tag)
                    .map_err(err)?
            }
            ("chernoff", "grenander") => {
                let hazard = grenander(&self.inner, &beta).map_err(err)?;
                let slope = grenander_slope_at(&hazard, &self.inner, x0).map_err(err)?;
                let phi = phi_n(&self.inner, x0, &beta).map_err(err)?;
                grenander_ci(x0, hazard.eval(x0), slope, phi, n, alpha).map_err(err)?
            }
            ("bootstrap", "sg" | "smle") => {
                let seed = seed
                    .ok_or_else(|| PyValueError::new_err("bootstrap intervals require a seed"))?;
                let plan = BootstrapPlan {
                    samples,
                    bandwidth_resample: None,
                    bandwidth_estimate: bandwidth,
                    kernel: family,
                    boundary: policy,
                    alpha,
                    seed,
                };
                let bm = if method == "sg" {
                    BootstrapMethod::Sg
                } else {
                    BootstrapMethod::Smle
                };
                bootstrap_ci(&self.inner, bm, x0, &plan).map_err(err)?
            }
            _ => {
                return Err(PyValueError::new_err(format!(
                    "incompatible method/ci pair ({method}, {ci})"
                )))
            }
        };
        json_to_py(py, &result.to_json())
    }
}

/// Evaluate a kernel at `u` (bandwidth 1).
#[pyfunction]
fn kernel_eval(kernel: &str, u: f64) -> PyResult<f64> {
    let spec = KernelSpec::new(parse_kernel(kernel)?, 1.0, BoundaryPolicy::None).map_err(err)?;
    Ok(spec.eval(u))
}

/// Kernel antiderivative `K(u)` (bandwidth 1).
#[pyfunction]
fn kernel_antiderivative(kernel: &str, u: f64) -> PyResult<f64> {
    let spec = KernelSpec::new(parse_kernel(kernel)?, 1.0, BoundaryPolicy::None).map_err(err)?;
    Ok(spec.antiderivative(u))
}

/// Draw a sample from a scenario JSON string (seeded).
#[pyfunction]
fn sample_scenario(scenario_json: &str, seed: u64) -> PyResult<Sample> {
    let scenario: Scenario = serde_json::from_str(scenario_json)
        .map_err(|e| PyValueError::new_err(format!("invalid scenario JSON: {e}")))?;
    scenario.validate().map_err(err)?;
    let mut rng = isohazard::seeds::stream_rng(seed, 1);
    Ok(Sample {
        inner: sort_sample(generate_sample(&scenario, &mut rng)),
    })
}

/// Monte Carlo coverage study; returns the simulation report as a dict.
#[pyfunction]
#[pyo3(signature = (scenario_json, method, ci, replications, seed, c=None, samples=1000,
                    kernel="triweight", boundary="linear"))]
#[allow(clippy::too_many_arguments)]
fn simulate_coverage(
    py: Python<'_>,
    scenario_json: &str,
    method: &str,
    ci: &str,
    replications: usize,
    seed: u64,
    c: Option<f64>,
    samples: usize,
    kernel: &str,
    boundary: &str,
) -> PyResult<Py<PyAny>> {
    let scenario: Scenario = serde_json::from_str(scenario_json)
        .map_err(|e| PyValueError::new_err(format!("invalid scenario JSON: {e}")))?;
    let tag = match (ci, method) {
        ("asymptotic", "sg") => CiMethod::AsymptoticSg,
        ("asymptotic", "smle") => CiMethod::AsymptoticSmle,
        ("asymptotic", "kernel") => CiMethod::AsymptoticKernel,
        ("chernoff", "grenander") => CiMethod::GrenanderChernoff,
        ("bootstrap", "sg") => CiMethod::BootstrapSg,
        ("bootstrap", "smle") => CiMethod::BootstrapSmle,
        _ => {
            return Err(PyValueError::new_err(format!(
                "incompatible method/ci pair ({method}, {ci})"
            )))
        }
    };
    let config = CiConfig {
        c,
        kernel: parse_kernel(kernel)?,
        boundary: parse_boundary(boundary)?,
        bootstrap_samples: samples,
        ..CiConfig::default()
    };
    let report = run_coverage_study(&scenario, tag, &config, replications, seed).map_err(err)?;
    let value = serde_json::to_value(&report)
        .map_err(|e| PyValueError::new_err(format!("report serialization: {e}")))?;
    json_to_py(py, &value)
}

#[pymodule]
fn isohazard_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Sample>()?;
    m.add_class::<Hazard>()?;
    m.add_function(wrap_pyfunction!(kernel_eval, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_antiderivative, m)?)?;
    m.add_function(wrap_pyfunction!(sample_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_coverage, m)?)?;
    Ok(())
}
