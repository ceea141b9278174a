//! Python extension module exposing the variational RVM: synthetic data
//! generators, fitting for regression and classification, predictive
//! distributions, relevance-vector extraction, and model persistence.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use vrvm::classification as cls;
use vrvm::data::{self, Spacing, TaskKind};
use vrvm::error::Error;
use vrvm::fit::{FitConfig, FitReport, HyperpriorConfig};
use vrvm::kernel::{GaussianConvention, KernelKind, KernelSpec};
use vrvm::model_io::{self, ModelFile, ModelMeta, TrainedModel};
use vrvm::regression as reg;
use vrvm::special;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Numerical(_) | Error::Inconsistency(_) | Error::FitFailed { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn kernel_spec(
    kernel: &str,
    width: f64,
    degree: u32,
    convention: &str,
    include_bias: bool,
) -> PyResult<KernelSpec> {
    let kind = match kernel {
        "gaussian" => KernelKind::Gaussian { width },
        "polynomial" => KernelKind::Polynomial { degree },
        "linear" => KernelKind::Linear,
        other => return Err(PyValueError::new_err(format!("unknown kernel '{other}'"))),
    };
    let convention = GaussianConvention::parse(convention).map_err(to_py_err)?;
    Ok(KernelSpec { kind, convention, include_bias })
}

fn fit_config(
    tol: f64,
    max_iter: usize,
    relevance_threshold: f64,
    standardize: bool,
) -> FitConfig {
    FitConfig {
        tolerance: tol,
        max_iter,
        relevance_threshold,
        standardize,
        ..FitConfig::default()
    }
}

fn meta_from_report(report: &FitReport, config: &FitConfig) -> ModelMeta {
    ModelMeta {
        iterations: report.n_iterations,
        converged: report.converged,
        final_elbo: report.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY),
        seed: 0,
        tolerance: config.tolerance,
        max_iter: config.max_iter,
        relevance_threshold: config.relevance_threshold,
    }
}

/// A fitted regression model with its training report.
#[pyclass(name = "RegressionModel")]
struct PyRegressionModel {
    inner: reg::RegressionModel,
    meta: ModelMeta,
    elbo_trace: Vec<f64>,
}

#[pymethods]
impl PyRegressionModel {
    /// Predictive (mean, variance) at a single input.
    fn predict(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        reg::predict(&self.inner, &x).map_err(to_py_err)
    }

    /// Centre indices with |mean weight| above the threshold, plus count.
    #[pyo3(signature = (threshold = 1e-3))]
    fn relevance_vectors(&self, threshold: f64) -> (Vec<usize>, usize) {
        reg::relevance_vectors(&self.inner, threshold)
    }

    #[getter]
    fn elbo_trace(&self) -> Vec<f64> {
        self.elbo_trace.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.meta.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.meta.iterations
    }

    #[getter]
    fn noise_estimate(&self) -> f64 {
        self.inner.noise_std_estimate()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.posterior.mu_w.iter().copied().collect()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let file = ModelFile {
            model: TrainedModel::Regression(self.inner.clone()),
            meta: self.meta.clone(),
        };
        model_io::save_model(&file, &path).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "RegressionModel(centres={}, converged={}, noise_estimate={:.4})",
            self.inner.centres.len(),
            self.meta.converged,
            self.inner.noise_std_estimate()
        )
    }
}

/// A fitted binary classifier with its training report.
#[pyclass(name = "ClassificationModel")]
struct PyClassificationModel {
    inner: cls::ClassificationModel,
    meta: ModelMeta,
    elbo_trace: Vec<f64>,
}

fn parse_method(method: &str) -> PyResult<cls::PredictMethod> {
    match method {
        "mackay" => Ok(cls::PredictMethod::Mackay),
        "mean_plugin" => Ok(cls::PredictMethod::MeanPlugin),
        other => Err(PyValueError::new_err(format!(
            "unknown method '{other}' (expected 'mackay' or 'mean_plugin')"
        ))),
    }
}

#[pymethods]
impl PyClassificationModel {
    /// Class-1 probability at a single input.
    #[pyo3(signature = (x, method = "mackay"))]
    fn predict_proba(&self, x: Vec<f64>, method: &str) -> PyResult<f64> {
        cls::predict_proba(&self.inner, &x, parse_method(method)?).map_err(to_py_err)
    }

    /// Hard 0/1 label at the 0.5 threshold (ties go to class 1).
    #[pyo3(signature = (x, method = "mackay"))]
    fn predict_label(&self, x: Vec<f64>, method: &str) -> PyResult<f64> {
        cls::predict_label(&self.inner, &x, parse_method(method)?).map_err(to_py_err)
    }

    #[pyo3(signature = (threshold = 1e-3))]
    fn relevance_vectors(&self, threshold: f64) -> (Vec<usize>, usize) {
        cls::relevance_vectors(&self.inner, threshold)
    }

    #[getter]
    fn elbo_trace(&self) -> Vec<f64> {
        self.elbo_trace.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.meta.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.meta.iterations
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.posterior.m.iter().copied().collect()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let file = ModelFile {
            model: TrainedModel::Classification(self.inner.clone()),
            meta: self.meta.clone(),
        };
        model_io::save_model(&file, &path).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ClassificationModel(centres={}, converged={})",
            self.inner.centres.len(),
            self.meta.converged
        )
    }
}

/// Train a regression VRVM.
#[pyfunction]
#[pyo3(signature = (x_rows, targets, *, kernel = "gaussian", width = 1.0, degree = 3,
                    convention = "width_sq", include_bias = true,
                    a = 1e-6, b = 1e-6, c = 1e-6, d = 1e-6,
                    tol = 1e-6, max_iter = 500, relevance_threshold = 1e-3,
                    standardize = false))]
#[allow(clippy::too_many_arguments)]
fn fit_regression(
    x_rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    kernel: &str,
    width: f64,
    degree: u32,
    convention: &str,
    include_bias: bool,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    tol: f64,
    max_iter: usize,
    relevance_threshold: f64,
    standardize: bool,
) -> PyResult<PyRegressionModel> {
    let spec = kernel_spec(kernel, width, degree, convention, include_bias)?;
    let hyper = HyperpriorConfig { a, b, c, d };
    let config = fit_config(tol, max_iter, relevance_threshold, standardize);
    let (model, report) =
        reg::fit(&x_rows, &targets, &spec, &hyper, &config).map_err(to_py_err)?;
    Ok(PyRegressionModel {
        inner: model,
        meta: meta_from_report(&report, &config),
        elbo_trace: report.elbo_trace,
    })
}

/// Train a binary classification VRVM (targets must be 0/1).
#[pyfunction]
#[pyo3(signature = (x_rows, targets, *, kernel = "gaussian", width = 1.0, degree = 3,
                    convention = "width_sq", include_bias = true,
                    a = 1e-6, b = 1e-6,
                    tol = 1e-6, max_iter = 500, relevance_threshold = 1e-3,
                    standardize = false))]
#[allow(clippy::too_many_arguments)]
fn fit_classification(
    x_rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    kernel: &str,
    width: f64,
    degree: u32,
    convention: &str,
    include_bias: bool,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
    relevance_threshold: f64,
    standardize: bool,
) -> PyResult<PyClassificationModel> {
    let spec = kernel_spec(kernel, width, degree, convention, include_bias)?;
    let hyper = HyperpriorConfig { a, b, ..HyperpriorConfig::default() };
    let config = fit_config(tol, max_iter, relevance_threshold, standardize);
    let (model, report) =
        cls::fit(&x_rows, &targets, &spec, &hyper, &config).map_err(to_py_err)?;
    Ok(PyClassificationModel {
        inner: model,
        meta: meta_from_report(&report, &config),
        elbo_trace: report.elbo_trace,
    })
}

/// Noisy sinc samples on (-10, 10); returns (x_rows, targets).
#[pyfunction]
#[pyo3(signature = (n, noise_sd = 0.1, seed = 0, spacing = "uniform_random"))]
fn gen_sinc(
    n: usize,
    noise_sd: f64,
    seed: u64,
    spacing: &str,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let spacing = match spacing {
        "uniform_random" => Spacing::UniformRandom,
        "equispaced" => Spacing::Equispaced,
        other => return Err(PyValueError::new_err(format!("unknown spacing '{other}'"))),
    };
    let d = data::gen_sinc(n, noise_sd, seed, spacing).map_err(to_py_err)?;
    Ok((d.x_rows, d.targets))
}

/// Balanced two-class Gaussian-mixture data; returns (x_rows, targets).
#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn gen_two_class(n: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = data::gen_two_class(n, seed).map_err(to_py_err)?;
    Ok((d.x_rows, d.targets))
}

/// Numerically integrated Bayes error of the default two-class mixture.
#[pyfunction]
fn two_class_bayes_error() -> f64 {
    data::MixtureParams::default().bayes_error()
}

/// Load a model saved by `save` or the CLI; returns a RegressionModel or
/// ClassificationModel depending on the file.
#[pyfunction]
fn load_model(py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
    let file = model_io::load_model(&path).map_err(to_py_err)?;
    match file.model {
        TrainedModel::Regression(inner) => {
            let obj = PyRegressionModel { inner, meta: file.meta, elbo_trace: Vec::new() };
            Ok(Py::new(py, obj)?.into_any())
        }
        TrainedModel::Classification(inner) => {
            let obj = PyClassificationModel { inner, meta: file.meta, elbo_trace: Vec::new() };
            Ok(Py::new(py, obj)?.into_any())
        }
    }
}

#[pyfunction]
fn ln_gamma(x: f64) -> PyResult<f64> {
    special::ln_gamma(x).map_err(to_py_err)
}

#[pyfunction]
fn digamma(x: f64) -> PyResult<f64> {
    special::digamma(x).map_err(to_py_err)
}

#[pyfunction]
fn sigmoid(y: f64) -> f64 {
    special::sigmoid(y)
}

#[pyfunction]
fn lambda_xi(xi: f64) -> f64 {
    special::lambda_xi(xi)
}

#[pyfunction]
fn marginal_weight_log_density(w: f64, a: f64, b: f64) -> PyResult<f64> {
    special::marginal_weight_log_density(w, a, b).map_err(to_py_err)
}

/// Cross-validate the Gaussian kernel width; returns (best_width, table)
/// where table is a list of (width, mean_score).
#[pyfunction]
#[pyo3(signature = (x_rows, targets, task, widths, k = 5, seed = 0))]
fn cross_validate_width(
    x_rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    task: &str,
    widths: Vec<f64>,
    k: usize,
    seed: u64,
) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let task = TaskKind::parse(task).map_err(to_py_err)?;
    let dataset = data::Dataset { x_rows, targets, task, provenance: None };
    let (best, table) = data::cross_validate_width(
        &dataset,
        task,
        &widths,
        k,
        seed,
        GaussianConvention::WidthSq,
        &HyperpriorConfig::default(),
        &FitConfig::default(),
    )
    .map_err(to_py_err)?;
    Ok((best, table.into_iter().map(|s| (s.width, s.mean_score)).collect()))
}

#[pymodule]
fn vrvm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRegressionModel>()?;
    m.add_class::<PyClassificationModel>()?;
    m.add_function(wrap_pyfunction!(fit_regression, m)?)?;
    m.add_function(wrap_pyfunction!(fit_classification, m)?)?;
    m.add_function(wrap_pyfunction!(gen_sinc, m)?)?;
    m.add_function(wrap_pyfunction!(gen_two_class, m)?)?;
    m.add_function(wrap_pyfunction!(two_class_bayes_error, m)?)?;
    m.add_function(wrap_pyfunction!(load_model, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate_width, m)?)?;
    m.add_function(wrap_pyfunction!(ln_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(sigmoid, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_xi, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_weight_log_density, m)?)?;
    Ok(())
}
