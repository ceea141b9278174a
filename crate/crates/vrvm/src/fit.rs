//! Shared fitting configuration, reports, and linear-algebra helpers.

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gamma hyperprior parameters: alpha_m ~ Gamma(a, b) for every weight and,
/// in regression, tau ~ Gamma(c, d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperpriorConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for HyperpriorConfig {
    fn default() -> Self {
        HyperpriorConfig { a: 1e-6, b: 1e-6, c: 1e-6, d: 1e-6 }
    }
}

impl HyperpriorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "hyperprior {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Upper bound (a + 1/2)/b on every posterior mean of alpha, implied by
    /// the alpha-update.
    pub fn alpha_mean_bound(&self) -> f64 {
        (self.a + 0.5) / self.b
    }
}

/// Factor updates run in this fixed order within every sweep.
pub const REGRESSION_UPDATE_ORDER: &str = "w,alpha,tau";
pub const CLASSIFICATION_UPDATE_ORDER: &str = "w,xi,alpha";

/// Knobs of the coordinate-ascent loop. The moment initialization and the
/// update order are part of the contract, so they live here rather than in
/// code constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Stop when |L_k - L_{k-1}| <= tolerance * (1 + |L_k|).
    pub tolerance: f64,
    pub max_iter: usize,
    /// Initial posterior mean of every alpha_m.
    pub init_alpha_mean: f64,
    /// Initial posterior mean of tau (regression only).
    pub init_tau_mean: f64,
    /// Initial value of every variational parameter xi_n (classification only).
    pub init_xi: f64,
    /// Weight-magnitude cutoff used for the report's relevance mask.
    pub relevance_threshold: f64,
    /// Standardize features before kernel evaluation.
    pub standardize: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tolerance: 1e-6,
            max_iter: 500,
            init_alpha_mean: 1.0,
            init_tau_mean: 1.0,
            init_xi: 1.0,
            relevance_threshold: 1e-3,
            standardize: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        for (name, v) in [
            ("init_alpha_mean", self.init_alpha_mean),
            ("init_tau_mean", self.init_tau_mean),
            ("relevance_threshold", self.relevance_threshold),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.init_xi.is_finite() || self.init_xi < 0.0 {
            return Err(Error::InvalidInput("init_xi must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of a fit: the bound trajectory (one entry per full sweep) plus
/// summary flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub elbo_trace: Vec<f64>,
    pub n_iterations: usize,
    pub converged: bool,
    /// True where the kernel weight's posterior mean magnitude exceeds the
    /// relevance threshold; indexed by centre (bias excluded).
    pub relevance_mask: Vec<bool>,
    /// 1 / sqrt(<tau>); regression only.
    pub noise_std_estimate: Option<f64>,
}

impl FitReport {
    pub fn relevance_count(&self) -> usize {
        self.relevance_mask.iter().filter(|&&m| m).count()
    }

    pub fn relevance_indices(&self) -> Vec<usize> {
        self.relevance_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }
}

/// Cholesky of an SPD matrix with escalating diagonal jitter. The base
/// jitter is 1e-10 * trace / dim, escalated tenfold on each of up to three
/// retries.
pub(crate) fn cholesky_with_jitter(matrix: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(chol) = Cholesky::new(matrix.clone()) {
        return Ok(chol);
    }
    let dim = matrix.nrows();
    let base = 1e-10 * matrix.trace() / dim as f64;
    let mut jitter = base;
    for _ in 0..3 {
        let mut padded = matrix.clone();
        for i in 0..dim {
            padded[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(padded) {
            return Ok(chol);
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical(format!(
        "Cholesky factorization failed for a {dim}x{dim} precision matrix \
         (trace {:.6e}) even with diagonal jitter up to {:.3e}",
        matrix.trace(),
        jitter / 10.0
    )))
}

/// log-determinant from a Cholesky factor.
pub(crate) fn ln_det_from_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Convergence test on consecutive bound values.
pub(crate) fn converged(prev: f64, current: f64, tolerance: f64) -> bool {
    (current - prev).abs() <= tolerance * (1.0 + current.abs())
}
