//! Variational RVM for regression: closed-form coordinate-ascent updates,
//! exact lower bound, and the Gaussian predictive distribution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::{
    cholesky_with_jitter, converged, ln_det_from_cholesky, FitConfig, FitReport, HyperpriorConfig,
};
use crate::kernel::{basis_row, build_design_matrix, DesignMatrix, KernelSpec, Standardizer};
use crate::special::{digamma_unchecked, ln_gamma_unchecked, LN_2PI};

/// Variational factors Q(w) = N(mu_w, sigma_w), Q(alpha_m) =
/// Gamma(a_tilde_m, b_tilde_m), Q(tau) = Gamma(c_tilde, d_tilde).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionPosterior {
    pub mu_w: DVector<f64>,
    pub sigma_w: DMatrix<f64>,
    pub a_tilde: DVector<f64>,
    pub b_tilde: DVector<f64>,
    pub c_tilde: f64,
    pub d_tilde: f64,
}

impl RegressionPosterior {
    /// Unit-scale starting point: Q(alpha_m) and Q(tau) are Gamma factors
    /// with the configured means, Q(w) is a zero-mean Gaussian matching the
    /// initial alpha scale.
    pub(crate) fn initial(n_weights: usize, config: &FitConfig) -> Self {
        let alpha0 = config.init_alpha_mean;
        let tau0 = config.init_tau_mean;
        RegressionPosterior {
            mu_w: DVector::zeros(n_weights),
            sigma_w: DMatrix::from_diagonal_element(n_weights, n_weights, 1.0 / alpha0),
            a_tilde: DVector::from_element(n_weights, 1.0),
            b_tilde: DVector::from_element(n_weights, 1.0 / alpha0),
            c_tilde: 1.0,
            d_tilde: 1.0 / tau0,
        }
    }

    pub fn n_weights(&self) -> usize {
        self.mu_w.len()
    }
}

/// Posterior moments consumed by the updates and the lower bound.
#[derive(Debug, Clone)]
pub struct Moments {
    pub w_mean: DVector<f64>,
    pub ww_mean: DMatrix<f64>,
    pub alpha_mean: DVector<f64>,
    pub ln_alpha_mean: DVector<f64>,
    pub tau_mean: f64,
    pub ln_tau_mean: f64,
}

/// Evaluate all moments of the factorized posterior:
/// <w> = mu, <w w^T> = Sigma + mu mu^T, <alpha_m> = a~/b~,
/// <ln alpha_m> = psi(a~) - ln b~, <tau> = c~/d~, <ln tau> = psi(c~) - ln d~.
pub fn moments(posterior: &RegressionPosterior) -> Moments {
    let ww_mean = &posterior.sigma_w + &posterior.mu_w * posterior.mu_w.transpose();
    let alpha_mean = posterior.a_tilde.component_div(&posterior.b_tilde);
    let ln_alpha_mean = DVector::from_fn(posterior.a_tilde.len(), |m, _| {
        digamma_unchecked(posterior.a_tilde[m]) - posterior.b_tilde[m].ln()
    });
    Moments {
        w_mean: posterior.mu_w.clone(),
        ww_mean,
        alpha_mean,
        ln_alpha_mean,
        tau_mean: posterior.c_tilde / posterior.d_tilde,
        ln_tau_mean: digamma_unchecked(posterior.c_tilde) - posterior.d_tilde.ln(),
    }
}

fn weight_update_core(
    gram: &DMatrix<f64>,
    proj: &DVector<f64>,
    alpha_mean: &DVector<f64>,
    tau_mean: f64,
) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let dim = gram.nrows();
    let mut precision = gram * tau_mean;
    for m in 0..dim {
        precision[(m, m)] += alpha_mean[m];
    }
    let chol = cholesky_with_jitter(&precision)?;
    let ln_det_sigma = -ln_det_from_cholesky(&chol);
    let mut sigma = chol.inverse();
    // The factored inverse is symmetric up to roundoff; make it exact.
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    let mu = chol.solve(proj) * tau_mean;
    Ok((mu, sigma, ln_det_sigma))
}

/// Q(w) update: sigma_w = (diag<alpha> + <tau> Phi^T Phi)^{-1},
/// mu_w = <tau> sigma_w Phi^T t, via an SPD factorization of the precision.
pub fn update_q_w(
    phi: &DesignMatrix,
    t: &DVector<f64>,
    alpha_mean: &DVector<f64>,
    tau_mean: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if phi.n_rows() != t.len() {
        return Err(Error::Dimension(format!(
            "design matrix has {} rows but t has {} entries",
            phi.n_rows(),
            t.len()
        )));
    }
    if phi.n_weights() != alpha_mean.len() {
        return Err(Error::Dimension(format!(
            "design matrix has {} weights but alpha_mean has {} entries",
            phi.n_weights(),
            alpha_mean.len()
        )));
    }
    if !(tau_mean.is_finite() && tau_mean > 0.0) {
        return Err(Error::Domain(format!("tau_mean must be positive, got {tau_mean}")));
    }
    if alpha_mean.iter().any(|a| !a.is_finite() || *a <= 0.0) {
        return Err(Error::Domain("alpha_mean entries must be positive and finite".into()));
    }
    let gram = phi.values.tr_mul(&phi.values);
    let proj = phi.values.tr_mul(t);
    let (mu, sigma, _) = weight_update_core(&gram, &proj, alpha_mean, tau_mean)?;
    Ok((mu, sigma))
}

/// Q(alpha) update: a_tilde_m = a + 1/2, b_tilde_m = b + <w_m^2>/2.
pub fn update_q_alpha(
    hyperprior: &HyperpriorConfig,
    w_sq_mean: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    hyperprior.validate()?;
    if let Some(bad) = w_sq_mean.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Inconsistency(format!(
            "<w_m^2> must be non-negative, got {bad}"
        )));
    }
    let dim = w_sq_mean.len();
    let a_tilde = DVector::from_element(dim, hyperprior.a + 0.5);
    let b_tilde = w_sq_mean.map(|w2| hyperprior.b + 0.5 * w2);
    Ok((a_tilde, b_tilde))
}

fn tau_rate_core(
    gram: &DMatrix<f64>,
    proj: &DVector<f64>,
    t_sq: f64,
    w_mean: &DVector<f64>,
    ww_mean: &DMatrix<f64>,
    d: f64,
) -> f64 {
    d + 0.5 * t_sq - w_mean.dot(proj) + 0.5 * gram.dot(ww_mean)
}

/// Q(tau) update: c_tilde = c + N/2 and
/// d_tilde = d + (sum t^2)/2 - <w>^T Phi^T t + (sum phi^T <w w^T> phi)/2.
///
/// The shape offset is N/2, the free-form solution implied by the
/// likelihood's tau^{N/2} factor; it is what keeps every tau update a
/// bound ascent step.
pub fn update_q_tau(
    hyperprior: &HyperpriorConfig,
    phi: &DesignMatrix,
    t: &DVector<f64>,
    w_mean: &DVector<f64>,
    ww_mean: &DMatrix<f64>,
) -> Result<(f64, f64)> {
    hyperprior.validate()?;
    let n = phi.n_rows();
    if t.len() != n {
        return Err(Error::Dimension(format!(
            "design matrix has {n} rows but t has {} entries",
            t.len()
        )));
    }
    if w_mean.len() != phi.n_weights() || ww_mean.nrows() != phi.n_weights() {
        return Err(Error::Dimension("moment dimensions do not match the design matrix".into()));
    }
    let gram = phi.values.tr_mul(&phi.values);
    let proj = phi.values.tr_mul(t);
    let c_tilde = hyperprior.c + n as f64 / 2.0;
    let d_tilde = tau_rate_core(&gram, &proj, t.dot(t), w_mean, ww_mean, hyperprior.d);
    if !(d_tilde.is_finite() && d_tilde > 0.0) {
        return Err(Error::Inconsistency(format!(
            "tau rate d_tilde = {d_tilde} is not positive; the moments are inconsistent"
        )));
    }
    Ok((c_tilde, d_tilde))
}

/// The seven expectations whose sum is the regression lower bound.
#[derive(Debug, Clone, Copy)]
pub struct RegressionBoundTerms {
    pub likelihood: f64,
    pub weight_prior: f64,
    pub alpha_prior: f64,
    pub tau_prior: f64,
    pub weight_entropy: f64,
    pub alpha_entropy: f64,
    pub tau_entropy: f64,
}

impl RegressionBoundTerms {
    pub fn total(&self) -> f64 {
        self.likelihood
            + self.weight_prior
            + self.alpha_prior
            + self.tau_prior
            + self.weight_entropy
            + self.alpha_entropy
            + self.tau_entropy
    }
}

fn bound_terms_core(
    gram: &DMatrix<f64>,
    proj: &DVector<f64>,
    t_sq: f64,
    n: usize,
    posterior: &RegressionPosterior,
    hyperprior: &HyperpriorConfig,
    ln_det_sigma: Option<f64>,
) -> Result<RegressionBoundTerms> {
    let mom = moments(posterior);
    let dim = posterior.n_weights() as f64;
    let nf = n as f64;
    let (a, b, c, d) = (hyperprior.a, hyperprior.b, hyperprior.c, hyperprior.d);

    let sse = t_sq - 2.0 * mom.w_mean.dot(proj) + gram.dot(&mom.ww_mean);
    let likelihood = 0.5 * nf * (mom.ln_tau_mean - LN_2PI) - 0.5 * mom.tau_mean * sse;

    let w_sq = mom.ww_mean.diagonal();
    let weight_prior = -0.5 * dim * LN_2PI + 0.5 * mom.ln_alpha_mean.sum()
        - 0.5 * mom.alpha_mean.dot(&w_sq);

    let alpha_prior = dim * (a * b.ln() - ln_gamma_unchecked(a))
        + (a - 1.0) * mom.ln_alpha_mean.sum()
        - b * mom.alpha_mean.sum();

    let tau_prior =
        c * d.ln() - ln_gamma_unchecked(c) + (c - 1.0) * mom.ln_tau_mean - d * mom.tau_mean;

    let ln_det = match ln_det_sigma {
        Some(v) => v,
        None => ln_det_from_cholesky(&cholesky_with_jitter(&posterior.sigma_w)?),
    };
    let weight_entropy = 0.5 * dim * (1.0 + LN_2PI) + 0.5 * ln_det;

    let mut alpha_entropy = 0.0;
    for m in 0..posterior.a_tilde.len() {
        let at = posterior.a_tilde[m];
        let bt = posterior.b_tilde[m];
        alpha_entropy +=
            at - bt.ln() + ln_gamma_unchecked(at) + (1.0 - at) * digamma_unchecked(at);
    }

    let (ct, dt) = (posterior.c_tilde, posterior.d_tilde);
    let tau_entropy = ct - dt.ln() + ln_gamma_unchecked(ct) + (1.0 - ct) * digamma_unchecked(ct);

    let terms = RegressionBoundTerms {
        likelihood,
        weight_prior,
        alpha_prior,
        tau_prior,
        weight_entropy,
        alpha_entropy,
        tau_entropy,
    };
    for (name, value) in [
        ("likelihood expectation", terms.likelihood),
        ("weight prior expectation", terms.weight_prior),
        ("alpha prior expectation", terms.alpha_prior),
        ("tau prior expectation", terms.tau_prior),
        ("weight entropy", terms.weight_entropy),
        ("alpha entropy", terms.alpha_entropy),
        ("tau entropy", terms.tau_entropy),
    ] {
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "lower-bound term '{name}' is not finite ({value})"
            )));
        }
    }
    Ok(terms)
}

/// Evaluate the lower bound term by term for the given posterior.
pub fn lower_bound_terms(
    phi: &DesignMatrix,
    t: &DVector<f64>,
    posterior: &RegressionPosterior,
    hyperprior: &HyperpriorConfig,
) -> Result<RegressionBoundTerms> {
    hyperprior.validate()?;
    if phi.n_rows() != t.len() || phi.n_weights() != posterior.n_weights() {
        return Err(Error::Dimension("bound inputs have inconsistent dimensions".into()));
    }
    let gram = phi.values.tr_mul(&phi.values);
    let proj = phi.values.tr_mul(t);
    bound_terms_core(&gram, &proj, t.dot(t), phi.n_rows(), posterior, hyperprior, None)
}

/// The evidence lower bound L for the current factors.
pub fn lower_bound(
    phi: &DesignMatrix,
    t: &DVector<f64>,
    posterior: &RegressionPosterior,
    hyperprior: &HyperpriorConfig,
) -> Result<f64> {
    Ok(lower_bound_terms(phi, t, posterior, hyperprior)?.total())
}

/// Mutable fitting state over precomputed sufficient statistics
/// (Phi^T Phi, Phi^T t, sum t^2). Exposes one method per factor update so
/// the bound can be instrumented between individual updates.
pub struct RegressionFitState {
    hyperprior: HyperpriorConfig,
    n: usize,
    gram: DMatrix<f64>,
    proj: DVector<f64>,
    t_sq: f64,
    posterior: RegressionPosterior,
    ln_det_sigma: f64,
}

impl RegressionFitState {
    pub fn new(
        phi: &DesignMatrix,
        t: &DVector<f64>,
        hyperprior: &HyperpriorConfig,
        config: &FitConfig,
    ) -> Result<Self> {
        hyperprior.validate()?;
        config.validate()?;
        if phi.n_rows() != t.len() {
            return Err(Error::Dimension(format!(
                "design matrix has {} rows but t has {} entries",
                phi.n_rows(),
                t.len()
            )));
        }
        let posterior = RegressionPosterior::initial(phi.n_weights(), config);
        let ln_det_sigma = -(phi.n_weights() as f64) * config.init_alpha_mean.ln();
        Ok(RegressionFitState {
            hyperprior: *hyperprior,
            n: phi.n_rows(),
            gram: phi.values.tr_mul(&phi.values),
            proj: phi.values.tr_mul(t),
            t_sq: t.dot(t),
            posterior,
            ln_det_sigma,
        })
    }

    pub fn posterior(&self) -> &RegressionPosterior {
        &self.posterior
    }

    pub fn moments(&self) -> Moments {
        moments(&self.posterior)
    }

    pub fn update_weights(&mut self) -> Result<()> {
        let mom = self.moments();
        let (mu, sigma, ln_det) =
            weight_update_core(&self.gram, &self.proj, &mom.alpha_mean, mom.tau_mean)?;
        self.posterior.mu_w = mu;
        self.posterior.sigma_w = sigma;
        self.ln_det_sigma = ln_det;
        Ok(())
    }

    pub fn update_alpha(&mut self) -> Result<()> {
        let w_sq = DVector::from_fn(self.posterior.n_weights(), |m, _| {
            self.posterior.sigma_w[(m, m)] + self.posterior.mu_w[m] * self.posterior.mu_w[m]
        });
        let (a_tilde, b_tilde) = update_q_alpha(&self.hyperprior, &w_sq)?;
        self.posterior.a_tilde = a_tilde;
        self.posterior.b_tilde = b_tilde;
        Ok(())
    }

    pub fn update_tau(&mut self) -> Result<()> {
        let mom = self.moments();
        let c_tilde = self.hyperprior.c + self.n as f64 / 2.0;
        let d_tilde = tau_rate_core(
            &self.gram,
            &self.proj,
            self.t_sq,
            &mom.w_mean,
            &mom.ww_mean,
            self.hyperprior.d,
        );
        if !(d_tilde.is_finite() && d_tilde > 0.0) {
            return Err(Error::Inconsistency(format!(
                "tau rate d_tilde = {d_tilde} is not positive"
            )));
        }
        self.posterior.c_tilde = c_tilde;
        self.posterior.d_tilde = d_tilde;
        Ok(())
    }

    /// One full sweep in the fixed order Q(w), Q(alpha), Q(tau).
    pub fn sweep(&mut self) -> Result<()> {
        self.update_weights()?;
        self.update_alpha()?;
        self.update_tau()
    }

    pub fn lower_bound(&self) -> Result<f64> {
        Ok(bound_terms_core(
            &self.gram,
            &self.proj,
            self.t_sq,
            self.n,
            &self.posterior,
            &self.hyperprior,
            Some(self.ln_det_sigma),
        )?
        .total())
    }
}

/// A trained regression model: kernel, centres, variational posterior, and
/// everything needed to rebuild basis rows at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub kernel: KernelSpec,
    pub centres: Vec<Vec<f64>>,
    pub posterior: RegressionPosterior,
    pub hyperprior: HyperpriorConfig,
    pub standardizer: Option<Standardizer>,
}

impl RegressionModel {
    pub fn tau_mean(&self) -> f64 {
        self.posterior.c_tilde / self.posterior.d_tilde
    }

    /// Reported observation-noise scale 1 / sqrt(<tau>).
    pub fn noise_std_estimate(&self) -> f64 {
        1.0 / self.tau_mean().sqrt()
    }
}

fn validate_training_inputs(x_rows: &[Vec<f64>], t: &[f64]) -> Result<()> {
    if x_rows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 training points, got {}",
            x_rows.len()
        )));
    }
    if x_rows.len() != t.len() {
        return Err(Error::Dimension(format!(
            "{} input rows but {} targets",
            x_rows.len(),
            t.len()
        )));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("targets contain non-finite values".into()));
    }
    if x_rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("inputs contain non-finite values".into()));
    }
    Ok(())
}

/// Train a regression VRVM on `(x_rows, t)` with one kernel centre per
/// training point. Returns the model and a fit report; `converged = false`
/// with a complete report means the sweep budget ran out.
pub fn fit(
    x_rows: &[Vec<f64>],
    t: &[f64],
    kernel: &KernelSpec,
    hyperprior: &HyperpriorConfig,
    config: &FitConfig,
) -> Result<(RegressionModel, FitReport)> {
    validate_training_inputs(x_rows, t)?;
    kernel.validate()?;
    config.validate()?;

    let (rows, standardizer) = if config.standardize {
        let s = Standardizer::fit(x_rows)?;
        (x_rows.iter().map(|r| s.transform(r)).collect::<Vec<_>>(), Some(s))
    } else {
        (x_rows.to_vec(), None)
    };
    let phi = build_design_matrix(kernel, &rows, &rows)?;
    let targets = DVector::from_column_slice(t);

    let mut state = RegressionFitState::new(&phi, &targets, hyperprior, config)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut is_converged = false;
    while trace.len() < config.max_iter {
        let fail = |what: String, trace: &[f64]| Error::FitFailed { what, trace: trace.to_vec() };
        state.sweep().map_err(|e| fail(e.to_string(), &trace))?;
        let bound = state.lower_bound().map_err(|e| fail(e.to_string(), &trace))?;
        trace.push(bound);
        let k = trace.len();
        if k >= 2 && converged(trace[k - 2], trace[k - 1], config.tolerance) {
            is_converged = true;
            break;
        }
    }

    let offset = usize::from(kernel.include_bias);
    let posterior = state.posterior().clone();
    let relevance_mask: Vec<bool> = (0..phi.centres.len())
        .map(|m| posterior.mu_w[m + offset].abs() > config.relevance_threshold)
        .collect();
    let model = RegressionModel {
        kernel: *kernel,
        centres: phi.centres,
        posterior,
        hyperprior: *hyperprior,
        standardizer,
    };
    let report = FitReport {
        n_iterations: trace.len(),
        elbo_trace: trace,
        converged: is_converged,
        relevance_mask,
        noise_std_estimate: Some(model.noise_std_estimate()),
    };
    Ok((model, report))
}

/// Predictive distribution at `x`: mean mu_w . phi(x) and variance
/// 1/<tau> + phi(x)^T sigma_w phi(x).
pub fn predict(model: &RegressionModel, x: &[f64]) -> Result<(f64, f64)> {
    let phi = basis_row(&model.kernel, &model.centres, model.standardizer.as_ref(), x)?;
    if phi.len() != model.posterior.n_weights() {
        return Err(Error::Dimension("basis row does not match the posterior dimension".into()));
    }
    let mean = model.posterior.mu_w.dot(&phi);
    let variance = 1.0 / model.tau_mean() + (&model.posterior.sigma_w * &phi).dot(&phi);
    Ok((mean, variance))
}

/// Centre indices whose kernel-weight posterior mean magnitude exceeds
/// `threshold` (the bias weight is never counted), plus the count.
pub fn relevance_vectors(model: &RegressionModel, threshold: f64) -> (Vec<usize>, usize) {
    let offset = usize::from(model.kernel.include_bias);
    let indices: Vec<usize> = (0..model.centres.len())
        .filter(|m| model.posterior.mu_w[m + offset].abs() > threshold)
        .collect();
    let count = indices.len();
    (indices, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    fn bare_phi(values: DMatrix<f64>) -> DesignMatrix {
        let centres = (0..values.ncols()).map(|m| vec![m as f64]).collect();
        DesignMatrix { values, centres, include_bias: false }
    }

    #[test]
    fn weight_update_hand_example() {
        // N=1, one basis function, Phi=[1], <alpha>=[1], <tau>=1, t=[2]
        let phi = bare_phi(DMatrix::from_row_slice(1, 1, &[1.0]));
        let t = DVector::from_column_slice(&[2.0]);
        let (mu, sigma) =
            update_q_w(&phi, &t, &DVector::from_element(1, 1.0), 1.0).unwrap();
        assert_abs_diff_eq!(sigma[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(mu[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn weight_update_prior_dominates_as_tau_vanishes() {
        let phi = bare_phi(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]));
        let t = DVector::from_column_slice(&[5.0, -2.0]);
        let alpha = DVector::from_column_slice(&[2.0, 4.0]);
        let (mu, sigma) = update_q_w(&phi, &t, &alpha, 1e-14).unwrap();
        assert_abs_diff_eq!(sigma[(0, 0)], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(sigma[(1, 1)], 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(sigma[(0, 1)], 0.0, epsilon = 1e-9);
        assert!(mu.amax() < 1e-9);
    }

    #[test]
    fn weight_update_yields_spd_symmetric_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values = DMatrix::from_fn(9, 5, |_, _| rng.random_range(-1.0..1.0));
        let phi = bare_phi(values);
        let t = DVector::from_fn(9, |_, _| rng.random_range(-2.0..2.0));
        let alpha = DVector::from_fn(5, |_, _| rng.random_range(0.1..10.0));
        let (_, sigma) = update_q_w(&phi, &t, &alpha, 3.7).unwrap();
        assert_eq!(sigma.transpose(), sigma);
        assert!(nalgebra::Cholesky::new(sigma).is_some());
    }

    #[test]
    fn weight_update_input_validation() {
        let phi = bare_phi(DMatrix::from_row_slice(1, 1, &[1.0]));
        let t = DVector::from_column_slice(&[1.0]);
        let alpha = DVector::from_element(1, 1.0);
        assert!(update_q_w(&phi, &t, &alpha, 0.0).is_err());
        assert!(update_q_w(&phi, &t, &DVector::from_element(2, 1.0), 1.0).is_err());
    }

    #[test]
    fn alpha_update_examples() {
        let hyper = HyperpriorConfig::default();
        let (a_tilde, b_tilde) =
            update_q_alpha(&hyper, &DVector::from_column_slice(&[0.0, 2.0])).unwrap();
        assert_abs_diff_eq!(a_tilde[0], 0.500001, epsilon = 1e-15);
        assert_abs_diff_eq!(a_tilde[1], 0.500001, epsilon = 1e-15);
        assert_abs_diff_eq!(b_tilde[0], 1e-6, epsilon = 1e-20);
        assert_abs_diff_eq!(b_tilde[1], 1.000001, epsilon = 1e-15);
        assert!(update_q_alpha(&hyper, &DVector::from_column_slice(&[-0.1])).is_err());
    }

    #[test]
    fn tau_update_shape_and_rate() {
        let hyper = HyperpriorConfig::default();
        // Four data points: the Gamma shape gains N/2.
        let phi = bare_phi(DMatrix::from_element(4, 1, 0.0));
        let t = DVector::zeros(4);
        let (c_tilde, d_tilde) = update_q_tau(
            &hyper,
            &phi,
            &t,
            &DVector::zeros(1),
            &DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert_abs_diff_eq!(c_tilde, 2.0 + 1e-6, epsilon = 1e-15);
        assert_abs_diff_eq!(d_tilde, 1e-6, epsilon = 1e-20);
    }

    #[test]
    fn tau_update_hand_example() {
        // N=1, Phi=[1], t=[2], <w>=[1], <w w^T>=[1.5]:
        // d~ = d + 2 - 2 + 0.75 = d + 0.75
        let hyper = HyperpriorConfig::default();
        let phi = bare_phi(DMatrix::from_row_slice(1, 1, &[1.0]));
        let t = DVector::from_column_slice(&[2.0]);
        let (_, d_tilde) = update_q_tau(
            &hyper,
            &phi,
            &t,
            &DVector::from_column_slice(&[1.0]),
            &DMatrix::from_row_slice(1, 1, &[1.5]),
        )
        .unwrap();
        assert_abs_diff_eq!(d_tilde, 0.75 + 1e-6, epsilon = 1e-15);
    }

    #[test]
    fn moments_closed_forms() {
        let posterior = RegressionPosterior {
            mu_w: DVector::from_column_slice(&[1.0, 2.0]),
            sigma_w: DMatrix::zeros(2, 2),
            a_tilde: DVector::from_column_slice(&[1.0, 3.0]),
            b_tilde: DVector::from_column_slice(&[2.0, 4.0]),
            c_tilde: 5.0,
            d_tilde: 10.0,
        };
        let mom = moments(&posterior);
        assert_abs_diff_eq!(mom.alpha_mean[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mom.ww_mean[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mom.ww_mean[(0, 1)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mom.ww_mean[(1, 1)], 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mom.tau_mean, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ln_alpha_moment_matches_sampling() {
        // Monte-Carlo check of <ln alpha> = psi(a~) - ln b~.
        let (shape, rate) = (0.7, 2.3);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let gamma = Gamma::new(shape, 1.0 / rate).unwrap();
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let v: f64 = gamma.sample(&mut rng);
            let l = v.ln();
            sum += l;
            sum_sq += l * l;
        }
        let mc_mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mc_mean * mc_mean) / n as f64).sqrt();
        let exact = digamma_unchecked(shape) - rate.ln();
        assert!(
            (mc_mean - exact).abs() < 3.0 * se,
            "MC {mc_mean} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn empty_data_bound_reduces_to_weight_jensen_gap() {
        // With no data and Q(alpha), Q(tau) equal to their priors, the
        // alpha and tau term pairs cancel exactly, leaving only the
        // Gaussian/Gamma mismatch (M/2) (psi(a) - ln a) from the w terms.
        for &(a, m) in &[(1.0, 3usize), (2.5, 5)] {
            let hyper = HyperpriorConfig { a, b: 1.3, c: 0.8, d: 2.1 };
            let phi = bare_phi(DMatrix::zeros(0, m));
            let t = DVector::zeros(0);
            let posterior = RegressionPosterior {
                mu_w: DVector::zeros(m),
                sigma_w: DMatrix::from_diagonal_element(m, m, hyper.b / hyper.a),
                a_tilde: DVector::from_element(m, hyper.a),
                b_tilde: DVector::from_element(m, hyper.b),
                c_tilde: hyper.c,
                d_tilde: hyper.d,
            };
            let terms = lower_bound_terms(&phi, &t, &posterior, &hyper).unwrap();
            assert_abs_diff_eq!(terms.alpha_prior + terms.alpha_entropy, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(terms.tau_prior + terms.tau_entropy, 0.0, epsilon = 1e-12);
            let expected = 0.5 * m as f64 * (digamma_unchecked(a) - a.ln());
            assert_abs_diff_eq!(terms.total(), expected, epsilon = 1e-10);
        }
    }

    fn random_instance(seed: u64, n: usize, dim: usize) -> (DesignMatrix, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = DMatrix::from_fn(n, dim, |_, _| rng.random_range(-1.5..1.5));
        let t = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        (bare_phi(values), t)
    }

    #[test]
    fn per_update_bound_never_decreases() {
        let hyper = HyperpriorConfig::default();
        let config = FitConfig::default();
        for seed in 0..6 {
            let (phi, t) = random_instance(seed, 12, 6);
            let mut state = RegressionFitState::new(&phi, &t, &hyper, &config).unwrap();
            let mut prev = state.lower_bound().unwrap();
            for _ in 0..40 {
                for step in [
                    RegressionFitState::update_weights,
                    RegressionFitState::update_alpha,
                    RegressionFitState::update_tau,
                ] {
                    step(&mut state).unwrap();
                    let bound = state.lower_bound().unwrap();
                    assert!(
                        bound >= prev - 1e-8 * (1.0 + bound.abs()),
                        "bound fell from {prev} to {bound} (seed {seed})"
                    );
                    prev = bound;
                }
            }
        }
    }

    #[test]
    fn state_bound_matches_standalone() {
        let hyper = HyperpriorConfig::default();
        let (phi, t) = random_instance(3, 10, 4);
        let mut state = RegressionFitState::new(&phi, &t, &hyper, &FitConfig::default()).unwrap();
        for _ in 0..5 {
            state.sweep().unwrap();
        }
        let via_state = state.lower_bound().unwrap();
        let standalone = lower_bound(&phi, &t, state.posterior(), &hyper).unwrap();
        assert_abs_diff_eq!(via_state, standalone, epsilon = 1e-9);
    }

    fn sinc(x: f64) -> f64 {
        if x.abs() < 1e-8 {
            1.0 - x * x / 6.0
        } else {
            x.sin() / x
        }
    }

    fn sinc_data(seed: u64, n: usize, noise: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-10.0..10.0)]).collect();
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let t = xs
            .iter()
            .map(|x| sinc(x[0]) + noise * normal.sample(&mut rng))
            .collect();
        (xs, t)
    }

    #[test]
    fn fit_sinc_is_sparse_and_converges() {
        let (xs, t) = sinc_data(11, 50, 0.1);
        let kernel = KernelSpec::gaussian(3.0);
        let (model, report) = fit(
            &xs,
            &t,
            &kernel,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        assert!(report.converged);
        assert!(report.relevance_count() < 50);
        let noise = report.noise_std_estimate.unwrap();
        assert!((0.05..0.2).contains(&noise), "noise estimate {noise}");
        // mean interpolant should track sinc well inside the data range
        let (mean, var) = predict(&model, &[0.0]).unwrap();
        assert!((mean - 1.0).abs() < 0.15, "predicted {mean} at x=0");
        assert!(var >= 1.0 / model.tau_mean());
    }

    #[test]
    fn fit_trace_is_non_decreasing_and_deterministic() {
        let (xs, t) = sinc_data(5, 30, 0.1);
        let kernel = KernelSpec::gaussian(2.0);
        let hyper = HyperpriorConfig::default();
        let config = FitConfig::default();
        let (_, r1) = fit(&xs, &t, &kernel, &hyper, &config).unwrap();
        let (_, r2) = fit(&xs, &t, &kernel, &hyper, &config).unwrap();
        assert_eq!(r1.elbo_trace, r2.elbo_trace);
        for w in r1.elbo_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8 * (1.0 + w[1].abs()));
        }
    }

    #[test]
    fn fit_recovers_noise_free_basis_target() {
        // Target exactly equal to one kernel column: residual RMS ~ 0 and
        // the noise estimate keeps shrinking.
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i) - 10.0]).collect();
        let kernel = KernelSpec::gaussian(2.0);
        let phi = build_design_matrix(&kernel, &xs, &xs).unwrap();
        let t: Vec<f64> = (0..20).map(|n| phi.values[(n, 7)]).collect();
        let config = FitConfig { max_iter: 2000, tolerance: 1e-12, ..FitConfig::default() };
        let (model, report) = fit(&xs, &t, &kernel, &HyperpriorConfig::default(), &config).unwrap();
        let rms: f64 = (xs
            .iter()
            .zip(&t)
            .map(|(x, y)| {
                let (m, _) = predict(&model, x).unwrap();
                (m - y) * (m - y)
            })
            .sum::<f64>()
            / 20.0)
            .sqrt();
        assert!(rms < 1e-6, "residual RMS {rms}");
        assert!(report.noise_std_estimate.unwrap() < 1e-3);
    }

    #[test]
    fn fit_rejects_degenerate_inputs() {
        let kernel = KernelSpec::gaussian(1.0);
        let hyper = HyperpriorConfig::default();
        let config = FitConfig::default();
        assert!(fit(&[vec![0.0]], &[1.0], &kernel, &hyper, &config).is_err());
        assert!(fit(&[vec![0.0], vec![1.0]], &[1.0], &kernel, &hyper, &config).is_err());
        assert!(fit(&[vec![0.0], vec![1.0]], &[1.0, f64::NAN], &kernel, &hyper, &config).is_err());
    }

    #[test]
    fn prediction_permutation_invariant() {
        let (xs, t) = sinc_data(2, 25, 0.1);
        let kernel = KernelSpec::gaussian(2.5);
        let hyper = HyperpriorConfig::default();
        let config = FitConfig::default();
        let (model, _) = fit(&xs, &t, &kernel, &hyper, &config).unwrap();

        let perm: Vec<usize> = (0..25).rev().collect();
        let xs_p: Vec<Vec<f64>> = perm.iter().map(|&i| xs[i].clone()).collect();
        let t_p: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
        let (model_p, _) = fit(&xs_p, &t_p, &kernel, &hyper, &config).unwrap();

        for q in [-7.3, -1.0, 0.0, 2.2, 9.9] {
            let (m1, v1) = predict(&model, &[q]).unwrap();
            let (m2, v2) = predict(&model_p, &[q]).unwrap();
            assert_abs_diff_eq!(m1, m2, epsilon = 1e-10);
            assert_abs_diff_eq!(v1, v2, epsilon = 1e-10);
        }
    }

    #[test]
    fn predictive_variance_floor_and_zero_covariance() {
        let (xs, t) = sinc_data(8, 20, 0.1);
        let kernel = KernelSpec::gaussian(2.0);
        let (mut model, _) = fit(
            &xs,
            &t,
            &kernel,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        let floor = 1.0 / model.tau_mean();
        for q in [-9.0, -3.0, 0.5, 4.0, 8.0] {
            let (_, v) = predict(&model, &[q]).unwrap();
            assert!(v >= floor);
        }
        let dim = model.posterior.n_weights();
        model.posterior.sigma_w = DMatrix::zeros(dim, dim);
        let (_, v) = predict(&model, &[1.0]).unwrap();
        assert_abs_diff_eq!(v, floor, epsilon = 1e-15);
    }

    #[test]
    fn relevance_vector_selection() {
        let (xs, t) = sinc_data(3, 20, 0.1);
        let kernel = KernelSpec::gaussian(2.0);
        let (mut model, _) = fit(
            &xs,
            &t,
            &kernel,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        let (all, count) = relevance_vectors(&model, 0.0);
        assert_eq!(count, 20);
        assert_eq!(all, (0..20).collect::<Vec<_>>());

        model.posterior.mu_w = DVector::zeros(model.posterior.n_weights());
        model.posterior.mu_w[0] = 5.0; // bias weight must not count
        let (none, count) = relevance_vectors(&model, 1e-3);
        assert!(none.is_empty());
        assert_eq!(count, 0);
    }

    #[test]
    fn converged_fit_is_a_fixed_point() {
        let (xs, t) = sinc_data(4, 20, 0.1);
        let kernel = KernelSpec::gaussian(3.0);
        let hyper = HyperpriorConfig::default();
        let config = FitConfig { tolerance: 1e-12, max_iter: 30000, ..FitConfig::default() };
        let (model, report) = fit(&xs, &t, &kernel, &hyper, &config).unwrap();
        assert!(report.converged);

        let phi = build_design_matrix(&kernel, &xs, &xs).unwrap();
        let targets = DVector::from_column_slice(&t);
        let mut state = RegressionFitState::new(&phi, &targets, &hyper, &config).unwrap();
        state.posterior = model.posterior.clone();
        state.sweep().unwrap();
        let after = state.posterior();
        assert!((after.mu_w.clone() - &model.posterior.mu_w).amax() < 1e-6);
        assert!((after.sigma_w.clone() - &model.posterior.sigma_w).amax() < 1e-6);
        assert!((after.b_tilde.clone() - &model.posterior.b_tilde).amax() < 1e-6);
        assert!((after.d_tilde - model.posterior.d_tilde).abs() < 1e-6);
    }
}
