//! Variational RVM for binary classification via the logistic
//! exponential-quadratic bound of Jaakkola and Jordan.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::{
    cholesky_with_jitter, converged, ln_det_from_cholesky, FitConfig, FitReport, HyperpriorConfig,
};
use crate::kernel::{basis_row, build_design_matrix, DesignMatrix, KernelSpec, Standardizer};
use crate::special::{digamma_unchecked, lambda_xi, ln_gamma_unchecked, sigmoid, LN_2PI};

pub use crate::regression::update_q_alpha;

/// Variational factors Q(w) = N(m, s), Q(alpha_m) = Gamma(a~, b~), plus the
/// per-datum bound parameters xi_n (non-negative by convention; the bound
/// is even in xi).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationPosterior {
    pub m: DVector<f64>,
    pub s: DMatrix<f64>,
    pub a_tilde: DVector<f64>,
    pub b_tilde: DVector<f64>,
    pub xi: DVector<f64>,
}

impl ClassificationPosterior {
    pub(crate) fn initial(n_weights: usize, n_data: usize, config: &FitConfig) -> Self {
        let alpha0 = config.init_alpha_mean;
        ClassificationPosterior {
            m: DVector::zeros(n_weights),
            s: DMatrix::from_diagonal_element(n_weights, n_weights, 1.0 / alpha0),
            a_tilde: DVector::from_element(n_weights, 1.0),
            b_tilde: DVector::from_element(n_weights, 1.0 / alpha0),
            xi: DVector::from_element(n_data, config.init_xi),
        }
    }

    pub fn n_weights(&self) -> usize {
        self.m.len()
    }
}

fn validate_binary(t: &DVector<f64>) -> Result<()> {
    if t.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::InvalidInput("classification targets must be exactly 0 or 1".into()));
    }
    Ok(())
}

fn weight_update_core(
    phi: &DMatrix<f64>,
    half_signed: &DVector<f64>,
    alpha_mean: &DVector<f64>,
    xi: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let dim = phi.ncols();
    let mut scaled = phi.clone();
    for n in 0..phi.nrows() {
        let w = 2.0 * lambda_xi(xi[n]);
        scaled.row_mut(n).scale_mut(w);
    }
    let mut precision = phi.tr_mul(&scaled);
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (precision[(i, j)] + precision[(j, i)]);
            precision[(i, j)] = v;
            precision[(j, i)] = v;
        }
        precision[(i, i)] += alpha_mean[i];
    }
    let chol = cholesky_with_jitter(&precision)?;
    let ln_det_s = -ln_det_from_cholesky(&chol);
    let mut s = chol.inverse();
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let m = chol.solve(half_signed);
    Ok((m, s, ln_det_s))
}

/// Q(w) update: s = (diag<alpha> + 2 sum_n lambda(xi_n) phi_n phi_n^T)^{-1}
/// and m = s (sum_n (2 t_n - 1) phi_n) / 2, via an SPD factorization.
pub fn update_q_w(
    phi: &DesignMatrix,
    t: &DVector<f64>,
    alpha_mean: &DVector<f64>,
    xi: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    validate_binary(t)?;
    if phi.n_rows() != t.len() || phi.n_rows() != xi.len() {
        return Err(Error::Dimension("design, targets and xi must have matching rows".into()));
    }
    if phi.n_weights() != alpha_mean.len() {
        return Err(Error::Dimension("alpha_mean does not match the design matrix".into()));
    }
    if xi.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain("xi entries must be non-negative and finite".into()));
    }
    if alpha_mean.iter().any(|a| !a.is_finite() || *a <= 0.0) {
        return Err(Error::Domain("alpha_mean entries must be positive and finite".into()));
    }
    let signed = t.map(|v| 2.0 * v - 1.0);
    let half_signed = phi.values.tr_mul(&signed) * 0.5;
    let (m, s, _) = weight_update_core(&phi.values, &half_signed, alpha_mean, xi)?;
    Ok((m, s))
}

/// Bound-parameter re-estimation xi_n = sqrt(phi_n^T <w w^T> phi_n).
pub fn update_xi(phi: &DesignMatrix, ww_mean: &DMatrix<f64>) -> Result<DVector<f64>> {
    if ww_mean.nrows() != phi.n_weights() || ww_mean.ncols() != phi.n_weights() {
        return Err(Error::Dimension("ww_mean does not match the design matrix".into()));
    }
    let cross = &phi.values * ww_mean;
    let mut xi = DVector::zeros(phi.n_rows());
    for n in 0..phi.n_rows() {
        let q = cross.row(n).dot(&phi.values.row(n));
        if q < -1e-12 {
            return Err(Error::Inconsistency(format!(
                "quadratic form phi^T <w w^T> phi = {q} is negative at row {n}"
            )));
        }
        xi[n] = q.max(0.0).sqrt();
    }
    Ok(xi)
}

fn ln_sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        -(-v).exp().ln_1p()
    } else {
        v - v.exp().ln_1p()
    }
}

/// Log of the xi-parameterized lower bound on the Bernoulli likelihood:
/// ln sigma(xi) + (z - xi)/2 - lambda(xi) (z^2 - xi^2) with z = (2t - 1) y.
/// Touches the exact log-likelihood at xi = |z|.
pub fn jj_log_bound(t: bool, y: f64, xi: f64) -> f64 {
    let z = if t { y } else { -y };
    ln_sigmoid(xi) + 0.5 * (z - xi) - lambda_xi(xi) * (z * z - xi * xi)
}

/// The five expectations of the classification lower bound.
#[derive(Debug, Clone, Copy)]
pub struct ClassificationBoundTerms {
    pub bounded_likelihood: f64,
    pub weight_prior: f64,
    pub alpha_prior: f64,
    pub weight_entropy: f64,
    pub alpha_entropy: f64,
}

impl ClassificationBoundTerms {
    pub fn total(&self) -> f64 {
        self.bounded_likelihood
            + self.weight_prior
            + self.alpha_prior
            + self.weight_entropy
            + self.alpha_entropy
    }
}

fn bound_terms_core(
    phi: &DMatrix<f64>,
    t: &DVector<f64>,
    posterior: &ClassificationPosterior,
    hyperprior: &HyperpriorConfig,
    ln_det_s: Option<f64>,
) -> Result<ClassificationBoundTerms> {
    let dim = posterior.n_weights() as f64;
    let (a, b) = (hyperprior.a, hyperprior.b);
    let ww = &posterior.s + &posterior.m * posterior.m.transpose();

    let mut bounded_likelihood = 0.0;
    let cross = phi * &ww;
    let proj_m = phi * &posterior.m;
    for n in 0..phi.nrows() {
        let xi = posterior.xi[n];
        let quad = cross.row(n).dot(&phi.row(n));
        let signed_mean = (2.0 * t[n] - 1.0) * proj_m[n];
        bounded_likelihood +=
            ln_sigmoid(xi) + 0.5 * signed_mean - 0.5 * xi - lambda_xi(xi) * (quad - xi * xi);
    }

    let alpha_mean = posterior.a_tilde.component_div(&posterior.b_tilde);
    let ln_alpha_mean = DVector::from_fn(posterior.a_tilde.len(), |m, _| {
        digamma_unchecked(posterior.a_tilde[m]) - posterior.b_tilde[m].ln()
    });
    let w_sq = ww.diagonal();
    let weight_prior =
        -0.5 * dim * LN_2PI + 0.5 * ln_alpha_mean.sum() - 0.5 * alpha_mean.dot(&w_sq);
    let alpha_prior = dim * (a * b.ln() - ln_gamma_unchecked(a))
        + (a - 1.0) * ln_alpha_mean.sum()
        - b * alpha_mean.sum();

    let ln_det = match ln_det_s {
        Some(v) => v,
        None => ln_det_from_cholesky(&cholesky_with_jitter(&posterior.s)?),
    };
    let weight_entropy = 0.5 * dim * (1.0 + LN_2PI) + 0.5 * ln_det;

    let mut alpha_entropy = 0.0;
    for m in 0..posterior.a_tilde.len() {
        let at = posterior.a_tilde[m];
        let bt = posterior.b_tilde[m];
        alpha_entropy +=
            at - bt.ln() + ln_gamma_unchecked(at) + (1.0 - at) * digamma_unchecked(at);
    }

    let terms = ClassificationBoundTerms {
        bounded_likelihood,
        weight_prior,
        alpha_prior,
        weight_entropy,
        alpha_entropy,
    };
    for (name, value) in [
        ("bounded likelihood expectation", terms.bounded_likelihood),
        ("weight prior expectation", terms.weight_prior),
        ("alpha prior expectation", terms.alpha_prior),
        ("weight entropy", terms.weight_entropy),
        ("alpha entropy", terms.alpha_entropy),
    ] {
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "lower-bound term '{name}' is not finite ({value})"
            )));
        }
    }
    Ok(terms)
}

/// Evaluate the classification bound term by term.
pub fn lower_bound_terms(
    phi: &DesignMatrix,
    t: &DVector<f64>,
    posterior: &ClassificationPosterior,
    hyperprior: &HyperpriorConfig,
) -> Result<ClassificationBoundTerms> {
    hyperprior.validate()?;
    validate_binary(t)?;
    if phi.n_rows() != t.len()
        || phi.n_weights() != posterior.n_weights()
        || posterior.xi.len() != phi.n_rows()
    {
        return Err(Error::Dimension("bound inputs have inconsistent dimensions".into()));
    }
    bound_terms_core(&phi.values, t, posterior, hyperprior, None)
}

/// The classification lower bound L.
pub fn lower_bound(
    phi: &DesignMatrix,
    t: &DVector<f64>,
    posterior: &ClassificationPosterior,
    hyperprior: &HyperpriorConfig,
) -> Result<f64> {
    Ok(lower_bound_terms(phi, t, posterior, hyperprior)?.total())
}

/// Mutable fitting state; one method per update for instrumentation.
pub struct ClassificationFitState {
    hyperprior: HyperpriorConfig,
    phi: DMatrix<f64>,
    t: DVector<f64>,
    half_signed: DVector<f64>,
    posterior: ClassificationPosterior,
    ln_det_s: f64,
}

impl ClassificationFitState {
    pub fn new(
        phi: &DesignMatrix,
        t: &DVector<f64>,
        hyperprior: &HyperpriorConfig,
        config: &FitConfig,
    ) -> Result<Self> {
        hyperprior.validate()?;
        config.validate()?;
        validate_binary(t)?;
        if phi.n_rows() != t.len() {
            return Err(Error::Dimension(format!(
                "design matrix has {} rows but t has {} entries",
                phi.n_rows(),
                t.len()
            )));
        }
        let signed = t.map(|v| 2.0 * v - 1.0);
        let half_signed = phi.values.tr_mul(&signed) * 0.5;
        let posterior =
            ClassificationPosterior::initial(phi.n_weights(), phi.n_rows(), config);
        let ln_det_s = -(phi.n_weights() as f64) * config.init_alpha_mean.ln();
        Ok(ClassificationFitState {
            hyperprior: *hyperprior,
            phi: phi.values.clone(),
            t: t.clone(),
            half_signed,
            posterior,
            ln_det_s,
        })
    }

    pub fn posterior(&self) -> &ClassificationPosterior {
        &self.posterior
    }

    pub fn update_weights(&mut self) -> Result<()> {
        let alpha_mean = self.posterior.a_tilde.component_div(&self.posterior.b_tilde);
        let (m, s, ln_det) =
            weight_update_core(&self.phi, &self.half_signed, &alpha_mean, &self.posterior.xi)?;
        self.posterior.m = m;
        self.posterior.s = s;
        self.ln_det_s = ln_det;
        Ok(())
    }

    pub fn update_xi(&mut self) -> Result<()> {
        let ww = &self.posterior.s + &self.posterior.m * self.posterior.m.transpose();
        let cross = &self.phi * &ww;
        let mut xi = DVector::zeros(self.phi.nrows());
        for n in 0..self.phi.nrows() {
            let q = cross.row(n).dot(&self.phi.row(n));
            if q < -1e-12 {
                return Err(Error::Inconsistency(format!(
                    "quadratic form phi^T <w w^T> phi = {q} is negative at row {n}"
                )));
            }
            xi[n] = q.max(0.0).sqrt();
        }
        self.posterior.xi = xi;
        Ok(())
    }

    pub fn update_alpha(&mut self) -> Result<()> {
        let w_sq = DVector::from_fn(self.posterior.n_weights(), |m, _| {
            self.posterior.s[(m, m)] + self.posterior.m[m] * self.posterior.m[m]
        });
        let (a_tilde, b_tilde) = update_q_alpha(&self.hyperprior, &w_sq)?;
        self.posterior.a_tilde = a_tilde;
        self.posterior.b_tilde = b_tilde;
        Ok(())
    }

    /// One full sweep in the fixed order Q(w), xi, Q(alpha).
    pub fn sweep(&mut self) -> Result<()> {
        self.update_weights()?;
        self.update_xi()?;
        self.update_alpha()
    }

    pub fn lower_bound(&self) -> Result<f64> {
        Ok(bound_terms_core(
            &self.phi,
            &self.t,
            &self.posterior,
            &self.hyperprior,
            Some(self.ln_det_s),
        )?
        .total())
    }
}

/// A trained classification model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationModel {
    pub kernel: KernelSpec,
    pub centres: Vec<Vec<f64>>,
    pub posterior: ClassificationPosterior,
    pub hyperprior: HyperpriorConfig,
    pub standardizer: Option<Standardizer>,
}

/// How to turn the weight posterior into a class probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictMethod {
    /// sigma(m^T phi(x)): posterior-mean plug-in.
    MeanPlugin,
    /// sigma(kappa(s^2) m^T phi(x)) with kappa(s^2) = (1 + pi s^2 / 8)^{-1/2},
    /// the probit-matching approximation to marginalizing the weights.
    #[default]
    Mackay,
}

/// Train a classification VRVM; both classes must be present.
pub fn fit(
    x_rows: &[Vec<f64>],
    t: &[f64],
    kernel: &KernelSpec,
    hyperprior: &HyperpriorConfig,
    config: &FitConfig,
) -> Result<(ClassificationModel, FitReport)> {
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
    let targets = DVector::from_column_slice(t);
    validate_binary(&targets)?;
    if t.iter().all(|&v| v == 0.0) || t.iter().all(|&v| v == 1.0) {
        return Err(Error::InvalidInput("training data contains only one class".into()));
    }
    kernel.validate()?;
    config.validate()?;

    let (rows, standardizer) = if config.standardize {
        let s = Standardizer::fit(x_rows)?;
        (x_rows.iter().map(|r| s.transform(r)).collect::<Vec<_>>(), Some(s))
    } else {
        (x_rows.to_vec(), None)
    };
    let phi = build_design_matrix(kernel, &rows, &rows)?;

    let mut state = ClassificationFitState::new(&phi, &targets, hyperprior, config)?;
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
        .map(|m| posterior.m[m + offset].abs() > config.relevance_threshold)
        .collect();
    let model = ClassificationModel {
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
        noise_std_estimate: None,
    };
    Ok((model, report))
}

/// Class-1 probability at `x`.
pub fn predict_proba(model: &ClassificationModel, x: &[f64], method: PredictMethod) -> Result<f64> {
    let phi = basis_row(&model.kernel, &model.centres, model.standardizer.as_ref(), x)?;
    if phi.len() != model.posterior.n_weights() {
        return Err(Error::Dimension("basis row does not match the posterior dimension".into()));
    }
    let activation = model.posterior.m.dot(&phi);
    Ok(match method {
        PredictMethod::MeanPlugin => sigmoid(activation),
        PredictMethod::Mackay => {
            let s_sq = (&model.posterior.s * &phi).dot(&phi);
            let kappa = 1.0 / (1.0 + std::f64::consts::PI * s_sq / 8.0).sqrt();
            sigmoid(kappa * activation)
        }
    })
}

/// Hard label at the 0.5 threshold; ties go to class 1.
pub fn predict_label(model: &ClassificationModel, x: &[f64], method: PredictMethod) -> Result<f64> {
    Ok(if predict_proba(model, x, method)? >= 0.5 { 1.0 } else { 0.0 })
}

/// Centre indices whose weight magnitude exceeds `threshold`, plus count.
pub fn relevance_vectors(model: &ClassificationModel, threshold: f64) -> (Vec<usize>, usize) {
    let offset = usize::from(model.kernel.include_bias);
    let indices: Vec<usize> = (0..model.centres.len())
        .filter(|m| model.posterior.m[m + offset].abs() > threshold)
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

    fn bare_phi(values: DMatrix<f64>) -> DesignMatrix {
        let centres = (0..values.ncols()).map(|m| vec![m as f64]).collect();
        DesignMatrix { values, centres, include_bias: false }
    }

    #[test]
    fn weight_update_hand_example() {
        // N=1, Phi=[1], t=[1], <alpha>=[1], xi=[0]:
        // S = (1 + 2/8)^{-1} = 0.8, m = 0.5 * 0.8 = 0.4
        let phi = bare_phi(DMatrix::from_row_slice(1, 1, &[1.0]));
        let t = DVector::from_column_slice(&[1.0]);
        let (m, s) = update_q_w(
            &phi,
            &t,
            &DVector::from_element(1, 1.0),
            &DVector::from_element(1, 0.0),
        )
        .unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(m[0], 0.4, epsilon = 1e-14);
    }

    #[test]
    fn weight_update_label_flip_negates_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = bare_phi(DMatrix::from_fn(8, 3, |_, _| rng.random_range(-1.0..1.0)));
        let t = DVector::from_fn(8, |n, _| f64::from(n % 2 == 0));
        let flipped = t.map(|v| 1.0 - v);
        let alpha = DVector::from_element(3, 0.7);
        let xi = DVector::from_fn(8, |n, _| 0.1 + n as f64 * 0.3);
        let (m1, s1) = update_q_w(&phi, &t, &alpha, &xi).unwrap();
        let (m2, s2) = update_q_w(&phi, &flipped, &alpha, &xi).unwrap();
        assert_eq!(s1, s2);
        assert!((m1 + m2).amax() < 1e-15);
    }

    #[test]
    fn weight_update_rejects_bad_inputs() {
        let phi = bare_phi(DMatrix::from_row_slice(1, 1, &[1.0]));
        let alpha = DVector::from_element(1, 1.0);
        let xi = DVector::from_element(1, 0.0);
        let bad_t = DVector::from_column_slice(&[0.5]);
        assert!(update_q_w(&phi, &bad_t, &alpha, &xi).is_err());
        let t = DVector::from_column_slice(&[1.0]);
        let bad_xi = DVector::from_column_slice(&[-1.0]);
        assert!(update_q_w(&phi, &t, &alpha, &bad_xi).is_err());
    }

    #[test]
    fn xi_update_values() {
        let phi = bare_phi(DMatrix::from_row_slice(2, 1, &[1.0, 3.0]));
        let ww = DMatrix::from_row_slice(1, 1, &[4.0]);
        let xi = update_xi(&phi, &ww).unwrap();
        assert_abs_diff_eq!(xi[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(xi[1], 6.0, epsilon = 1e-14);
        // zero moments -> zero xi
        let zero = update_xi(&phi, &DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn xi_depends_only_on_second_moment() {
        let phi = bare_phi(DMatrix::from_row_slice(2, 2, &[1.0, -0.4, 0.2, 0.9]));
        let m = DVector::from_column_slice(&[0.7, -1.1]);
        let s = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        let ww_plus = &s + &m * m.transpose();
        let ww_minus = &s + (-&m) * (-&m).transpose();
        assert_eq!(update_xi(&phi, &ww_plus).unwrap(), update_xi(&phi, &ww_minus).unwrap());
    }

    #[test]
    fn jj_bound_touches_exact_likelihood() {
        for &(t, y) in &[(true, 0.8), (true, -2.5), (false, 1.7), (false, -0.3), (true, 0.0)] {
            let z = if t { y } else { -y };
            let exact = ln_sigmoid(z);
            let at_touch = jj_log_bound(t, y, z.abs());
            assert_abs_diff_eq!(at_touch, exact, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(jj_log_bound(true, 0.0, 0.0), 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn jj_bound_never_exceeds_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let t = rng.random_bool(0.5);
            let y = rng.random_range(-12.0..12.0);
            let xi = rng.random_range(0.0..12.0);
            let z: f64 = if t { y } else { -y };
            assert!(jj_log_bound(t, y, xi) <= ln_sigmoid(z) + 1e-12);
        }
    }

    #[test]
    fn empty_data_bound_reduces_to_weight_jensen_gap() {
        // With no data and Q(alpha) equal to its prior, the alpha term
        // pair cancels exactly; the w terms leave the Gaussian/Gamma
        // mismatch (M/2) (psi(a) - ln a), as in the regression bound.
        use crate::special::digamma_unchecked;
        for &(a, m) in &[(1.0, 4usize), (3.0, 2)] {
            let hyper = HyperpriorConfig { a, b: 0.9, ..HyperpriorConfig::default() };
            let phi = bare_phi(DMatrix::zeros(0, m));
            let t = DVector::zeros(0);
            let posterior = ClassificationPosterior {
                m: DVector::zeros(m),
                s: DMatrix::from_diagonal_element(m, m, hyper.b / hyper.a),
                a_tilde: DVector::from_element(m, hyper.a),
                b_tilde: DVector::from_element(m, hyper.b),
                xi: DVector::zeros(0),
            };
            let terms = lower_bound_terms(&phi, &t, &posterior, &hyper).unwrap();
            assert_abs_diff_eq!(terms.bounded_likelihood, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(terms.alpha_prior + terms.alpha_entropy, 0.0, epsilon = 1e-10);
            let expected = 0.5 * m as f64 * (digamma_unchecked(a) - a.ln());
            assert_abs_diff_eq!(terms.total(), expected, epsilon = 1e-10);
        }
    }

    fn two_blob_data(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::with_capacity(n);
        let mut ts = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 2;
            let centre = if class == 0 { [-1.0, 0.0] } else { [1.0, 0.5] };
            xs.push(vec![
                centre[0] + 0.6 * rng.random_range(-1.0..1.0),
                centre[1] + 0.6 * rng.random_range(-1.0..1.0),
            ]);
            ts.push(class as f64);
        }
        (xs, ts)
    }

    #[test]
    fn per_update_bound_never_decreases() {
        let hyper = HyperpriorConfig::default();
        let config = FitConfig::default();
        for seed in 0..4 {
            let (xs, ts) = two_blob_data(seed, 14);
            let kernel = KernelSpec::gaussian(1.0);
            let phi = build_design_matrix(&kernel, &xs, &xs).unwrap();
            let t = DVector::from_column_slice(&ts);
            let mut state = ClassificationFitState::new(&phi, &t, &hyper, &config).unwrap();
            let mut prev = state.lower_bound().unwrap();
            for _ in 0..40 {
                for step in [
                    ClassificationFitState::update_weights,
                    ClassificationFitState::update_xi,
                    ClassificationFitState::update_alpha,
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
    fn separable_pair_classified_correctly() {
        let xs = vec![vec![-1.0], vec![1.0]];
        let ts = vec![0.0, 1.0];
        let kernel = KernelSpec::gaussian(1.0);
        let (model, report) = fit(
            &xs,
            &ts,
            &kernel,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        assert!(report.converged);
        assert_eq!(predict_label(&model, &[-1.0], PredictMethod::Mackay).unwrap(), 0.0);
        assert_eq!(predict_label(&model, &[1.0], PredictMethod::Mackay).unwrap(), 1.0);
    }

    #[test]
    fn fit_rejects_single_class_and_bad_labels() {
        let xs = vec![vec![0.0], vec![1.0]];
        let kernel = KernelSpec::gaussian(1.0);
        let hyper = HyperpriorConfig::default();
        let config = FitConfig::default();
        assert!(fit(&xs, &[1.0, 1.0], &kernel, &hyper, &config).is_err());
        assert!(fit(&xs, &[0.0, 0.0], &kernel, &hyper, &config).is_err());
        assert!(fit(&xs, &[0.0, 0.7], &kernel, &hyper, &config).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let (xs, ts) = two_blob_data(3, 20);
        let kernel = KernelSpec::gaussian(1.0);
        let hyper = HyperpriorConfig::default();
        let config = FitConfig::default();
        let (_, r1) = fit(&xs, &ts, &kernel, &hyper, &config).unwrap();
        let (_, r2) = fit(&xs, &ts, &kernel, &hyper, &config).unwrap();
        assert_eq!(r1.elbo_trace, r2.elbo_trace);
    }

    #[test]
    fn label_flip_symmetry_of_full_fit() {
        let (xs, ts) = two_blob_data(7, 16);
        let flipped: Vec<f64> = ts.iter().map(|v| 1.0 - v).collect();
        let kernel = KernelSpec::gaussian(1.0);
        let hyper = HyperpriorConfig::default();
        let config = FitConfig::default();
        let (m1, _) = fit(&xs, &ts, &kernel, &hyper, &config).unwrap();
        let (m2, _) = fit(&xs, &flipped, &kernel, &hyper, &config).unwrap();
        assert!((m1.posterior.m.clone() + &m2.posterior.m).amax() < 1e-10);
        assert!((m1.posterior.s.clone() - &m2.posterior.s).amax() < 1e-10);
        assert!((m1.posterior.b_tilde.clone() - &m2.posterior.b_tilde).amax() < 1e-10);
        assert!((m1.posterior.xi.clone() - &m2.posterior.xi).amax() < 1e-10);
    }

    #[test]
    fn mackay_moderates_toward_half() {
        let (xs, ts) = two_blob_data(5, 20);
        let kernel = KernelSpec::gaussian(1.0);
        let (model, _) = fit(
            &xs,
            &ts,
            &kernel,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        for x in [[-1.2, 0.1], [0.0, 0.2], [1.4, 0.6]] {
            let plug = predict_proba(&model, &x, PredictMethod::MeanPlugin).unwrap();
            let mack = predict_proba(&model, &x, PredictMethod::Mackay).unwrap();
            if plug > 0.5 {
                assert!(mack <= plug + 1e-15 && mack >= 0.5);
            } else {
                assert!(mack >= plug - 1e-15 && mack <= 0.5);
            }
        }
    }

    #[test]
    fn mackay_equals_plugin_with_zero_covariance() {
        let (xs, ts) = two_blob_data(6, 12);
        let kernel = KernelSpec::gaussian(1.0);
        let (mut model, _) = fit(
            &xs,
            &ts,
            &kernel,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        let dim = model.posterior.n_weights();
        model.posterior.s = DMatrix::zeros(dim, dim);
        for x in [[-0.5, 0.0], [0.8, 0.4]] {
            let plug = predict_proba(&model, &x, PredictMethod::MeanPlugin).unwrap();
            let mack = predict_proba(&model, &x, PredictMethod::Mackay).unwrap();
            assert_eq!(plug, mack);
        }
    }

    #[test]
    fn decision_boundary_at_zero_activation() {
        let (xs, ts) = two_blob_data(8, 12);
        let kernel = KernelSpec::gaussian(1.0);
        let (mut model, _) = fit(
            &xs,
            &ts,
            &kernel,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        // Zero weights: every probability is exactly one half.
        model.posterior.m = DVector::zeros(model.posterior.n_weights());
        for x in [[-2.0, 1.0], [0.3, -0.4]] {
            assert_eq!(predict_proba(&model, &x, PredictMethod::MeanPlugin).unwrap(), 0.5);
            assert_eq!(predict_proba(&model, &x, PredictMethod::Mackay).unwrap(), 0.5);
            assert_eq!(predict_label(&model, &x, PredictMethod::Mackay).unwrap(), 1.0);
        }
    }

    #[test]
    fn converged_fit_is_a_fixed_point() {
        let (xs, ts) = two_blob_data(2, 18);
        let kernel = KernelSpec::gaussian(1.0);
        let hyper = HyperpriorConfig::default();
        let config = FitConfig { tolerance: 1e-12, max_iter: 30000, ..FitConfig::default() };
        let (model, report) = fit(&xs, &ts, &kernel, &hyper, &config).unwrap();
        assert!(report.converged);

        let phi = build_design_matrix(&kernel, &xs, &xs).unwrap();
        let t = DVector::from_column_slice(&ts);
        let mut state = ClassificationFitState::new(&phi, &t, &hyper, &config).unwrap();
        state.posterior = model.posterior.clone();
        state.sweep().unwrap();
        let after = state.posterior();
        assert!((after.m.clone() - &model.posterior.m).amax() < 1e-6);
        assert!((after.s.clone() - &model.posterior.s).amax() < 1e-6);
        assert!((after.b_tilde.clone() - &model.posterior.b_tilde).amax() < 1e-6);
        assert!((after.xi.clone() - &model.posterior.xi).amax() < 1e-6);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn jj_bound_below_exact(t in any::<bool>(), y in -20.0f64..20.0, xi in -20.0f64..20.0) {
                let z = if t { y } else { -y };
                prop_assert!(jj_log_bound(t, y, xi) <= ln_sigmoid(z) + 1e-12);
            }
        }
    }
}
