//! Kernel functions and design-matrix construction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent normalization of the Gaussian kernel. The literature uses both
/// conventions for a "width" r, so the choice is explicit and persisted
/// with the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GaussianConvention {
    /// K(x, x') = exp(-||x - x'||^2 / r^2)
    #[default]
    WidthSq,
    /// K(x, x') = exp(-||x - x'||^2 / (2 r^2))
    TwiceWidthSq,
}

impl GaussianConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            GaussianConvention::WidthSq => "width_sq",
            GaussianConvention::TwiceWidthSq => "twice_width_sq",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "width_sq" => Ok(GaussianConvention::WidthSq),
            "twice_width_sq" => Ok(GaussianConvention::TwiceWidthSq),
            other => Err(Error::InvalidInput(format!("unknown gaussian convention '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelKind {
    /// exp of the negative squared distance, scaled per `GaussianConvention`.
    Gaussian { width: f64 },
    /// Inhomogeneous polynomial (1 + x . x')^degree.
    Polynomial { degree: u32 },
    /// Plain inner product x . x'.
    Linear,
}

/// Kernel choice plus the structural flags that shape the design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub convention: GaussianConvention,
    pub include_bias: bool,
}

impl KernelSpec {
    pub fn gaussian(width: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Gaussian { width },
            convention: GaussianConvention::default(),
            include_bias: true,
        }
    }

    pub fn polynomial(degree: u32) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial { degree },
            convention: GaussianConvention::default(),
            include_bias: true,
        }
    }

    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            convention: GaussianConvention::default(),
            include_bias: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Gaussian { width } => {
                if !width.is_finite() || width <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
            }
            KernelKind::Polynomial { degree } => {
                if degree < 1 {
                    return Err(Error::InvalidInput("polynomial degree must be >= 1".into()));
                }
            }
            KernelKind::Linear => {}
        }
        Ok(())
    }
}

/// Evaluate K(x, x2) under `spec`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], x2: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != x2.len() {
        return Err(Error::Dimension(format!(
            "kernel inputs have lengths {} and {}",
            x.len(),
            x2.len()
        )));
    }
    Ok(match spec.kind {
        KernelKind::Gaussian { width } => {
            let d2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
            let denom = match spec.convention {
                GaussianConvention::WidthSq => width * width,
                GaussianConvention::TwiceWidthSq => 2.0 * width * width,
            };
            (-d2 / denom).exp()
        }
        KernelKind::Polynomial { degree } => {
            let dot: f64 = x.iter().zip(x2).map(|(a, b)| a * b).sum();
            (1.0 + dot).powi(degree as i32)
        }
        KernelKind::Linear => x.iter().zip(x2).map(|(a, b)| a * b).sum(),
    })
}

/// Per-feature affine rescaling fitted on training inputs and replayed at
/// prediction time. Constant features keep unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x_rows: &[Vec<f64>]) -> Result<Self> {
        if x_rows.is_empty() {
            return Err(Error::InvalidInput("cannot standardize an empty input set".into()));
        }
        let dim = x_rows[0].len();
        let n = x_rows.len() as f64;
        let mut means = vec![0.0; dim];
        for row in x_rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut stds = vec![0.0; dim];
        for row in x_rows {
            for ((s, m), v) in stds.iter_mut().zip(&means).zip(row) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut stds {
            *s = s.sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(Standardizer { means, stds })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// The N x (M+1) basis-evaluation matrix with rows
/// phi_n = (1, K(x_n, c_1), ..., K(x_n, c_M)) when the bias is included,
/// together with the centres retained for prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub values: DMatrix<f64>,
    pub centres: Vec<Vec<f64>>,
    pub include_bias: bool,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_weights(&self) -> usize {
        self.values.ncols()
    }
}

/// Build the design matrix of `x_rows` against `centres`.
pub fn build_design_matrix(
    spec: &KernelSpec,
    x_rows: &[Vec<f64>],
    centres: &[Vec<f64>],
) -> Result<DesignMatrix> {
    spec.validate()?;
    if x_rows.is_empty() {
        return Err(Error::InvalidInput("design matrix needs at least one input row".into()));
    }
    if centres.is_empty() {
        return Err(Error::InvalidInput("design matrix needs at least one centre".into()));
    }
    let dim = centres[0].len();
    for (i, c) in centres.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::Dimension(format!(
                "centre {i} has dimension {} but centre 0 has {dim}",
                c.len()
            )));
        }
    }
    let offset = usize::from(spec.include_bias);
    let mut values = DMatrix::zeros(x_rows.len(), centres.len() + offset);
    for (n, row) in x_rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Dimension(format!(
                "input row {n} has dimension {} but centres have {dim}",
                row.len()
            )));
        }
        if spec.include_bias {
            values[(n, 0)] = 1.0;
        }
        for (m, centre) in centres.iter().enumerate() {
            values[(n, m + offset)] = kernel_eval(spec, row, centre)?;
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("design matrix contains non-finite entries".into()));
    }
    Ok(DesignMatrix {
        values,
        centres: centres.to_vec(),
        include_bias: spec.include_bias,
    })
}

/// Basis row phi(x) for a single input, applying `standardizer` first when
/// present (centres are stored already standardized).
pub fn basis_row(
    spec: &KernelSpec,
    centres: &[Vec<f64>],
    standardizer: Option<&Standardizer>,
    x: &[f64],
) -> Result<DVector<f64>> {
    let transformed;
    let x = match standardizer {
        Some(s) => {
            if x.len() != s.means.len() {
                return Err(Error::Dimension(format!(
                    "input has dimension {} but the model was trained on {}",
                    x.len(),
                    s.means.len()
                )));
            }
            transformed = s.transform(x);
            &transformed[..]
        }
        None => x,
    };
    let offset = usize::from(spec.include_bias);
    let mut phi = DVector::zeros(centres.len() + offset);
    if spec.include_bias {
        phi[0] = 1.0;
    }
    for (m, centre) in centres.iter().enumerate() {
        phi[m + offset] = kernel_eval(spec, x, centre)?;
    }
    Ok(phi)
}
