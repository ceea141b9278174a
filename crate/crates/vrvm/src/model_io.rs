//! Lossless, human-readable model persistence.
//!
//! The format is line-oriented text with a leading version tag. Every
//! float is printed with 17 significant digits, so saving and loading is
//! bit-exact for finite f64 values and files diff cleanly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::classification::{ClassificationModel, ClassificationPosterior};
use crate::data::TaskKind;
use crate::error::{Error, Result};
use crate::fit::{HyperpriorConfig, CLASSIFICATION_UPDATE_ORDER, REGRESSION_UPDATE_ORDER};
use crate::kernel::{GaussianConvention, KernelKind, KernelSpec, Standardizer};
use crate::regression::{RegressionModel, RegressionPosterior};

const FORMAT_TAG: &str = "vrvm-model-v1";

/// Either kind of trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Regression(RegressionModel),
    Classification(ClassificationModel),
}

impl TrainedModel {
    pub fn task(&self) -> TaskKind {
        match self {
            TrainedModel::Regression(_) => TaskKind::Regression,
            TrainedModel::Classification(_) => TaskKind::Classification,
        }
    }
}

/// Fit metadata persisted with the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub iterations: usize,
    pub converged: bool,
    pub final_elbo: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub relevance_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: TrainedModel,
    pub meta: ModelMeta,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_vector(out: &mut String, name: &str, v: &DVector<f64>) {
    let _ = write!(out, "{name} {}", v.len());
    for x in v.iter() {
        let _ = write!(out, " {}", fmt_f(*x));
    }
    out.push('\n');
}

fn push_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let mut line = String::new();
        for c in 0..m.ncols() {
            if c > 0 {
                line.push(' ');
            }
            line.push_str(&fmt_f(m[(r, c)]));
        }
        out.push_str(&line);
        out.push('\n');
    }
}

pub fn encode(file: &ModelFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_TAG}");
    let task = file.model.task();
    let _ = writeln!(out, "task {}", task.as_str());

    let (kernel, standardizer, hyper) = match &file.model {
        TrainedModel::Regression(m) => (&m.kernel, &m.standardizer, &m.hyperprior),
        TrainedModel::Classification(m) => (&m.kernel, &m.standardizer, &m.hyperprior),
    };
    match kernel.kind {
        KernelKind::Gaussian { width } => {
            let _ = writeln!(out, "kernel gaussian {}", fmt_f(width));
        }
        KernelKind::Polynomial { degree } => {
            let _ = writeln!(out, "kernel polynomial {degree}");
        }
        KernelKind::Linear => {
            let _ = writeln!(out, "kernel linear");
        }
    }
    let _ = writeln!(out, "gaussian_convention {}", kernel.convention.as_str());
    let _ = writeln!(out, "include_bias {}", kernel.include_bias);
    match standardizer {
        Some(s) => {
            let _ = writeln!(out, "standardize true");
            push_vector(&mut out, "means", &DVector::from_column_slice(&s.means));
            push_vector(&mut out, "stds", &DVector::from_column_slice(&s.stds));
        }
        None => {
            let _ = writeln!(out, "standardize false");
        }
    }
    let _ = writeln!(
        out,
        "hyperprior {} {} {} {}",
        fmt_f(hyper.a),
        fmt_f(hyper.b),
        fmt_f(hyper.c),
        fmt_f(hyper.d)
    );

    let centres = match &file.model {
        TrainedModel::Regression(m) => &m.centres,
        TrainedModel::Classification(m) => &m.centres,
    };
    let dim = centres.first().map_or(0, Vec::len);
    let _ = writeln!(out, "centres {} {}", centres.len(), dim);
    for c in centres {
        let mut line = String::new();
        for (i, v) in c.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&fmt_f(*v));
        }
        out.push_str(&line);
        out.push('\n');
    }

    match &file.model {
        TrainedModel::Regression(m) => {
            push_vector(&mut out, "mu_w", &m.posterior.mu_w);
            push_matrix(&mut out, "sigma_w", &m.posterior.sigma_w);
            push_vector(&mut out, "a_tilde", &m.posterior.a_tilde);
            push_vector(&mut out, "b_tilde", &m.posterior.b_tilde);
            let _ = writeln!(out, "c_tilde {}", fmt_f(m.posterior.c_tilde));
            let _ = writeln!(out, "d_tilde {}", fmt_f(m.posterior.d_tilde));
        }
        TrainedModel::Classification(m) => {
            push_vector(&mut out, "m_w", &m.posterior.m);
            push_matrix(&mut out, "s_w", &m.posterior.s);
            push_vector(&mut out, "a_tilde", &m.posterior.a_tilde);
            push_vector(&mut out, "b_tilde", &m.posterior.b_tilde);
            push_vector(&mut out, "xi", &m.posterior.xi);
        }
    }

    let meta = &file.meta;
    let order = match task {
        TaskKind::Regression => REGRESSION_UPDATE_ORDER,
        TaskKind::Classification => CLASSIFICATION_UPDATE_ORDER,
    };
    let _ = writeln!(out, "meta_iterations {}", meta.iterations);
    let _ = writeln!(out, "meta_converged {}", meta.converged);
    let _ = writeln!(out, "meta_final_elbo {}", fmt_f(meta.final_elbo));
    let _ = writeln!(out, "meta_seed {}", meta.seed);
    let _ = writeln!(out, "meta_tolerance {}", fmt_f(meta.tolerance));
    let _ = writeln!(out, "meta_max_iter {}", meta.max_iter);
    let _ = writeln!(out, "meta_relevance_threshold {}", fmt_f(meta.relevance_threshold));
    let _ = writeln!(out, "meta_update_order {order}");
    out
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<()> {
    std::fs::write(path, encode(file))?;
    Ok(())
}

struct Lines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::ModelFormat("unexpected end of file".into()))
    }

    fn expect_tagged(&mut self, tag: &str) -> Result<Vec<String>> {
        let (ln, line) = self.next()?;
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap_or("");
        if head != tag {
            return Err(Error::ModelFormat(format!(
                "line {ln}: expected '{tag}', found '{head}'"
            )));
        }
        Ok(parts.map(str::to_string).collect())
    }
}

fn parse_f(s: &str, what: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::ModelFormat(format!("bad float for {what}: '{s}'")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::ModelFormat(format!("bad integer for {what}: '{s}'")))
}

fn parse_vector(fields: &[String], what: &str) -> Result<DVector<f64>> {
    if fields.is_empty() {
        return Err(Error::ModelFormat(format!("{what}: missing length")));
    }
    let len = parse_usize(&fields[0], what)?;
    if fields.len() != len + 1 {
        return Err(Error::ModelFormat(format!(
            "{what}: expected {len} values, found {}",
            fields.len() - 1
        )));
    }
    let mut v = DVector::zeros(len);
    for i in 0..len {
        v[i] = parse_f(&fields[i + 1], what)?;
    }
    Ok(v)
}

fn parse_matrix(lines: &mut Lines, fields: &[String], what: &str) -> Result<DMatrix<f64>> {
    if fields.len() != 2 {
        return Err(Error::ModelFormat(format!("{what}: expected 'rows cols'")));
    }
    let rows = parse_usize(&fields[0], what)?;
    let cols = parse_usize(&fields[1], what)?;
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        let (ln, line) = lines.next()?;
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != cols {
            return Err(Error::ModelFormat(format!(
                "line {ln}: {what} row has {} values, expected {cols}",
                values.len()
            )));
        }
        for (c, s) in values.iter().enumerate() {
            m[(r, c)] = parse_f(s, what)?;
        }
    }
    Ok(m)
}

pub fn decode(text: &str) -> Result<ModelFile> {
    let mut lines = Lines { lines: text.lines().enumerate() };
    let (_, version) = lines.next()?;
    if version.trim() != FORMAT_TAG {
        return Err(Error::ModelFormat(format!(
            "unsupported model version '{}', expected '{FORMAT_TAG}'",
            version.trim()
        )));
    }
    let task_f = lines.expect_tagged("task")?;
    let task = TaskKind::parse(task_f.first().map(String::as_str).unwrap_or(""))
        .map_err(|e| Error::ModelFormat(e.to_string()))?;

    let kernel_f = lines.expect_tagged("kernel")?;
    let kind = match kernel_f.first().map(String::as_str) {
        Some("gaussian") => KernelKind::Gaussian {
            width: parse_f(kernel_f.get(1).map(String::as_str).unwrap_or(""), "width")?,
        },
        Some("polynomial") => KernelKind::Polynomial {
            degree: parse_usize(kernel_f.get(1).map(String::as_str).unwrap_or(""), "degree")?
                as u32,
        },
        Some("linear") => KernelKind::Linear,
        other => {
            return Err(Error::ModelFormat(format!("unknown kernel kind {other:?}")));
        }
    };
    let conv_f = lines.expect_tagged("gaussian_convention")?;
    let convention =
        GaussianConvention::parse(conv_f.first().map(String::as_str).unwrap_or(""))
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
    let bias_f = lines.expect_tagged("include_bias")?;
    let include_bias = bias_f.first().map(String::as_str) == Some("true");
    let kernel = KernelSpec { kind, convention, include_bias };

    let std_f = lines.expect_tagged("standardize")?;
    let standardizer = if std_f.first().map(String::as_str) == Some("true") {
        let means = parse_vector(&lines.expect_tagged("means")?, "means")?;
        let stds = parse_vector(&lines.expect_tagged("stds")?, "stds")?;
        Some(Standardizer {
            means: means.iter().copied().collect(),
            stds: stds.iter().copied().collect(),
        })
    } else {
        None
    };

    let hyper_f = lines.expect_tagged("hyperprior")?;
    if hyper_f.len() != 4 {
        return Err(Error::ModelFormat("hyperprior needs four values".into()));
    }
    let hyperprior = HyperpriorConfig {
        a: parse_f(&hyper_f[0], "hyperprior a")?,
        b: parse_f(&hyper_f[1], "hyperprior b")?,
        c: parse_f(&hyper_f[2], "hyperprior c")?,
        d: parse_f(&hyper_f[3], "hyperprior d")?,
    };

    let centres_f = lines.expect_tagged("centres")?;
    if centres_f.len() != 2 {
        return Err(Error::ModelFormat("centres needs 'count dim'".into()));
    }
    let count = parse_usize(&centres_f[0], "centre count")?;
    let dim = parse_usize(&centres_f[1], "centre dim")?;
    let mut centres = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, line) = lines.next()?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != dim {
            return Err(Error::ModelFormat(format!(
                "line {ln}: centre has {} values, expected {dim}",
                vals.len()
            )));
        }
        let mut c = Vec::with_capacity(dim);
        for s in vals {
            c.push(parse_f(s, "centre")?);
        }
        centres.push(c);
    }

    let expected_weights = count + usize::from(include_bias);
    let model = match task {
        TaskKind::Regression => {
            let mu_w = parse_vector(&lines.expect_tagged("mu_w")?, "mu_w")?;
            let sigma_f = lines.expect_tagged("sigma_w")?;
            let sigma_w = parse_matrix(&mut lines, &sigma_f, "sigma_w")?;
            let a_tilde = parse_vector(&lines.expect_tagged("a_tilde")?, "a_tilde")?;
            let b_tilde = parse_vector(&lines.expect_tagged("b_tilde")?, "b_tilde")?;
            let c_tilde = parse_f(
                lines.expect_tagged("c_tilde")?.first().map(String::as_str).unwrap_or(""),
                "c_tilde",
            )?;
            let d_tilde = parse_f(
                lines.expect_tagged("d_tilde")?.first().map(String::as_str).unwrap_or(""),
                "d_tilde",
            )?;
            if mu_w.len() != expected_weights {
                return Err(Error::ModelFormat(format!(
                    "mu_w has {} entries but centres imply {expected_weights}",
                    mu_w.len()
                )));
            }
            TrainedModel::Regression(RegressionModel {
                kernel,
                centres,
                posterior: RegressionPosterior { mu_w, sigma_w, a_tilde, b_tilde, c_tilde, d_tilde },
                hyperprior,
                standardizer,
            })
        }
        TaskKind::Classification => {
            let m = parse_vector(&lines.expect_tagged("m_w")?, "m_w")?;
            let s_f = lines.expect_tagged("s_w")?;
            let s = parse_matrix(&mut lines, &s_f, "s_w")?;
            let a_tilde = parse_vector(&lines.expect_tagged("a_tilde")?, "a_tilde")?;
            let b_tilde = parse_vector(&lines.expect_tagged("b_tilde")?, "b_tilde")?;
            let xi = parse_vector(&lines.expect_tagged("xi")?, "xi")?;
            if m.len() != expected_weights {
                return Err(Error::ModelFormat(format!(
                    "m_w has {} entries but centres imply {expected_weights}",
                    m.len()
                )));
            }
            TrainedModel::Classification(ClassificationModel {
                kernel,
                centres,
                posterior: ClassificationPosterior { m, s, a_tilde, b_tilde, xi },
                hyperprior,
                standardizer,
            })
        }
    };

    let meta = ModelMeta {
        iterations: parse_usize(
            lines.expect_tagged("meta_iterations")?.first().map(String::as_str).unwrap_or(""),
            "meta_iterations",
        )?,
        converged: lines.expect_tagged("meta_converged")?.first().map(String::as_str)
            == Some("true"),
        final_elbo: parse_f(
            lines.expect_tagged("meta_final_elbo")?.first().map(String::as_str).unwrap_or(""),
            "meta_final_elbo",
        )?,
        seed: lines
            .expect_tagged("meta_seed")?
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ModelFormat("bad meta_seed".into()))?,
        tolerance: parse_f(
            lines.expect_tagged("meta_tolerance")?.first().map(String::as_str).unwrap_or(""),
            "meta_tolerance",
        )?,
        max_iter: parse_usize(
            lines.expect_tagged("meta_max_iter")?.first().map(String::as_str).unwrap_or(""),
            "meta_max_iter",
        )?,
        relevance_threshold: parse_f(
            lines
                .expect_tagged("meta_relevance_threshold")?
                .first()
                .map(String::as_str)
                .unwrap_or(""),
            "meta_relevance_threshold",
        )?,
    };
    let _ = lines.expect_tagged("meta_update_order")?;

    Ok(ModelFile { model, meta })
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    decode(&text).map_err(|e| e.with_context(&path.display().to_string()))
}
