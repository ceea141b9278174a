//! Synthetic data generators, CSV ingestion, and k-fold cross-validation
//! for kernel-width selection.
//!
//! All randomness flows through seeded ChaCha8 streams so datasets and
//! fold assignments reproduce bit-identically across platforms.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classification;
use crate::error::{Error, Result};
use crate::fit::{FitConfig, HyperpriorConfig};
use crate::kernel::{GaussianConvention, KernelSpec};
use crate::regression;

pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Regression => "regression",
            TaskKind::Classification => "classification",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(TaskKind::Regression),
            "classification" => Ok(TaskKind::Classification),
            other => Err(Error::InvalidInput(format!("unknown task kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    UniformRandom,
    Equispaced,
}

/// Two-class Gaussian-mixture layout: each class is an equal mixture of
/// two isotropic components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub class0_means: [[f64; 2]; 2],
    pub class1_means: [[f64; 2]; 2],
    pub std_dev: f64,
}

impl Default for MixtureParams {
    fn default() -> Self {
        MixtureParams {
            class0_means: [[-0.3, 0.7], [0.4, 0.7]],
            class1_means: [[-0.7, 0.3], [0.3, 0.3]],
            std_dev: 0.25,
        }
    }
}

impl MixtureParams {
    /// Density of the given class at `x` (equal component weights).
    pub fn class_density(&self, class: usize, x: &[f64]) -> f64 {
        let means = if class == 0 { &self.class0_means } else { &self.class1_means };
        let var = self.std_dev * self.std_dev;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * var);
        let mut p = 0.0;
        for mean in means {
            let d2 = (x[0] - mean[0]).powi(2) + (x[1] - mean[1]).powi(2);
            p += 0.5 * norm * (-0.5 * d2 / var).exp();
        }
        p
    }

    /// The error-minimizing rule under equal class priors.
    pub fn bayes_classify(&self, x: &[f64]) -> f64 {
        f64::from(self.class_density(1, x) >= self.class_density(0, x))
    }

    /// Bayes error 0.5 * Int min(p0, p1), by Simpson quadrature on a grid
    /// wide enough that the truncated tail mass is negligible.
    pub fn bayes_error(&self) -> f64 {
        let all = self.class0_means.iter().chain(&self.class1_means);
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for m in all {
            for d in 0..2 {
                lo[d] = lo[d].min(m[d] - 8.0 * self.std_dev);
                hi[d] = hi[d].max(m[d] + 8.0 * self.std_dev);
            }
        }
        let n = 800; // Simpson needs an even interval count
        let hx = (hi[0] - lo[0]) / n as f64;
        let hy = (hi[1] - lo[1]) / n as f64;
        let weight = |i: usize| -> f64 {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut total = 0.0;
        for i in 0..=n {
            let x = lo[0] + hx * i as f64;
            let mut row = 0.0;
            for j in 0..=n {
                let y = lo[1] + hy * j as f64;
                let p0 = self.class_density(0, &[x, y]);
                let p1 = self.class_density(1, &[x, y]);
                row += weight(j) * p0.min(p1);
            }
            total += weight(i) * row;
        }
        0.5 * total * hx * hy / 9.0
    }
}

/// Where a dataset came from; written alongside generated CSV files and
/// used by evaluation to score against the true function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Provenance {
    Sinc { n: usize, noise_sd: f64, seed: u64, spacing: Spacing, rng: String },
    TwoClass { n: usize, seed: u64, mixture: MixtureParams, bayes_error: f64, rng: String },
}

impl Provenance {
    /// Noise-free target at `x` for generators with a known true function.
    pub fn true_value(&self, x: &[f64]) -> Option<f64> {
        match self {
            Provenance::Sinc { .. } => Some(sinc(x[0])),
            Provenance::TwoClass { .. } => None,
        }
    }
}

/// Input rows with aligned targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x_rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub task: TaskKind,
    pub provenance: Option<Provenance>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x_rows.first().map_or(0, Vec::len)
    }

    /// Plain numeric CSV with a header row x1..xd,t; floats are printed
    /// with 17 significant digits so reading the file back is bit-exact.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let dim = self.dim();
        for d in 0..dim {
            let _ = write!(out, "x{},", d + 1);
        }
        out.push_str("t\n");
        for (row, t) in self.x_rows.iter().zip(&self.targets) {
            for v in row {
                let _ = write!(out, "{v:.16e},");
            }
            let _ = writeln!(out, "{t:.16e}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        if let Some(p) = &self.provenance {
            let json = serde_json::to_string_pretty(p)
                .map_err(|e| Error::Data(format!("provenance encode: {e}")))?;
            std::fs::write(sidecar_path(path), json)?;
        }
        Ok(())
    }
}

/// `data.csv` -> `data.csv.meta.json`
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}

pub fn load_sidecar(path: &Path) -> Option<Provenance> {
    let text = std::fs::read_to_string(sidecar_path(path)).ok()?;
    serde_json::from_str(&text).ok()
}

/// sinc(x) = sin(x)/x with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Noisy sinc samples on (-10, 10).
pub fn gen_sinc(n: usize, noise_sd: f64, seed: u64, spacing: Spacing) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2, got {n}")));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::InvalidInput(format!("noise_sd must be >= 0, got {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x_rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let x = match spacing {
            Spacing::UniformRandom => rng.random_range(-10.0..10.0),
            Spacing::Equispaced => -10.0 + 20.0 * (i as f64 + 0.5) / n as f64,
        };
        let noise: f64 = normal.sample(&mut rng);
        x_rows.push(vec![x]);
        targets.push(sinc(x) + noise_sd * noise);
    }
    Ok(Dataset {
        x_rows,
        targets,
        task: TaskKind::Regression,
        provenance: Some(Provenance::Sinc {
            n,
            noise_sd,
            seed,
            spacing,
            rng: RNG_NAME.into(),
        }),
    })
}

/// Balanced two-class Gaussian-mixture data in two dimensions with the
/// default mixture layout; the numerically computed Bayes error ships in
/// the provenance record.
pub fn gen_two_class(n: usize, seed: u64) -> Result<Dataset> {
    gen_two_class_with(n, seed, &MixtureParams::default())
}

pub fn gen_two_class_with(n: usize, seed: u64, mixture: &MixtureParams) -> Result<Dataset> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("need even n >= 4, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x_rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let class = usize::from(i >= n / 2);
        let means = if class == 0 { &mixture.class0_means } else { &mixture.class1_means };
        let mean = means[usize::from(rng.random_bool(0.5))];
        let z1: f64 = normal.sample(&mut rng);
        let z2: f64 = normal.sample(&mut rng);
        x_rows.push(vec![mean[0] + mixture.std_dev * z1, mean[1] + mixture.std_dev * z2]);
        targets.push(class as f64);
    }
    Ok(Dataset {
        x_rows,
        targets,
        task: TaskKind::Classification,
        provenance: Some(Provenance::TwoClass {
            n,
            seed,
            mixture: mixture.clone(),
            bayes_error: mixture.bayes_error(),
            rng: RNG_NAME.into(),
        }),
    })
}

/// How to read a CSV file into a dataset.
#[derive(Debug, Clone, Copy)]
pub struct CsvSchema {
    /// Index of the target column; `None` means the last column.
    pub target_col: Option<usize>,
    pub has_header: bool,
    pub task: TaskKind,
}

/// Parse a rectangular numeric CSV. Row numbers in errors are 1-based data
/// rows (the header, when present, is row 0).
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let mut x_rows = Vec::new();
    let mut targets = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Data(format!(
                "row {row}: expected {w} columns, found {}",
                record.len()
            )));
        }
        if w < 2 {
            return Err(Error::Data(format!(
                "row {row}: need at least one feature column plus the target"
            )));
        }
        let target_col = schema.target_col.unwrap_or(w - 1);
        if target_col >= w {
            return Err(Error::Data(format!(
                "row {row}: target column {target_col} out of range for {w} columns"
            )));
        }
        let mut features = Vec::with_capacity(w - 1);
        let mut target = None;
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::Data(format!("row {row}: non-numeric cell '{cell}' in column {col}"))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!("row {row}: non-finite value in column {col}")));
            }
            if col == target_col {
                target = Some(value);
            } else {
                features.push(value);
            }
        }
        let target = target.expect("target column visited");
        if schema.task == TaskKind::Classification && target != 0.0 && target != 1.0 {
            return Err(Error::Data(format!(
                "row {row}: classification target must be 0 or 1, got {target}"
            )));
        }
        x_rows.push(features);
        targets.push(target);
    }
    if x_rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Dataset { x_rows, targets, task: schema.task, provenance: load_sidecar(path) })
}

/// Parse a CSV file of features only (no target column).
pub fn load_csv_features(path: &Path, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Data(format!(
                "row {row}: expected {w} columns, found {}",
                record.len()
            )));
        }
        let mut features = Vec::with_capacity(w);
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::Data(format!("row {row}: non-numeric cell '{cell}' in column {col}"))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!("row {row}: non-finite value in column {col}")));
            }
            features.push(value);
        }
        rows.push(features);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// A k-fold partition: `assignments[i]` is the fold of row i.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CVPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl CVPlan {
    /// Shuffle 0..n with the seeded generator and deal rows round-robin.
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("need k >= 2 folds, got {k}")));
        }
        if n < k {
            return Err(Error::InvalidInput(format!("need at least k = {k} rows, got {n}")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut assignments = vec![0; n];
        for (pos, &row) in order.iter().enumerate() {
            assignments[row] = pos % k;
        }
        Ok(CVPlan { k, assignments, seed })
    }

    pub fn fold_indices(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthScore {
    pub width: f64,
    /// Held-out RMS error (regression) or misclassification rate
    /// (classification), averaged over folds.
    pub mean_score: f64,
}

/// Grid-search the Gaussian kernel width by k-fold cross-validation.
/// Ties (including duplicate widths) resolve toward the smallest width.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate_width(
    dataset: &Dataset,
    task: TaskKind,
    widths: &[f64],
    k: usize,
    seed: u64,
    convention: GaussianConvention,
    hyperprior: &HyperpriorConfig,
    config: &FitConfig,
) -> Result<(f64, Vec<WidthScore>)> {
    if widths.is_empty() {
        return Err(Error::InvalidInput("width grid is empty".into()));
    }
    let plan = CVPlan::new(dataset.len(), k, seed)?;
    let mut scores = Vec::with_capacity(widths.len());
    for &width in widths {
        let mut kernel = KernelSpec::gaussian(width);
        kernel.convention = convention;
        let mut total = 0.0;
        for fold in 0..k {
            let (train, test) = plan.fold_indices(fold);
            let xs: Vec<Vec<f64>> = train.iter().map(|&i| dataset.x_rows[i].clone()).collect();
            let ts: Vec<f64> = train.iter().map(|&i| dataset.targets[i]).collect();
            let ctx = |e: Error| e.with_context(&format!("width {width}, fold {fold}"));
            total += match task {
                TaskKind::Regression => {
                    let (model, _) =
                        regression::fit(&xs, &ts, &kernel, hyperprior, config).map_err(ctx)?;
                    let sq_sum: f64 = test
                        .iter()
                        .map(|&i| {
                            let (mean, _) = regression::predict(&model, &dataset.x_rows[i])?;
                            Ok((mean - dataset.targets[i]).powi(2))
                        })
                        .sum::<Result<f64>>()
                        .map_err(ctx)?;
                    (sq_sum / test.len() as f64).sqrt()
                }
                TaskKind::Classification => {
                    let (model, _) =
                        classification::fit(&xs, &ts, &kernel, hyperprior, config).map_err(ctx)?;
                    let wrong: usize = test
                        .iter()
                        .map(|&i| {
                            let label = classification::predict_label(
                                &model,
                                &dataset.x_rows[i],
                                classification::PredictMethod::Mackay,
                            )?;
                            Ok(usize::from(label != dataset.targets[i]))
                        })
                        .sum::<Result<usize>>()
                        .map_err(ctx)?;
                    wrong as f64 / test.len() as f64
                }
            };
        }
        scores.push(WidthScore { width, mean_score: total / k as f64 });
    }
    let best = scores
        .iter()
        .min_by(|a, b| {
            (a.mean_score, a.width)
                .partial_cmp(&(b.mean_score, b.width))
                .expect("scores are finite")
        })
        .expect("non-empty grid");
    Ok((best.width, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sinc_handles_the_origin() {
        assert_eq!(sinc(0.0), 1.0);
        assert_abs_diff_eq!(sinc(1e-9), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sinc(std::f64::consts::PI), 0.0, epsilon = 1e-15);
        for i in 0..200 {
            let x = -10.0 + 0.1 * f64::from(i);
            assert!(sinc(x).abs() <= 1.0);
            assert_eq!(sinc(x), sinc(-x));
        }
    }

    #[test]
    fn gen_sinc_basics() {
        let noiseless = gen_sinc(40, 0.0, 3, Spacing::UniformRandom).unwrap();
        for (x, t) in noiseless.x_rows.iter().zip(&noiseless.targets) {
            assert_eq!(*t, sinc(x[0]));
            assert!(x[0] > -10.0 && x[0] < 10.0);
        }
        let a = gen_sinc(50, 0.1, 7, Spacing::UniformRandom).unwrap();
        let b = gen_sinc(50, 0.1, 7, Spacing::UniformRandom).unwrap();
        assert_eq!(a, b);

        // residual sample standard deviation is in the chi-square band
        let resid: Vec<f64> =
            a.x_rows.iter().zip(&a.targets).map(|(x, t)| t - sinc(x[0])).collect();
        let mean = resid.iter().sum::<f64>() / 50.0;
        let sd = (resid.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / 49.0).sqrt();
        assert!((0.07..=0.13).contains(&sd), "sample sd {sd}");
    }

    #[test]
    fn gen_sinc_equispaced_hits_zero_for_odd_n() {
        let d = gen_sinc(51, 0.0, 0, Spacing::Equispaced).unwrap();
        let mid = &d.x_rows[25];
        assert_abs_diff_eq!(mid[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.targets[25], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gen_sinc_rejects_bad_params() {
        assert!(gen_sinc(1, 0.1, 0, Spacing::UniformRandom).is_err());
        assert!(gen_sinc(10, -0.1, 0, Spacing::UniformRandom).is_err());
    }

    #[test]
    fn two_class_balance_and_determinism() {
        let d = gen_two_class(100, 5).unwrap();
        assert_eq!(d.len(), 100);
        let ones = d.targets.iter().filter(|&&t| t == 1.0).count();
        assert_eq!(ones, 50);
        assert_eq!(d, gen_two_class(100, 5).unwrap());
        assert!(gen_two_class(99, 0).is_err());
        assert!(gen_two_class(2, 0).is_err());
    }

    #[test]
    fn bayes_rule_matches_numeric_error_on_large_sample() {
        let mixture = MixtureParams::default();
        let bayes = mixture.bayes_error();
        // value computed independently by midpoint quadrature in a
        // separate implementation of this layout
        assert_abs_diff_eq!(bayes, 0.1807, epsilon = 5e-4);

        let d = gen_two_class_with(100_000, 11, &mixture).unwrap();
        let wrong = d
            .x_rows
            .iter()
            .zip(&d.targets)
            .filter(|(x, &t)| mixture.bayes_classify(x) != t)
            .count();
        let empirical = wrong as f64 / d.len() as f64;
        assert!(
            (empirical - bayes).abs() < 0.01,
            "empirical {empirical} vs quadrature {bayes}"
        );
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sinc.csv");
        let d = gen_sinc(17, 0.1, 2, Spacing::UniformRandom).unwrap();
        d.write_csv(&path).unwrap();
        let schema = CsvSchema { target_col: None, has_header: true, task: TaskKind::Regression };
        let loaded = load_csv(&path, &schema).unwrap();
        assert_eq!(loaded.x_rows, d.x_rows);
        assert_eq!(loaded.targets, d.targets);
        // sidecar provenance came back too
        assert_eq!(loaded.provenance, d.provenance);
    }

    #[test]
    fn csv_errors_name_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,t\n1.0,2.0\noops,3.0\n").unwrap();
        let schema = CsvSchema { target_col: None, has_header: true, task: TaskKind::Regression };
        let err = load_csv(&path, &schema).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");

        std::fs::write(&path, "x1,t\n1.0,2.0\n3.0\n").unwrap();
        let err = load_csv(&path, &schema).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");

        std::fs::write(&path, "x1,t\n1.0,0.0\n2.0,0.5\n").unwrap();
        let cls = CsvSchema { task: TaskKind::Classification, ..schema };
        let err = load_csv(&path, &cls).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("0.5"), "{err}");
    }

    #[test]
    fn csv_well_formed_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ok.csv");
        std::fs::write(&path, "a,b,t\n1,2,3\n4,5,6\n7,8,9\n").unwrap();
        let schema = CsvSchema { target_col: None, has_header: true, task: TaskKind::Regression };
        let d = load_csv(&path, &schema).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.targets, vec![3.0, 6.0, 9.0]);
        // target column override
        let first = CsvSchema { target_col: Some(0), ..schema };
        let d = load_csv(&path, &first).unwrap();
        assert_eq!(d.targets, vec![1.0, 4.0, 7.0]);
        assert_eq!(d.x_rows[0], vec![2.0, 3.0]);
    }

    #[test]
    fn cv_plan_partitions_all_rows() {
        let plan = CVPlan::new(23, 5, 9).unwrap();
        assert_eq!(plan.assignments.len(), 23);
        let mut seen = [0usize; 5];
        for &f in &plan.assignments {
            seen[f] += 1;
        }
        assert!(seen.iter().all(|&c| c >= 4));
        for fold in 0..5 {
            let (train, test) = plan.fold_indices(fold);
            assert_eq!(train.len() + test.len(), 23);
            assert!(train.iter().all(|i| !test.contains(i)));
        }
        assert_eq!(plan, CVPlan::new(23, 5, 9).unwrap());
        assert!(CVPlan::new(3, 5, 0).is_err());
        assert!(CVPlan::new(10, 1, 0).is_err());
    }

    #[test]
    fn cv_single_width_is_selected_trivially() {
        let d = gen_sinc(25, 0.1, 1, Spacing::UniformRandom).unwrap();
        let (best, table) = cross_validate_width(
            &d,
            TaskKind::Regression,
            &[2.0],
            5,
            0,
            GaussianConvention::WidthSq,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        assert_eq!(best, 2.0);
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn cv_duplicate_width_ties_resolve_smallest() {
        let d = gen_sinc(20, 0.1, 4, Spacing::UniformRandom).unwrap();
        let (best, table) = cross_validate_width(
            &d,
            TaskKind::Regression,
            &[3.0, 3.0, 5.0],
            4,
            0,
            GaussianConvention::WidthSq,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        assert_eq!(table[0].mean_score, table[1].mean_score);
        assert!(best == 3.0 || table[2].mean_score < table[0].mean_score);
    }

    #[test]
    fn cv_winner_is_no_worse_than_every_candidate() {
        let d = gen_sinc(30, 0.1, 6, Spacing::UniformRandom).unwrap();
        let widths = [1.0, 2.0, 3.0, 5.0];
        let (best, table) = cross_validate_width(
            &d,
            TaskKind::Regression,
            &widths,
            5,
            0,
            GaussianConvention::WidthSq,
            &HyperpriorConfig::default(),
            &FitConfig::default(),
        )
        .unwrap();
        let best_score =
            table.iter().find(|s| s.width == best).map(|s| s.mean_score).unwrap();
        for s in &table {
            assert!(best_score <= s.mean_score);
        }
    }
}
