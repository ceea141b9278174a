//! Command-line front end: dataset generation, training, prediction,
//! evaluation, cross-validation, and plot-data emission.
//!
//! Exit codes: 0 success (and converged fits), 1 usage error, 2 data
//! error, 3 numerical failure, 4 fit hit max_iter without converging.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vrvm::classification::{self, PredictMethod};
use vrvm::data::{self, CsvSchema, Spacing, TaskKind};
use vrvm::error::Error;
use vrvm::fit::{FitConfig, FitReport, HyperpriorConfig};
use vrvm::kernel::{GaussianConvention, KernelKind, KernelSpec};
use vrvm::model_io::{self, ModelFile, ModelMeta, TrainedModel};
use vrvm::regression;
use vrvm::special;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "vrvm", version, about = "Variational relevance vector machine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (CSV plus a .meta.json provenance sidecar)
    #[command(subcommand)]
    Gen(GenCommand),
    /// Train a model and write the model and report files
    Fit(FitArgs),
    /// Write per-row predictions for a dataset
    Predict(PredictArgs),
    /// Print evaluation metrics as name=value lines
    Eval(EvalArgs),
    /// Choose the Gaussian kernel width by k-fold cross-validation
    Cv(CvArgs),
    /// Emit plot-ready CSV data
    #[command(subcommand)]
    Plotdata(PlotCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Regress,
    Classify,
}

impl TaskArg {
    fn kind(self) -> TaskKind {
        match self {
            TaskArg::Regress => TaskKind::Regression,
            TaskArg::Classify => TaskKind::Classification,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    UniformRandom,
    Equispaced,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    /// exp(-d^2 / r^2)
    WidthSq,
    /// exp(-d^2 / (2 r^2))
    TwiceWidthSq,
}

impl ConventionArg {
    fn convention(self) -> GaussianConvention {
        match self {
            ConventionArg::WidthSq => GaussianConvention::WidthSq,
            ConventionArg::TwiceWidthSq => GaussianConvention::TwiceWidthSq,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Polynomial,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mackay,
    MeanPlugin,
}

impl MethodArg {
    fn method(self) -> PredictMethod {
        match self {
            MethodArg::Mackay => PredictMethod::Mackay,
            MethodArg::MeanPlugin => PredictMethod::MeanPlugin,
        }
    }
}

#[derive(Subcommand)]
enum GenCommand {
    /// Noisy sinc(x) = sin(x)/x samples on (-10, 10)
    Sinc {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SpacingArg::UniformRandom)]
        spacing: SpacingArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-dimensional two-class Gaussian-mixture data
    Twoclass {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Input dataset (CSV)
    #[arg(long)]
    data: PathBuf,
    /// The file has no header row
    #[arg(long)]
    no_header: bool,
    /// Zero-based target column (default: last column)
    #[arg(long)]
    target_col: Option<usize>,
}

impl DataArgs {
    fn schema(&self, task: TaskKind) -> CsvSchema {
        CsvSchema { target_col: self.target_col, has_header: !self.no_header, task }
    }
}

#[derive(Args, Clone)]
struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    kernel: KernelArg,
    /// Gaussian width r
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Polynomial degree
    #[arg(long, default_value_t = 3)]
    degree: u32,
    /// Gaussian exponent normalization
    #[arg(long, value_enum, default_value_t = ConventionArg::WidthSq)]
    convention: ConventionArg,
    /// Drop the bias column
    #[arg(long)]
    no_bias: bool,
}

impl KernelArgs {
    fn spec(&self) -> KernelSpec {
        let kind = match self.kernel {
            KernelArg::Gaussian => KernelKind::Gaussian { width: self.width },
            KernelArg::Polynomial => KernelKind::Polynomial { degree: self.degree },
            KernelArg::Linear => KernelKind::Linear,
        };
        KernelSpec { kind, convention: self.convention.convention(), include_bias: !self.no_bias }
    }
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Gamma shape for the weight precisions
    #[arg(long, default_value_t = 1e-6)]
    a: f64,
    /// Gamma rate for the weight precisions
    #[arg(long, default_value_t = 1e-6)]
    b: f64,
    /// Gamma shape for the noise precision
    #[arg(long, default_value_t = 1e-6)]
    c: f64,
    /// Gamma rate for the noise precision
    #[arg(long, default_value_t = 1e-6)]
    d: f64,
    /// Relative bound-change stopping tolerance
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-3)]
    relevance_threshold: f64,
    /// Standardize features before kernel evaluation
    #[arg(long)]
    standardize: bool,
    /// Recorded in the model file; fitting itself is deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ConfigArgs {
    fn hyperprior(&self) -> HyperpriorConfig {
        HyperpriorConfig { a: self.a, b: self.b, c: self.c, d: self.d }
    }

    fn fit_config(&self) -> FitConfig {
        FitConfig {
            tolerance: self.tol,
            max_iter: self.max_iter,
            relevance_threshold: self.relevance_threshold,
            standardize: self.standardize,
            ..FitConfig::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(value_enum)]
    task: TaskArg,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output model file
    #[arg(long)]
    model: PathBuf,
    /// Output report file (default: <model>.report)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// The data file holds features only, no target column
    #[arg(long)]
    no_target: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Mackay)]
    method: MethodArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Mackay)]
    method: MethodArg,
}

#[derive(Args)]
struct CvArgs {
    #[arg(value_enum)]
    task: TaskArg,
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated Gaussian width grid
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3,5,8")]
    widths: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value_t = ConventionArg::WidthSq)]
    convention: ConventionArg,
    /// Refit the winning width on the full data and save the model here
    #[arg(long)]
    out_model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PlotCommand {
    /// Bound trajectory from a fit report: sweep,elbo
    Elbo {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predictive curve of a 1-D regression model: x,mean,sd
    /// (relevance-vector markers go to <out stem>.markers.csv)
    FitCurve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        grid_min: f64,
        #[arg(long, default_value_t = 10.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior mean weights, bias first: index,weight
    Weights {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior means of the precisions: index,alpha_mean
    AlphaHist {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hierarchical weight marginal vs the Laplace curve: w,marginal,laplace
    MarginalPrior {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        w_min: f64,
        #[arg(long, default_value_t = 5.0)]
        w_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) | Error::Domain(_) => EXIT_USAGE,
        Error::Data(_) | Error::ModelFormat(_) | Error::Io(_) | Error::Dimension(_) => EXIT_DATA,
        Error::Numerical(_) | Error::Inconsistency(_) | Error::FitFailed { .. } => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::FitFailed { trace, .. } = &e {
                for (i, l) in trace.iter().enumerate() {
                    eprintln!("elbo.{i}={l:.16e}");
                }
            }
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Gen(cmd) => cmd_gen(cmd),
        Command::Fit(args) => cmd_fit(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Plotdata(cmd) => cmd_plotdata(cmd),
    }
}

fn cmd_gen(cmd: GenCommand) -> Result<u8, Error> {
    match cmd {
        GenCommand::Sinc { n, noise, seed, spacing, out } => {
            let spacing = match spacing {
                SpacingArg::UniformRandom => Spacing::UniformRandom,
                SpacingArg::Equispaced => Spacing::Equispaced,
            };
            let dataset = data::gen_sinc(n, noise, seed, spacing)?;
            dataset.write_csv(&out)?;
            println!("rows={n}");
            println!("path={}", out.display());
        }
        GenCommand::Twoclass { n, seed, out } => {
            let dataset = data::gen_two_class(n, seed)?;
            if let Some(data::Provenance::TwoClass { bayes_error, .. }) = &dataset.provenance {
                println!("bayes_error={bayes_error:.6}");
            }
            dataset.write_csv(&out)?;
            println!("rows={n}");
            println!("path={}", out.display());
        }
    }
    Ok(0)
}

fn report_text(task: TaskKind, report: &FitReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "task={}", task.as_str());
    let _ = writeln!(out, "converged={}", report.converged);
    let _ = writeln!(out, "iterations={}", report.n_iterations);
    if let Some(l) = report.elbo_trace.last() {
        let _ = writeln!(out, "final_elbo={l:.16e}");
    }
    let _ = writeln!(out, "relevance_count={}", report.relevance_count());
    let indices: Vec<String> =
        report.relevance_indices().iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "relevance_indices={}", indices.join(","));
    if let Some(noise) = report.noise_std_estimate {
        let _ = writeln!(out, "noise_estimate={noise:.16e}");
    }
    for (i, l) in report.elbo_trace.iter().enumerate() {
        let _ = writeln!(out, "elbo.{i}={l:.16e}");
    }
    out
}

fn cmd_fit(args: FitArgs) -> Result<u8, Error> {
    let task = args.task.kind();
    let dataset = data::load_csv(&args.data.data, &args.data.schema(task))?;
    let kernel = args.kernel.spec();
    let hyperprior = args.config.hyperprior();
    let config = args.config.fit_config();

    let (model, report) = match task {
        TaskKind::Regression => {
            let (m, r) =
                regression::fit(&dataset.x_rows, &dataset.targets, &kernel, &hyperprior, &config)?;
            (TrainedModel::Regression(m), r)
        }
        TaskKind::Classification => {
            let (m, r) = classification::fit(
                &dataset.x_rows,
                &dataset.targets,
                &kernel,
                &hyperprior,
                &config,
            )?;
            (TrainedModel::Classification(m), r)
        }
    };

    let meta = ModelMeta {
        iterations: report.n_iterations,
        converged: report.converged,
        final_elbo: report.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY),
        seed: args.config.seed,
        tolerance: config.tolerance,
        max_iter: config.max_iter,
        relevance_threshold: config.relevance_threshold,
    };
    let file = ModelFile { model, meta };
    model_io::save_model(&file, &args.model)?;
    let report_path = args.report.unwrap_or_else(|| args.model.with_extension("report"));
    std::fs::write(&report_path, report_text(task, &report))?;

    println!("model={}", args.model.display());
    println!("report={}", report_path.display());
    println!("converged={}", report.converged);
    println!("iterations={}", report.n_iterations);
    println!("relevance_count={}", report.relevance_count());
    if let Some(noise) = report.noise_std_estimate {
        println!("noise_estimate={noise:.6e}");
    }
    Ok(if report.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn cmd_predict(args: PredictArgs) -> Result<u8, Error> {
    let file = model_io::load_model(&args.model)?;
    let rows = if args.no_target {
        data::load_csv_features(&args.data.data, !args.data.no_header)?
    } else {
        // The target column is dropped for prediction, so label validation
        // does not apply; read with the lenient regression schema.
        let schema = args.data.schema(TaskKind::Regression);
        data::load_csv(&args.data.data, &schema)?.x_rows
    };
    let mut out = String::new();
    match &file.model {
        TrainedModel::Regression(model) => {
            out.push_str("mean,variance\n");
            for row in &rows {
                let (mean, var) = regression::predict(model, row)?;
                let _ = writeln!(out, "{mean:.16e},{var:.16e}");
            }
        }
        TrainedModel::Classification(model) => {
            out.push_str("probability,label\n");
            for row in &rows {
                let p = classification::predict_proba(model, row, args.method.method())?;
                let label = u8::from(p >= 0.5);
                let _ = writeln!(out, "{p:.16e},{label}");
            }
        }
    }
    std::fs::write(&args.out, out)?;
    println!("rows={}", rows.len());
    println!("path={}", args.out.display());
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<u8, Error> {
    let file = model_io::load_model(&args.model)?;
    let task = file.model.task();
    let dataset = data::load_csv(&args.data.data, &args.data.schema(task))?;
    let threshold = file.meta.relevance_threshold;
    match &file.model {
        TrainedModel::Regression(model) => {
            let mut sq = 0.0;
            let mut sq_true = 0.0;
            let mut have_true = dataset.provenance.is_some();
            for (row, target) in dataset.x_rows.iter().zip(&dataset.targets) {
                let (mean, _) = regression::predict(model, row)?;
                sq += (mean - target) * (mean - target);
                match dataset.provenance.as_ref().and_then(|p| p.true_value(row)) {
                    Some(truth) => sq_true += (mean - truth) * (mean - truth),
                    None => have_true = false,
                }
            }
            let n = dataset.len() as f64;
            println!("task=regression");
            println!("rms={:.16e}", (sq / n).sqrt());
            if have_true {
                println!("rms_vs_true={:.16e}", (sq_true / n).sqrt());
            }
            let (_, count) = regression::relevance_vectors(model, threshold);
            println!("relevance_count={count}");
            println!("noise_estimate={:.16e}", model.noise_std_estimate());
        }
        TrainedModel::Classification(model) => {
            let mut wrong = 0usize;
            for (row, target) in dataset.x_rows.iter().zip(&dataset.targets) {
                let p = classification::predict_proba(model, row, args.method.method())?;
                let label = f64::from(p >= 0.5);
                wrong += usize::from(label != *target);
            }
            println!("task=classification");
            println!("misclassification_pct={:.16e}", 100.0 * wrong as f64 / dataset.len() as f64);
            let (_, count) = classification::relevance_vectors(model, threshold);
            println!("relevance_count={count}");
        }
    }
    Ok(0)
}

fn cmd_cv(args: CvArgs) -> Result<u8, Error> {
    let task = args.task.kind();
    let dataset = data::load_csv(&args.data.data, &args.data.schema(task))?;
    let hyperprior = args.config.hyperprior();
    let config = args.config.fit_config();
    let convention = args.convention.convention();
    let (best, table) = data::cross_validate_width(
        &dataset,
        task,
        &args.widths,
        args.k,
        args.config.seed,
        convention,
        &hyperprior,
        &config,
    )?;
    println!("width,mean_score");
    for s in &table {
        println!("{},{:.16e}", s.width, s.mean_score);
    }
    println!("best_width={best}");

    if let Some(path) = args.out_model {
        let mut kernel = KernelSpec::gaussian(best);
        kernel.convention = convention;
        let (model, report) = match task {
            TaskKind::Regression => {
                let (m, r) = regression::fit(
                    &dataset.x_rows,
                    &dataset.targets,
                    &kernel,
                    &hyperprior,
                    &config,
                )?;
                (TrainedModel::Regression(m), r)
            }
            TaskKind::Classification => {
                let (m, r) = classification::fit(
                    &dataset.x_rows,
                    &dataset.targets,
                    &kernel,
                    &hyperprior,
                    &config,
                )?;
                (TrainedModel::Classification(m), r)
            }
        };
        let meta = ModelMeta {
            iterations: report.n_iterations,
            converged: report.converged,
            final_elbo: report.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY),
            seed: args.config.seed,
            tolerance: config.tolerance,
            max_iter: config.max_iter,
            relevance_threshold: config.relevance_threshold,
        };
        model_io::save_model(&ModelFile { model, meta }, &path)?;
        println!("model={}", path.display());
        if !report.converged {
            return Ok(EXIT_NOT_CONVERGED);
        }
    }
    Ok(0)
}

fn parse_report_trace(path: &Path) -> Result<Vec<f64>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut trace = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("elbo.") {
            if let Some((idx, value)) = rest.split_once('=') {
                let i: usize =
                    idx.parse().map_err(|_| Error::Data(format!("bad trace index '{idx}'")))?;
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::Data(format!("bad trace value '{value}'")))?;
                if i != trace.len() {
                    return Err(Error::Data(format!("trace index {i} out of order")));
                }
                trace.push(v);
            }
        }
    }
    if trace.is_empty() {
        return Err(Error::Data(format!("{}: no elbo.N lines found", path.display())));
    }
    Ok(trace)
}

fn cmd_plotdata(cmd: PlotCommand) -> Result<u8, Error> {
    match cmd {
        PlotCommand::Elbo { report, out } => {
            let trace = parse_report_trace(&report)?;
            let mut text = String::from("sweep,elbo\n");
            for (i, l) in trace.iter().enumerate() {
                let _ = writeln!(text, "{i},{l:.16e}");
            }
            std::fs::write(&out, text)?;
            println!("path={}", out.display());
        }
        PlotCommand::FitCurve { model, grid_min, grid_max, points, out } => {
            let file = model_io::load_model(&model)?;
            let TrainedModel::Regression(m) = &file.model else {
                return Err(Error::InvalidInput("fit-curve needs a regression model".into()));
            };
            if m.centres.first().map_or(0, Vec::len) != 1 {
                return Err(Error::InvalidInput("fit-curve is defined for 1-D inputs only".into()));
            }
            if points < 2 || grid_min >= grid_max {
                return Err(Error::InvalidInput("need points >= 2 and grid_min < grid_max".into()));
            }
            let mut text = String::from("x,mean,sd\n");
            for i in 0..points {
                let x = grid_min + (grid_max - grid_min) * i as f64 / (points - 1) as f64;
                let (mean, var) = regression::predict(m, &[x])?;
                let _ = writeln!(text, "{x:.16e},{mean:.16e},{:.16e}", var.sqrt());
            }
            std::fs::write(&out, text)?;
            let (indices, _) = regression::relevance_vectors(m, file.meta.relevance_threshold);
            let mut markers = String::from("index,x,weight\n");
            let offset = usize::from(m.kernel.include_bias);
            for idx in indices {
                let _ = writeln!(
                    markers,
                    "{idx},{:.16e},{:.16e}",
                    m.centres[idx][0],
                    m.posterior.mu_w[idx + offset]
                );
            }
            let markers_path = out.with_extension("markers.csv");
            std::fs::write(&markers_path, markers)?;
            println!("path={}", out.display());
            println!("markers={}", markers_path.display());
        }
        PlotCommand::Weights { model, out } => {
            let file = model_io::load_model(&model)?;
            let weights = match &file.model {
                TrainedModel::Regression(m) => &m.posterior.mu_w,
                TrainedModel::Classification(m) => &m.posterior.m,
            };
            let mut text = String::from("index,weight\n");
            for (i, w) in weights.iter().enumerate() {
                let _ = writeln!(text, "{i},{w:.16e}");
            }
            std::fs::write(&out, text)?;
            println!("path={}", out.display());
        }
        PlotCommand::AlphaHist { model, out } => {
            let file = model_io::load_model(&model)?;
            let (a_tilde, b_tilde) = match &file.model {
                TrainedModel::Regression(m) => (&m.posterior.a_tilde, &m.posterior.b_tilde),
                TrainedModel::Classification(m) => (&m.posterior.a_tilde, &m.posterior.b_tilde),
            };
            let mut text = String::from("index,alpha_mean\n");
            for i in 0..a_tilde.len() {
                let _ = writeln!(text, "{i},{:.16e}", a_tilde[i] / b_tilde[i]);
            }
            std::fs::write(&out, text)?;
            println!("path={}", out.display());
        }
        PlotCommand::MarginalPrior { a, b, lambda, w_min, w_max, points, out } => {
            if points < 2 || w_min >= w_max {
                return Err(Error::InvalidInput("need points >= 2 and w_min < w_max".into()));
            }
            let mut text = String::from("w,marginal_density,laplace_density\n");
            for i in 0..points {
                let w = w_min + (w_max - w_min) * i as f64 / (points - 1) as f64;
                let marginal = special::marginal_weight_log_density(w, a, b)?.exp();
                let laplace = special::laplace_log_density(w, lambda)?.exp();
                let _ = writeln!(text, "{w:.16e},{marginal:.16e},{laplace:.16e}");
            }
            std::fs::write(&out, text)?;
            println!("path={}", out.display());
        }
    }
    Ok(0)
}
