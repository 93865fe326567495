use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use nbcs::approx::{approximate, approximate_to_tolerance, builtin_pentagon, ApproxConfig, ApproxResult, MAX_STAGES};
use nbcs::experiment::{bench_uniform, run_trial, TrialConfig, BENCH_HEADER, REPORT_HEADER};
use nbcs::io::{parse_libsvm, read_csv, read_libsvm, to_libsvm_string, LibsvmData};
use nbcs::learner::{generate_polytope_dataset, generate_xor, CvConfig, FitParams, LabeledDataset, Strategy};
use nbcs::model::{load_model, save_model};
use nbcs::svg::{approx_svg, model_svg};
use nbcs::{NbcsError, Polygon2D};

#[derive(Parser)]
#[command(name = "nbcs", version, about = "Nested barycentric classifiers and polygon approximation")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "NBCS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train with random train/test splits and write a model and report.
    Train(TrainArgs),
    /// Classify points with a saved model.
    Predict(PredictArgs),
    /// Approximate a convex polygon and write per-stage SVGs and metrics.
    Approx(ApproxArgs),
    /// Generate a synthetic dataset in LibSVM format.
    Generate(GenerateArgs),
    /// Time uniform training over a grid of sizes.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Libsvm,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Uniform,
    Adaptive,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Uniform => Strategy::Uniform,
            StrategyArg::Adaptive => Strategy::Adaptive,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled input file.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "libsvm")]
    format: Format,
    #[arg(long, value_enum, default_value = "adaptive")]
    strategy: StrategyArg,
    /// Stage count (uniform) or stage cap (adaptive).
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    c: f64,
    /// Select C and q by 5-fold cross-validation on each training part.
    #[arg(long)]
    cv: bool,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of rows used for training in each trial.
    #[arg(long, alias = "splits", default_value_t = 0.7)]
    split: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Skip per-feature standardization.
    #[arg(long)]
    raw_features: bool,
    /// Adaptive skip rule (default max(2, 0.5% of n)).
    #[arg(long)]
    min_misclassified: Option<usize>,
    /// Model of the first trial.
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    /// CSV report, one row per trial (stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Held-out rows of the first trial, in LibSVM format.
    #[arg(long)]
    test_out: Option<PathBuf>,
    /// Per-trial wall-clock seconds as CSV.
    #[arg(long)]
    timings: Option<PathBuf>,
    /// Decision-region SVG of the first trial's model (2-D inputs only).
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    input: PathBuf,
    #[arg(long, value_enum, default_value = "libsvm")]
    format: Format,
    /// Predicted labels, one per line (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long, default_value_t = 4, conflicts_with = "epsilon")]
    stages: usize,
    /// Run until the excess-area ratio drops below this value.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = MAX_STAGES)]
    max_stages: usize,
    /// Target polygon as `x,y;x,y;...` (default: built-in pentagon).
    #[arg(long)]
    polygon: Option<String>,
    #[arg(long, default_value = "approx-out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Polytope,
    Xor,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "polytope")]
    kind: Kind,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 5)]
    halfspaces: usize,
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "10000,20000,40000")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    d: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Numerical(m) => m,
        }
    }
}

impl From<NbcsError> for CliError {
    fn from(e: NbcsError) -> Self {
        let msg = e.to_string();
        match e {
            NbcsError::InvalidParameter(_) | NbcsError::BoundDomain { .. } => Self::Usage(msg),
            NbcsError::DegenerateSimplex { .. }
            | NbcsError::NotInterior { .. }
            | NbcsError::RankDeficient
            | NbcsError::ContainmentViolated { .. } => Self::Numerical(msg),
            _ => Self::Data(msg),
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Approx(a) => approx(a),
        Command::Generate(a) => generate(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn read_input(path: &Path, format: Format) -> CliResult<LibsvmData> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let data = match format {
        Format::Libsvm => read_libsvm(BufReader::new(file)),
        Format::Csv => read_csv(file),
    };
    data.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Data(e.to_string())),
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().replace(',', "_"))
}

fn train(a: TrainArgs) -> CliResult<()> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(a.split > 0.0 && a.split <= 1.0) {
        return Err(CliError::Usage(format!("--split must be in (0, 1], got {}", a.split)));
    }
    let raw = read_input(&a.input, a.format)?;
    let data = raw.to_dataset(None)?;
    if data.is_empty() {
        return Err(CliError::Data(format!("{}: no rows", a.input.display())));
    }
    let cfg = TrialConfig {
        strategy: a.strategy.into(),
        params: FitParams {
            c: a.c,
            q: a.q,
            epochs: a.epochs,
            standardize: !a.raw_features,
            min_misclassified: a.min_misclassified,
            ..FitParams::default()
        },
        cv: a.cv.then(|| CvConfig { folds: a.folds, ..CvConfig::default() }),
        train_fraction: a.split,
        ..TrialConfig::default()
    };
    let outcomes: Vec<_> = (0..a.trials)
        .into_par_iter()
        .map(|t| run_trial(&data, &cfg, t, a.seed.wrapping_add(t as u64)))
        .collect::<Result<_, _>>()?;

    let name = dataset_name(&a.input);
    let mut report = format!("dataset,n,d,{REPORT_HEADER}\n");
    let mut timings = String::from("trial,seed,seconds\n");
    for o in &outcomes {
        report.push_str(&format!("{name},{},{},{}\n", data.len(), data.dim(), o.report.csv_row()));
        timings.push_str(&format!("{},{},{:.6}\n", o.report.trial, o.report.seed, o.report.seconds));
    }
    write_text(a.report.as_deref(), &report)?;
    if let Some(p) = &a.timings {
        write_text(Some(p), &timings)?;
    }

    let first = &outcomes[0];
    let file = File::create(&a.model).map_err(|e| io_err(&a.model, e))?;
    save_model(&first.model, BufWriter::new(file))?;
    if let Some(p) = &a.test_out {
        let held_out = data.subset(&first.test_indices);
        write_text(Some(p), &to_libsvm_string(&LibsvmData::from_dataset(&held_out)))?;
    }
    if let Some(p) = &a.svg {
        write_text(Some(p), &model_svg(&first.model, Some(&data), 150)?)?;
    }
    let (which, accs): (&str, Vec<f64>) = if first.report.n_test > 0 {
        ("test", outcomes.iter().map(|o| o.report.test_accuracy).collect())
    } else {
        ("training", outcomes.iter().map(|o| o.report.train_accuracy).collect())
    };
    let n = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / n;
    let sd = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    eprintln!("{} trial(s): mean {which} accuracy {mean:.4} (sd {sd:.4})", outcomes.len());
    Ok(())
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let file = File::open(&a.model).map_err(|e| io_err(&a.model, e))?;
    let model = load_model(BufReader::new(file))?;
    let raw = read_input(&a.input, a.format)?;
    let points = raw.dense_points(Some(model.dim()))?;
    let predictions: Vec<i64> = points.par_iter().map(|x| model.predict(x)).collect();
    let mut out = String::new();
    for p in &predictions {
        out.push_str(&format!("{p}\n"));
    }
    write_text(a.output.as_deref(), &out)?;
    if raw.has_labels() {
        let labels = raw.to_dataset(Some(model.dim()))?.labels;
        let correct = predictions.iter().zip(&labels).filter(|(p, l)| p == l).count();
        eprintln!("accuracy {} ({correct}/{})", correct as f64 / labels.len() as f64, labels.len());
    }
    Ok(())
}

fn parse_polygon(spec: &str) -> CliResult<Polygon2D> {
    let pts = spec
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let mut it = pair.split(',').map(|v| v.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => Ok([x, y]),
                _ => Err(CliError::Usage(format!("invalid polygon vertex `{pair}`"))),
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    Polygon2D::new(pts).map_err(|e| CliError::Usage(e.to_string()))
}

fn approx(a: ApproxArgs) -> CliResult<()> {
    let target = match &a.polygon {
        Some(s) => parse_polygon(s)?,
        None => builtin_pentagon(),
    };
    let result: ApproxResult = match a.epsilon {
        Some(eps) => approximate_to_tolerance(&target, eps, a.max_stages)?,
        None => approximate(&ApproxConfig { stages: a.stages, max_stages: a.max_stages, target })?,
    };
    fs::create_dir_all(&a.out_dir).map_err(|e| io_err(&a.out_dir, e))?;
    let last = result.stages.len() - 1;
    let panels: Vec<usize> = if last == 0 { vec![0] } else { (1..=last).collect() };
    for s in panels {
        let path = a.out_dir.join(format!("stage_{s}.svg"));
        write_text(Some(&path), &approx_svg(&result, s)?)?;
    }
    let csv = a.out_dir.join("metrics.csv");
    write_text(Some(&csv), &result.metrics_csv())?;
    let m = result.final_metrics();
    eprintln!(
        "stage {}: {} cells, excess area ratio {:.5}, target contained: {}",
        m.stage,
        m.leaves,
        m.excess_ratio,
        m.contains_target()
    );
    Ok(())
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let data: LabeledDataset = match a.kind {
        Kind::Polytope => {
            let p = generate_polytope_dataset(a.n, a.d, a.halfspaces, a.margin, a.seed)?;
            eprintln!("kept {} points, discarded {}", p.data.len(), p.discarded);
            p.data
        }
        Kind::Xor => generate_xor(a.n.div_ceil(4), 0.25, a.seed),
    };
    let header = match a.kind {
        Kind::Polytope => format!(
            "# polytope n={} d={} halfspaces={} margin={} seed={}\n",
            a.n, a.d, a.halfspaces, a.margin, a.seed
        ),
        Kind::Xor => format!("# xor per_cluster={} seed={}\n", a.n.div_ceil(4), a.seed),
    };
    let body = to_libsvm_string(&LibsvmData::from_dataset(&data));
    // sanity: the output must parse back
    debug_assert!(parse_libsvm(&body).is_ok());
    write_text(a.output.as_deref(), &(header + &body))
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let mut out = format!("{BENCH_HEADER}\n");
    for &d in &a.d {
        for &n in &a.n {
            let r = bench_uniform(n, d, a.q, a.epochs, a.repeats, a.seed)?;
            eprintln!("n={n} d={d}: {:.4}s", r.median_seconds);
            out.push_str(&r.csv_row());
            out.push('\n');
        }
    }
    write_text(a.output.as_deref(), &out)
}
