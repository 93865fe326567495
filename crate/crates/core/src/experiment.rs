//! Random-split trials and training-time benchmarks.

use std::time::Instant;

use crate::bounds::{margin_bound, vc_compression_bound};
use crate::error::Result;
use crate::learner::{
    cross_validate, fit, fit_uniform_with, generate_polytope_dataset, train_test_split, CvConfig, FitParams,
    LabeledDataset, Model, Strategy,
};

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub strategy: Strategy,
    pub params: FitParams,
    /// Grid search on the training part; `None` uses `params` as given.
    pub cv: Option<CvConfig>,
    pub train_fraction: f64,
    pub delta: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self { strategy: Strategy::Adaptive, params: FitParams::default(), cv: None, train_fraction: 0.7, delta: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub c: f64,
    pub q: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_accuracy: f64,
    /// NaN when the split leaves no test points.
    pub test_accuracy: f64,
    pub seconds: f64,
    pub leaves: usize,
    pub data_splits: usize,
    /// Binary models only (the weights rescaled to unit norm).
    pub margin_bound: Option<f64>,
    /// Binary models only, with the vertex count as VC dimension.
    pub vc_bound: Option<f64>,
}

/// Columns of [`TrialReport::csv_row`]. Wall time is left out so reports
/// are reproducible byte for byte.
pub const REPORT_HEADER: &str =
    "trial,seed,strategy,C,q,n_train,n_test,train_accuracy,test_accuracy,leaves,data_splits,margin_bound,vc_bound";

impl TrialReport {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.seed,
            self.strategy,
            self.c,
            self.q,
            self.n_train,
            self.n_test,
            self.train_accuracy,
            self.test_accuracy,
            self.leaves,
            self.data_splits,
            opt(self.margin_bound),
            opt(self.vc_bound)
        )
    }
}

pub struct TrialOutcome {
    pub report: TrialReport,
    pub model: Model,
    pub test_indices: Vec<usize>,
}

/// One trial: split with `seed`, optionally cross-validate on the training
/// part, fit, and evaluate.
pub fn run_trial(data: &LabeledDataset, cfg: &TrialConfig, trial: usize, seed: u64) -> Result<TrialOutcome> {
    let start = Instant::now();
    let (train_idx, test_idx) = train_test_split(data.len(), cfg.train_fraction, seed);
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let mut params = FitParams { seed, ..cfg.params.clone() };
    if let Some(cv) = &cfg.cv {
        let res = cross_validate(&train, &CvConfig { seed, ..cv.clone() }, cfg.strategy, &params)?;
        params.c = res.best_c;
        params.q = res.best_q;
    }
    let model = fit(&train, cfg.strategy, &params)?;
    let seconds = start.elapsed().as_secs_f64();
    let train_accuracy = model.accuracy(&train);
    let (margin, vc) = binary_bounds(&model, &train, train_accuracy, cfg.delta);
    let report = TrialReport {
        trial,
        seed,
        strategy: cfg.strategy,
        c: params.c,
        q: params.q,
        n_train: train.len(),
        n_test: test.len(),
        train_accuracy,
        test_accuracy: if test.is_empty() { f64::NAN } else { model.accuracy(&test) },
        seconds,
        leaves: model.leaf_count(),
        data_splits: model.data_splits,
        margin_bound: margin,
        vc_bound: vc,
    };
    Ok(TrialOutcome { report, model, test_indices: test_idx })
}

fn binary_bounds(model: &Model, train: &LabeledDataset, train_accuracy: f64, delta: f64) -> (Option<f64>, Option<f64>) {
    if model.heads.len() != 1 {
        return (None, None);
    }
    let n = train.len() as u64;
    let k = model.data_splits as u64;
    let norm = model.weight_norms()[0];
    let margin = (norm > 0.0)
        .then(|| {
            let hinge: f64 = train
                .points
                .iter()
                .zip(&train.labels)
                .map(|(x, &l)| {
                    let y = if l == model.classes[1] { 1.0 } else { -1.0 };
                    (1.0 - y * model.decision_values(x)[0] / norm).max(0.0)
                })
                .sum();
            margin_bound(n, k, 1.0, hinge, delta).ok()
        })
        .flatten();
    let vc = vc_compression_bound(n, k, model.system.vertex_count() as u64, 1.0 - train_accuracy, delta).ok();
    (margin, vc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub epochs: usize,
    pub median_seconds: f64,
    pub runs: Vec<f64>,
}

pub const BENCH_HEADER: &str = "n,d,q,epochs,median_seconds";

impl BenchResult {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{:.6}", self.n, self.d, self.q, self.epochs, self.median_seconds)
    }
}

/// Median wall time of a uniform fit on synthetic polytope data, with a
/// fixed epoch count and no early stopping so the work is proportional to n.
pub fn bench_uniform(n: usize, d: usize, q: usize, epochs: usize, repeats: usize, seed: u64) -> Result<BenchResult> {
    let data = generate_polytope_dataset(n, d, 5, 0.0, seed)?.data;
    let params = FitParams { q, epochs, tolerance: 0.0, seed, ..FitParams::default() };
    let mut runs = Vec::with_capacity(repeats.max(1));
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let model = fit_uniform_with(&data, &params)?;
        runs.push(start.elapsed().as_secs_f64());
        std::hint::black_box(model);
    }
    let mut sorted = runs.clone();
    sorted.sort_by(f64::total_cmp);
    let median_seconds = sorted[sorted.len() / 2];
    Ok(BenchResult { n, d, q, epochs, median_seconds, runs })
}
