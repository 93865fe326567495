//! End-to-end classifiers on top of the nested system.
//!
//! - uniform: `q` stages, each splitting every non-empty leaf at its barycenter.
//! - adaptive: per stage, train, then split leaves holding enough misclassified
//!   points at the data point nearest the mean of those points.
//!
//! Inputs are mapped into the root simplex by an [`InputTransform`]
//! (optional per-feature standardization, then translate + uniform scale of
//! the data's bounding ball into the shrunken inscribed ball). All geometry
//! after that happens in this "model space".

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{NbcsError, Result};
use crate::geometry::distance;
use crate::svm::{self, SparseDataset, SvmConfig};
use crate::system::{Location, NestedSystem, Placement, SparseEmbedding, WeightVector, INTERIOR_THRESHOLD};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<i64>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<i64>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        Self::with_dim(points, labels, dim)
    }

    pub fn with_dim(points: Vec<Vec<f64>>, labels: Vec<i64>, dim: usize) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(NbcsError::InvalidParameter(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        for p in &points {
            if p.len() != dim {
                return Err(NbcsError::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(NbcsError::InvalidParameter("non-finite coordinate".into()));
            }
        }
        Ok(Self { points, labels, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<i64> {
        self.labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }
}

/// `x ↦ target + factor · (standardize(x) − center)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputTransform {
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
    pub center: Vec<f64>,
    pub factor: f64,
    pub target: Vec<f64>,
}

impl InputTransform {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let z = (v - self.mean[i]) * self.inv_std[i];
                self.target[i] + self.factor * (z - self.center[i])
            })
            .collect()
    }

    /// Inverse of [`apply`](Self::apply). Constant features map back to their mean.
    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, &v)| self.mean[i] + (self.center[i] + (v - self.target[i]) / self.factor) / self.inv_std[i])
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Inradius of the unit-side regular d-simplex, `1/√(2d(d+1))`.
pub fn regular_inradius(d: usize) -> f64 {
    1.0 / ((2 * d * (d + 1)) as f64).sqrt()
}

/// Translate + uniform scale placing the data's bounding ball (centroid,
/// max distance) inside the root's inscribed ball shrunk by `padding`.
pub fn fit_transform_to_simplex(data: &LabeledDataset, padding: f64) -> Result<InputTransform> {
    fit_input_transform(&data.points, padding, false)
}

pub fn fit_input_transform(points: &[Vec<f64>], padding: f64, standardize: bool) -> Result<InputTransform> {
    let Some(first) = points.first() else {
        return Err(NbcsError::EmptyDataset);
    };
    if !(padding > 0.0 && padding < 1.0) {
        return Err(NbcsError::InvalidParameter(format!("padding must be in (0, 1), got {padding}")));
    }
    let d = first.len();
    if d == 0 {
        return Err(NbcsError::ZeroDimension);
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    let mut inv_std = vec![1.0; d];
    if standardize {
        for p in points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v / n;
            }
        }
        for (i, s) in inv_std.iter_mut().enumerate() {
            let var = points.iter().map(|p| (p[i] - mean[i]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                *s = 1.0 / var.sqrt();
            }
        }
    }
    let z: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, v)| (v - mean[i]) * inv_std[i]).collect())
        .collect();
    let mut center = vec![0.0; d];
    for p in &z {
        for (c, v) in center.iter_mut().zip(p) {
            *c += v / n;
        }
    }
    let radius = z.iter().map(|p| distance(p, &center)).fold(0.0, f64::max);
    let (vertices, root) = crate::geometry::regular_simplex(d)?;
    let target = root.barycenter(&vertices);
    let factor = if radius > 0.0 { padding * regular_inradius(d) / radius } else { 1.0 };
    Ok(InputTransform { mean, inv_std, center, factor, target })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uniform,
    Adaptive,
}

impl std::str::FromStr for Strategy {
    type Err = NbcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uni" => Ok(Self::Uniform),
            "adaptive" | "adapt" => Ok(Self::Adaptive),
            other => Err(NbcsError::InvalidParameter(format!("unknown strategy `{other}`"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Adaptive => "adaptive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    pub c: f64,
    /// Stage count (uniform) or stage cap (adaptive).
    pub q: usize,
    pub epochs: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub padding: f64,
    pub standardize: bool,
    /// Adaptive skip rule; `None` means `max(2, ⌈0.5% of n⌉)`.
    pub min_misclassified: Option<usize>,
    pub positive_cost: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            q: 2,
            epochs: 50,
            tolerance: 1e-4,
            seed: 0,
            padding: 0.9,
            standardize: true,
            min_misclassified: None,
            positive_cost: 1.0,
        }
    }
}

impl FitParams {
    fn svm_config(&self, stage: usize, head: usize) -> SvmConfig {
        SvmConfig {
            c: self.c,
            epochs: self.epochs,
            seed: self
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((stage as u64) << 32)
                .wrapping_add(head as u64),
            tolerance: self.tolerance,
            positive_cost: self.positive_cost,
        }
    }
}

pub fn default_min_misclassified(n: usize) -> usize {
    2.max((0.005 * n as f64).ceil() as usize)
}

/// Per-stage training record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageRecord {
    pub stage: usize,
    pub leaves: usize,
    /// Summed SVM objective of the warm start (lifted previous weights).
    pub lifted_objective: Option<f64>,
    pub trained_objective: f64,
    pub training_errors: usize,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub system: NestedSystem,
    /// Empty: constant classifier. One head: binary, positive class is
    /// `classes[1]`. Otherwise one-vs-rest, one head per class.
    pub heads: Vec<WeightVector>,
    pub transform: InputTransform,
    pub classes: Vec<i64>,
    pub strategy: Strategy,
    /// Splitting stages actually performed.
    pub stages: usize,
    /// Data-derived split points (barycenter fallbacks excluded).
    pub data_splits: usize,
    pub history: Vec<StageRecord>,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.transform.dim()
    }

    /// Maps an input point into the root simplex, clamping toward the root
    /// barycenter when it lands outside.
    pub fn to_model_space(&self, x: &[f64]) -> Vec<f64> {
        let z = self.transform.apply(x);
        let root = self.system.simplex(self.system.root());
        root.clamp_toward_barycenter(self.system.vertices(), &z)
    }

    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        let z = self.to_model_space(x);
        let e = self
            .system
            .embed(&z)
            .expect("clamped points lie inside the root simplex");
        self.heads.iter().map(|w| w.evaluate(&e)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> i64 {
        let values = self.decision_values(x);
        self.class_from_values(&values)
    }

    fn class_from_values(&self, values: &[f64]) -> i64 {
        match values.len() {
            0 => self.classes[0],
            1 => self.classes[if values[0] >= 0.0 { 1 } else { 0 }],
            _ => {
                let mut best = 0;
                for (i, &v) in values.iter().enumerate() {
                    if v > values[best] {
                        best = i;
                    }
                }
                self.classes[best]
            }
        }
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let correct = data
            .points
            .iter()
            .zip(&data.labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        correct as f64 / data.len() as f64
    }

    pub fn leaf_count(&self) -> usize {
        self.system.leaf_count()
    }

    pub fn weight_norms(&self) -> Vec<f64> {
        self.heads.iter().map(|w| w.values().iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
    }
}

/// Data in model space plus class bookkeeping shared by both strategies.
struct Prepared {
    transform: InputTransform,
    points: Vec<Vec<f64>>,
    class_index: Vec<usize>,
    classes: Vec<i64>,
}

fn prepare(data: &LabeledDataset, params: &FitParams) -> Result<Prepared> {
    if data.is_empty() {
        return Err(NbcsError::EmptyDataset);
    }
    let transform = fit_input_transform(&data.points, params.padding, params.standardize)?;
    let points: Vec<Vec<f64>> = data.points.iter().map(|p| transform.apply(p)).collect();
    let classes = data.classes();
    let class_index = data
        .labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is in class table"))
        .collect();
    Ok(Prepared { transform, points, class_index, classes })
}

fn locate_all(sys: &NestedSystem, points: &[Vec<f64>]) -> Result<Vec<Location>> {
    par_map(points, |p| sys.locate(p)).into_iter().collect()
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Trains the one-vs-rest heads. Returns heads, summed objective, and the
/// summed objective of the warm start when one was given.
fn train_heads(
    rows: &[SparseEmbedding],
    class_index: &[usize],
    n_classes: usize,
    dim: usize,
    params: &FitParams,
    stage: usize,
    warm: Option<&[WeightVector]>,
) -> Result<(Vec<WeightVector>, f64, Option<f64>)> {
    let n_heads = match n_classes {
        0 | 1 => return Ok((Vec::new(), 0.0, None)),
        2 => 1,
        k => k,
    };
    let heads: Vec<usize> = (0..n_heads).collect();
    let results = par_map(&heads, |&h| -> Result<(WeightVector, f64, Option<f64>)> {
        let positive = if n_heads == 1 { 1 } else { h };
        let labels = class_index.iter().map(|&c| if c == positive { 1.0 } else { -1.0 }).collect();
        let data = SparseDataset { rows: rows.to_vec(), labels, dim };
        let init = warm.map(|w| w[h].values());
        let cfg = params.svm_config(stage, h);
        let lifted = init.map(|w| svm::hinge_objective(w, &data, cfg.c));
        let out = svm::train_from(&data, &cfg, init)?;
        Ok((WeightVector::from_values(out.weights), out.objective, lifted))
    });
    let mut ws = Vec::with_capacity(n_heads);
    let mut obj = 0.0;
    let mut lifted: Option<f64> = warm.map(|_| 0.0);
    for r in results {
        let (w, o, l) = r?;
        ws.push(w);
        obj += o;
        if let (Some(acc), Some(l)) = (lifted.as_mut(), l) {
            *acc += l;
        }
    }
    Ok((ws, obj, lifted))
}

fn predict_index(heads: &[WeightVector], e: &SparseEmbedding) -> usize {
    match heads.len() {
        0 => 0,
        1 => usize::from(heads[0].evaluate(e) >= 0.0),
        _ => {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (i, w) in heads.iter().enumerate() {
                let v = w.evaluate(e);
                if v > best_v {
                    best_v = v;
                    best = i;
                }
            }
            best
        }
    }
}

/// Uniform subdivision with `q` stages, skipping empty leaves.
pub fn build_uniform_system(points: &[Vec<f64>], d: usize, q: usize) -> Result<NestedSystem> {
    let mut sys = NestedSystem::regular(d)?;
    for _ in 0..q {
        let occupied: BTreeSet<_> = locate_all(&sys, points)?.into_iter().map(|l| l.leaf).collect();
        for leaf in occupied {
            sys.split_at_barycenter(leaf)?;
        }
    }
    Ok(sys)
}

pub fn fit_uniform(data: &LabeledDataset, q: usize, c: f64) -> Result<Model> {
    fit_uniform_with(data, &FitParams { q, c, ..FitParams::default() })
}

pub fn fit_uniform_with(data: &LabeledDataset, params: &FitParams) -> Result<Model> {
    let prep = prepare(data, params)?;
    let sys = build_uniform_system(&prep.points, data.dim(), params.q)?;
    finish_uniform(prep, sys, params)
}

fn finish_uniform(prep: Prepared, sys: NestedSystem, params: &FitParams) -> Result<Model> {
    let locs = locate_all(&sys, &prep.points)?;
    let rows: Vec<SparseEmbedding> = locs.iter().map(|l| sys.embedding_from_location(l)).collect();
    let (heads, obj, _) =
        train_heads(&rows, &prep.class_index, prep.classes.len(), sys.vertex_count(), params, 0, None)?;
    let errors = rows
        .iter()
        .zip(&prep.class_index)
        .filter(|(e, &c)| predict_index(&heads, e) != c)
        .count();
    let history = vec![StageRecord {
        stage: params.q,
        leaves: sys.leaf_count(),
        lifted_objective: None,
        trained_objective: obj,
        training_errors: errors,
    }];
    Ok(Model {
        stages: params.q,
        data_splits: 0,
        system: sys,
        heads,
        transform: prep.transform,
        classes: prep.classes,
        strategy: Strategy::Uniform,
        history,
    })
}

pub fn fit_adaptive(data: &LabeledDataset, q_max: usize, c: f64, min_misclassified: usize) -> Result<Model> {
    let params = FitParams { q: q_max, c, min_misclassified: Some(min_misclassified), ..FitParams::default() };
    fit_adaptive_with(data, &params)
}

pub fn fit_adaptive_with(data: &LabeledDataset, params: &FitParams) -> Result<Model> {
    fit_adaptive_observed(data, params, |_, _| {})
}

/// Adaptive fit that reports each trained stage (stage index, model so far)
/// to `observe`. The state at stage `s` equals the final model of a run
/// with `q = s`, which cross-validation uses to score all caps in one pass.
///
/// A stage can raise the training error, so the returned model is the latest
/// stage with the fewest training errors; `history` still covers every stage.
pub fn fit_adaptive_observed(
    data: &LabeledDataset,
    params: &FitParams,
    mut observe: impl FnMut(usize, &Model),
) -> Result<Model> {
    if params.q > 5 {
        return Err(NbcsError::InvalidParameter(format!("adaptive stage cap must be at most 5, got {}", params.q)));
    }
    let prep = prepare(data, params)?;
    let min_mis = params.min_misclassified.unwrap_or_else(|| default_min_misclassified(data.len()));
    if min_mis == 0 {
        return Err(NbcsError::InvalidParameter("min_misclassified must be at least 1".into()));
    }
    let mut model = Model {
        system: NestedSystem::regular(data.dim())?,
        heads: Vec::new(),
        transform: prep.transform.clone(),
        classes: prep.classes.clone(),
        strategy: Strategy::Adaptive,
        stages: 0,
        data_splits: 0,
        history: Vec::new(),
    };
    let n_classes = prep.classes.len();
    let mut previous: Option<Vec<WeightVector>> = None;
    let mut best: Option<(usize, Model)> = None;

    for stage in 0..=params.q {
        let sys = &model.system;
        let locs = locate_all(sys, &prep.points)?;
        let rows: Vec<SparseEmbedding> = locs.iter().map(|l| sys.embedding_from_location(l)).collect();
        let warm = match &previous {
            Some(ws) => Some(ws.iter().map(|w| sys.lift_to_current(w)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        let (heads, obj, lifted) =
            train_heads(&rows, &prep.class_index, n_classes, sys.vertex_count(), params, stage, warm.as_deref())?;
        let misclassified: Vec<usize> = (0..rows.len())
            .filter(|&i| predict_index(&heads, &rows[i]) != prep.class_index[i])
            .collect();
        model.history.push(StageRecord {
            stage,
            leaves: sys.leaf_count(),
            lifted_objective: lifted,
            trained_objective: obj,
            training_errors: misclassified.len(),
        });
        model.heads = heads;
        if best.as_ref().is_none_or(|(e, _)| misclassified.len() <= *e) {
            best = Some((misclassified.len(), model.clone()));
        }
        observe(stage, &best.as_ref().expect("set above").1);
        previous = Some(model.heads.clone());

        if misclassified.is_empty() || stage == params.q {
            break;
        }
        let mut by_leaf: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in &misclassified {
            by_leaf.entry(locs[i].leaf.0).or_default().push(i);
        }
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, l) in locs.iter().enumerate() {
            members.entry(l.leaf.0).or_default().push(i);
        }
        let mut split_any = false;
        for (leaf, mis) in by_leaf {
            if mis.len() < min_mis {
                continue;
            }
            // mean and nearest point are taken in the original input space
            let d = data.dim();
            let mut mean = vec![0.0; d];
            for &i in &mis {
                for (m, v) in mean.iter_mut().zip(&data.points[i]) {
                    *m += v / mis.len() as f64;
                }
            }
            let inside = &members[&leaf];
            let interior: BTreeSet<Vec<u64>> = inside
                .iter()
                .filter(|&&i| locs[i].coords.iter().all(|&a| a >= INTERIOR_THRESHOLD))
                .map(|&i| prep.points[i].iter().map(|v| v.to_bits()).collect())
                .collect();
            let leaf_id = crate::system::NodeId(leaf);
            if interior.len() < 2 {
                match model.system.split_at_barycenter(leaf_id) {
                    Ok(_) => {}
                    // too thin to split further
                    Err(NbcsError::DegenerateSimplex { .. }) => continue,
                    Err(e) => return Err(e),
                }
            } else {
                let nearest = inside
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        distance(&data.points[a], &mean).total_cmp(&distance(&data.points[b], &mean))
                    })
                    .expect("leaf with misclassified points has members");
                let placement = match model.system.split_nudged(leaf_id, &prep.points[nearest]) {
                    Ok((_, placement)) => placement,
                    Err(NbcsError::DegenerateSimplex { .. }) => continue,
                    Err(e) => return Err(e),
                };
                if placement != Placement::Barycenter {
                    model.data_splits += 1;
                }
            }
            split_any = true;
        }
        if !split_any {
            break;
        }
        model.stages += 1;
    }
    let (_, mut chosen) = best.expect("stage 0 always trains");
    chosen.history = model.history;
    Ok(chosen)
}

pub fn fit(data: &LabeledDataset, strategy: Strategy, params: &FitParams) -> Result<Model> {
    match strategy {
        Strategy::Uniform => fit_uniform_with(data, params),
        Strategy::Adaptive => fit_adaptive_with(data, params),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub c_grid: Vec<f64>,
    pub q_grid: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            c_grid: (0..11).map(|k| 2f64.powi(-5 + 2 * k)).collect(),
            q_grid: (2..=5).collect(),
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScore {
    pub c: f64,
    pub q: usize,
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best_c: f64,
    pub best_q: usize,
    pub best_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub grid: Vec<GridScore>,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[i64], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut assignment = vec![0; labels.len()];
    let mut pos = 0usize;
    for (_, mut idx) in by_class {
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = pos % folds;
            pos += 1;
        }
    }
    assignment
}

/// Grid search over `(q, C)` with stratified k-fold cross-validation.
/// Ties go to the smaller `q`, then the smaller `C`.
pub fn cross_validate(
    data: &LabeledDataset,
    cfg: &CvConfig,
    strategy: Strategy,
    base: &FitParams,
) -> Result<CvResult> {
    if cfg.c_grid.is_empty() || cfg.q_grid.is_empty() {
        return Err(NbcsError::InvalidParameter("cross-validation grids must be non-empty".into()));
    }
    if cfg.folds < 2 || cfg.folds > data.len() {
        return Err(NbcsError::InvalidParameter(format!(
            "folds must be in [2, n = {}], got {}",
            data.len(),
            cfg.folds
        )));
    }
    let n_classes = data.classes().len();
    // reshuffle when a training part loses a class; give up after a few tries
    let mut assignment = stratified_folds(&data.labels, cfg.folds, cfg.seed);
    for attempt in 1..=10u64 {
        let ok = (0..cfg.folds).all(|f| {
            let train: BTreeSet<i64> =
                (0..data.len()).filter(|&i| assignment[i] != f).map(|i| data.labels[i]).collect();
            train.len() == n_classes
        });
        if ok {
            break;
        }
        assignment = stratified_folds(&data.labels, cfg.folds, cfg.seed.wrapping_add(attempt));
    }

    let folds: Vec<usize> = (0..cfg.folds).collect();
    let per_fold: Vec<Result<Vec<Vec<f64>>>> = par_map(&folds, |&f| {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] != f).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == f).collect();
        let train = data.subset(&train_idx);
        let test = data.subset(&test_idx);
        fold_scores(&train, &test, cfg, strategy, base)
    });
    let per_fold = per_fold.into_iter().collect::<Result<Vec<_>>>()?;

    let mut grid = Vec::new();
    let mut best: Option<(f64, usize, usize)> = None;
    for (qi, &q) in cfg.q_grid.iter().enumerate() {
        for (ci, &c) in cfg.c_grid.iter().enumerate() {
            let accs: Vec<f64> = per_fold.iter().map(|s| s[qi][ci]).collect();
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            grid.push(GridScore { c, q, mean_accuracy: mean, fold_accuracies: accs });
            if best.is_none_or(|(m, _, _)| mean > m) {
                best = Some((mean, qi, ci));
            }
        }
    }
    // q-major iteration order with strict improvement realizes the tie rule
    let (best_accuracy, qi, ci) = best.expect("non-empty grid");
    let best_q = cfg.q_grid[qi];
    let best_c = cfg.c_grid[ci];
    let fold_accuracies = grid
        .iter()
        .find(|g| g.q == best_q && g.c == best_c)
        .map(|g| g.fold_accuracies.clone())
        .unwrap_or_default();
    Ok(CvResult { best_c, best_q, best_accuracy, fold_accuracies, grid })
}

/// Validation accuracy indexed `[q_index][c_index]` for one fold.
fn fold_scores(
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &CvConfig,
    strategy: Strategy,
    base: &FitParams,
) -> Result<Vec<Vec<f64>>> {
    let mut scores = vec![vec![0.0; cfg.c_grid.len()]; cfg.q_grid.len()];
    match strategy {
        Strategy::Uniform => {
            for (qi, &q) in cfg.q_grid.iter().enumerate() {
                let params = FitParams { q, ..base.clone() };
                let prep = prepare(train, &params)?;
                let sys = build_uniform_system(&prep.points, train.dim(), q)?;
                for (ci, &c) in cfg.c_grid.iter().enumerate() {
                    let params = FitParams { c, ..params.clone() };
                    let prep = Prepared {
                        transform: prep.transform.clone(),
                        points: prep.points.clone(),
                        class_index: prep.class_index.clone(),
                        classes: prep.classes.clone(),
                    };
                    let model = finish_uniform(prep, sys.clone(), &params)?;
                    scores[qi][ci] = model.accuracy(test);
                }
            }
        }
        Strategy::Adaptive => {
            let q_cap = *cfg.q_grid.iter().max().expect("non-empty grid");
            for (ci, &c) in cfg.c_grid.iter().enumerate() {
                let params = FitParams { c, q: q_cap, ..base.clone() };
                let mut per_stage = Vec::new();
                fit_adaptive_observed(train, &params, |_, m| per_stage.push(m.accuracy(test)))?;
                for (qi, &q) in cfg.q_grid.iter().enumerate() {
                    scores[qi][ci] = per_stage[q.min(per_stage.len() - 1)];
                }
            }
        }
    }
    Ok(scores)
}

/// Halfspace `{x : normal · x ≤ offset}` with unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.offset
    }
}

/// `max_j (w_j·x − b_j)`: exact signed distance inside the polytope and a
/// lower bound on the distance outside it.
pub fn polytope_signed_distance(halfspaces: &[Halfspace], x: &[f64]) -> f64 {
    halfspaces.iter().map(|h| h.signed_distance(x)).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone)]
pub struct PolytopeData {
    pub data: LabeledDataset,
    pub halfspaces: Vec<Halfspace>,
    pub discarded: usize,
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform points in the unit ball labeled by a random halfspace
/// intersection: `+1` at least `margin` inside, `-1` at least `margin`
/// outside, the band in between discarded.
pub fn generate_polytope_dataset(
    n: usize,
    d: usize,
    n_halfspaces: usize,
    margin: f64,
    seed: u64,
) -> Result<PolytopeData> {
    if n == 0 || d == 0 || n_halfspaces == 0 {
        return Err(NbcsError::InvalidParameter("n, d and the halfspace count must be positive".into()));
    }
    if margin.is_nan() || margin < 0.0 {
        return Err(NbcsError::InvalidParameter(format!("margin must be non-negative, got {margin}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let halfspaces: Vec<Halfspace> = (0..n_halfspaces)
            .map(|_| Halfspace { normal: unit_vector(&mut rng, d), offset: rng.random_range(0.05..0.95) })
            .collect();
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let dir = unit_vector(&mut rng, d);
            let r = rng.random::<f64>().powf(1.0 / d as f64);
            let x: Vec<f64> = dir.into_iter().map(|v| v * r).collect();
            let g = polytope_signed_distance(&halfspaces, &x);
            let label = if margin == 0.0 {
                Some(if g <= 0.0 { 1 } else { -1 })
            } else if g <= -margin {
                Some(1)
            } else if g >= margin {
                Some(-1)
            } else {
                None
            };
            if let Some(l) = label {
                points.push(x);
                labels.push(l);
            }
        }
        if labels.contains(&1) {
            let discarded = n - points.len();
            return Ok(PolytopeData { data: LabeledDataset::with_dim(points, labels, d)?, halfspaces, discarded });
        }
    }
    Err(NbcsError::InvalidParameter("could not sample a polytope with positive points".into()))
}

/// Four Gaussian clusters at the corners of `[-1, 1]²`, labeled by the sign
/// of `x·y`.
pub fn generate_xor(per_cluster: usize, spread: f64, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(4 * per_cluster);
    let mut labels = Vec::with_capacity(4 * per_cluster);
    for &(cx, cy) in &[(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        for _ in 0..per_cluster {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            points.push(vec![cx + spread * dx, cy + spread * dy]);
            labels.push(if cx * cy > 0.0 { 1 } else { -1 });
        }
    }
    LabeledDataset::with_dim(points, labels, 2).expect("finite points")
}

/// Random split into train/test index sets with `train_fraction` of the rows.
/// A fraction strictly between 0 and 1 leaves at least one row on each side
/// when `n ≥ 2`.
pub fn train_test_split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let f = train_fraction.clamp(0.0, 1.0);
    let mut k = (f * n as f64).round() as usize;
    if f > 0.0 && f < 1.0 && n >= 2 {
        k = k.clamp(1, n - 1);
    }
    let test = idx.split_off(k.min(n));
    (idx, test)
}
