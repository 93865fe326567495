//! Soft-margin linear SVM over sparse embeddings.
//!
//! Minimizes `½‖w‖² + C Σ_i c_i max(0, 1 − y_i w·x_i)` with a Pegasos-style
//! stochastic subgradient method (step `1/(λt)`, `λ = 1/(nC)`). The weight
//! vector is stored as `scale · v` so the shrink step is O(1) and each
//! example update touches only its nonzeros. There is no bias term: every
//! embedding sums to one, so adding `b` to all weights shifts every decision
//! value by `b`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NbcsError, Result};
use crate::system::SparseEmbedding;

#[derive(Debug, Clone, Default)]
pub struct SparseDataset {
    pub rows: Vec<SparseEmbedding>,
    /// ±1 per row.
    pub labels: Vec<f64>,
    pub dim: usize,
}

impl SparseDataset {
    pub fn new(rows: Vec<SparseEmbedding>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(NbcsError::InvalidParameter(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
            return Err(NbcsError::InvalidParameter(format!("label {l} is not ±1")));
        }
        for r in &rows {
            if let Some(&(i, _)) = r.entries.iter().find(|&&(i, _)| i >= dim) {
                return Err(NbcsError::VertexOutOfRange { index: i, len: dim });
            }
        }
        Ok(Self { rows, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseEmbedding::nnz).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Relative objective change between epochs that stops training; 0 disables.
    pub tolerance: f64,
    /// Cost multiplier for positive examples (negatives use 1).
    pub positive_cost: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, epochs: 50, seed: 0, tolerance: 1e-4, positive_cost: 1.0 }
    }
}

impl SvmConfig {
    pub fn with_c(c: f64) -> Self {
        Self { c, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(NbcsError::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if self.epochs == 0 {
            return Err(NbcsError::InvalidParameter("epochs must be at least 1".into()));
        }
        if self.positive_cost.is_nan() || self.positive_cost <= 0.0 {
            return Err(NbcsError::InvalidParameter("positive_cost must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub epochs_run: usize,
}

/// `½‖w‖² + C Σ c_i hinge(y_i w·x_i)`.
pub fn hinge_objective(w: &[f64], data: &SparseDataset, c: f64) -> f64 {
    hinge_objective_weighted(w, data, c, 1.0)
}

fn hinge_objective_weighted(w: &[f64], data: &SparseDataset, c: f64, positive_cost: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = data
        .rows
        .iter()
        .zip(&data.labels)
        .map(|(x, &y)| {
            let cost = if y > 0.0 { positive_cost } else { 1.0 };
            cost * (1.0 - y * x.dot(w)).max(0.0)
        })
        .sum();
    reg + c * loss
}

pub fn train(data: &SparseDataset, cfg: &SvmConfig) -> Result<Vec<f64>> {
    train_from(data, cfg, None).map(|o| o.weights)
}

/// Trains from `init` (or zero). The returned weights are the best epoch-end
/// iterate by objective, with the starting point included as a candidate,
/// so a warm start never gets worse.
pub fn train_from(data: &SparseDataset, cfg: &SvmConfig, init: Option<&[f64]>) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(NbcsError::EmptyDataset);
    }
    let has_pos = data.labels.iter().any(|&y| y > 0.0);
    let has_neg = data.labels.iter().any(|&y| y < 0.0);
    if !(has_pos && has_neg) {
        return Err(NbcsError::SingleClass);
    }
    if let Some(w0) = init {
        if w0.len() != data.dim {
            return Err(NbcsError::WeightLength { expected: data.dim, got: w0.len() });
        }
    }

    let n = data.len();
    let lambda = 1.0 / (n as f64 * cfg.c);
    let cost = |y: f64| if y > 0.0 { cfg.positive_cost } else { 1.0 };
    let mean_cost: f64 = data.labels.iter().map(|&y| cost(y)).sum::<f64>() / n as f64;
    let radius_sq = 2.0 * mean_cost / lambda;

    let mut v: Vec<f64> = init.map_or_else(|| vec![0.0; data.dim], <[f64]>::to_vec);
    let mut scale = 1.0;
    let mut v_sq: f64 = v.iter().map(|x| x * x).sum();
    // warm starts skip the large early steps that would discard the initial point
    let t0 = if init.is_some() { n as f64 } else { 0.0 };

    let mut best_w = v.clone();
    let mut best_obj = hinge_objective_weighted(&v, data, cfg.c, cfg.positive_cost);
    let mut prev_obj = best_obj;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = 0usize;
    let mut epochs_run = 0;
    let mut current = vec![0.0; data.dim];

    for _ in 0..cfg.epochs {
        epochs_run += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * (t as f64 + t0));
            let x = &data.rows[i];
            let y = data.labels[i];
            let vx = x.dot(&v);
            let margin = y * scale * vx;
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|a| *a = 0.0);
                v_sq = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let a = eta * y * cost(y) / scale;
                let vx_now = if shrink <= 0.0 { 0.0 } else { vx };
                let x_sq: f64 = x.entries.iter().map(|&(_, c)| c * c).sum();
                for &(j, c) in &x.entries {
                    v[j] += a * c;
                }
                v_sq += 2.0 * a * vx_now + a * a * x_sq;
            }
            let norm_sq = scale * scale * v_sq.max(0.0);
            if norm_sq > radius_sq {
                scale *= (radius_sq / norm_sq).sqrt();
            }
            if scale < 1e-8 {
                v.iter_mut().for_each(|a| *a *= scale);
                v_sq = v.iter().map(|x| x * x).sum();
                scale = 1.0;
            }
        }
        for (cw, vw) in current.iter_mut().zip(&v) {
            *cw = scale * vw;
        }
        let obj = hinge_objective_weighted(&current, data, cfg.c, cfg.positive_cost);
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from_slice(&current);
        }
        let rel = (prev_obj - obj).abs() / prev_obj.abs().max(f64::MIN_POSITIVE);
        prev_obj = obj;
        if cfg.tolerance > 0.0 && rel < cfg.tolerance {
            break;
        }
    }
    Ok(TrainOutcome { weights: best_w, objective: best_obj, epochs_run })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::Rng;

    /// Dense dual coordinate ascent for the bias-free box QP, run to tight
    /// convergence. Independent reference for the primal trainer.
    pub(crate) fn qp_oracle(data: &SparseDataset, c: f64) -> Vec<f64> {
        let dense: Vec<Vec<f64>> = data
            .rows
            .iter()
            .map(|r| {
                let mut x = vec![0.0; data.dim];
                for &(i, a) in &r.entries {
                    x[i] += a;
                }
                x
            })
            .collect();
        let n = dense.len();
        let mut alpha = vec![0.0; n];
        let mut w = vec![0.0; data.dim];
        for _ in 0..200_000 {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let q: f64 = dense[i].iter().map(|v| v * v).sum();
                if q == 0.0 {
                    continue;
                }
                let y = data.labels[i];
                let g = 1.0 - y * dense[i].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
                let new = (alpha[i] + g / q).clamp(0.0, c);
                let delta = new - alpha[i];
                if delta != 0.0 {
                    alpha[i] = new;
                    for (wk, xk) in w.iter_mut().zip(&dense[i]) {
                        *wk += delta * y * xk;
                    }
                }
                max_step = max_step.max(delta.abs());
            }
            if max_step < 1e-13 {
                break;
            }
        }
        w
    }

    fn row(entries: &[(usize, f64)]) -> SparseEmbedding {
        SparseEmbedding { entries: entries.to_vec() }
    }

    pub(crate) fn random_instance(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> SparseDataset {
        let k = 3.min(dim);
        let truth: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let mut idx: Vec<usize> = (0..dim).collect();
            idx.shuffle(rng);
            let mut coef: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = coef.iter().sum();
            coef.iter_mut().for_each(|c| *c /= s);
            let mut entries: Vec<(usize, f64)> = idx[..k].iter().copied().zip(coef).collect();
            entries.sort_by_key(|e| e.0);
            let e = row(&entries);
            let noise = rng.random_range(-0.2..0.2);
            let mut y = if e.dot(&truth) + noise >= 0.0 { 1.0 } else { -1.0 };
            if i < 2 {
                y = if i == 0 { 1.0 } else { -1.0 };
            }
            rows.push(e);
            labels.push(y);
        }
        SparseDataset::new(rows, labels, dim).unwrap()
    }

    #[test]
    fn objective_at_zero_is_c_times_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = random_instance(&mut rng, 20, 6);
        assert!((hinge_objective(&[0.0; 6], &data, 2.5) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn objective_with_zero_hinge_is_half_norm() {
        let data = SparseDataset::new(
            vec![row(&[(0, 1.0)]), row(&[(1, 1.0)])],
            vec![1.0, -1.0],
            2,
        )
        .unwrap();
        let w = [2.0, -3.0];
        assert!((hinge_objective(&w, &data, 10.0) - 6.5).abs() < 1e-15);
    }

    #[test]
    fn objective_matches_independent_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = random_instance(&mut rng, 25, 8);
        let w: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut want = 0.0;
        for v in &w {
            want += 0.5 * v * v;
        }
        for (r, y) in data.rows.iter().zip(&data.labels) {
            let mut s = 0.0;
            for &(i, a) in &r.entries {
                s += a * w[i];
            }
            want += 0.7 * f64::max(0.0, 1.0 - y * s);
        }
        assert!((hinge_objective(&w, &data, 0.7) - want).abs() < 1e-12);
    }

    #[test]
    fn separable_clusters_fit_perfectly() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for k in 0..20 {
            let t = 0.05 * (k % 5) as f64;
            rows.push(row(&[(0, 1.0 - t), (1, t)]));
            labels.push(1.0);
            rows.push(row(&[(0, t), (1, 1.0 - t)]));
            labels.push(-1.0);
        }
        let data = SparseDataset::new(rows, labels, 2).unwrap();
        let w = train(&data, &SvmConfig::with_c(1.0)).unwrap();
        let acc = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(r, &y)| (r.dot(&w) >= 0.0) == (y > 0.0))
            .count();
        assert_eq!(acc, 40);
    }

    #[test]
    fn single_class_rejected() {
        let data = SparseDataset::new(vec![row(&[(0, 1.0)])], vec![1.0], 1).unwrap();
        assert!(matches!(train(&data, &SvmConfig::default()), Err(NbcsError::SingleClass)));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_instance(&mut rng, 10, 4);
        assert!(train(&data, &SvmConfig { c: 0.0, ..Default::default() }).is_err());
        assert!(train(&data, &SvmConfig { epochs: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = random_instance(&mut rng, 40, 10);
        let cfg = SvmConfig { seed: 9, ..SvmConfig::default() };
        assert_eq!(train(&data, &cfg).unwrap(), train(&data, &cfg).unwrap());
    }

    #[test]
    fn close_to_qp_oracle_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let data = random_instance(&mut rng, 30, 8);
            let cfg = SvmConfig { c: 1.0, epochs: 2000, tolerance: 0.0, ..Default::default() };
            let out = train_from(&data, &cfg, None).unwrap();
            let reference = hinge_objective(&qp_oracle(&data, 1.0), &data, 1.0);
            let gap = (out.objective - reference) / reference;
            assert!(gap < 0.01 && gap > -1e-9, "gap {gap}");
        }
    }

    #[test]
    fn warm_start_never_worsens() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data = random_instance(&mut rng, 50, 8);
        let init = qp_oracle(&data, 1.0);
        let start = hinge_objective(&init, &data, 1.0);
        let out = train_from(&data, &SvmConfig::with_c(1.0), Some(&init)).unwrap();
        assert!(out.objective <= start);
    }

    #[test]
    fn objective_decreases_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = random_instance(&mut rng, 60, 10);
        let initial = hinge_objective(&[0.0; 10], &data, 1.0);
        let mean: f64 = (0..10)
            .map(|s| {
                let cfg = SvmConfig { seed: s, ..SvmConfig::with_c(1.0) };
                train_from(&data, &cfg, None).unwrap().objective
            })
            .sum::<f64>()
            / 10.0;
        assert!(mean <= initial);
    }
}
