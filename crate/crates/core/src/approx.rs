//! Outer approximation of a convex polygon by the non-negative region of a
//! nested-system decision function.
//!
//! Stage 0 gives every root corner weight −1. Each later stage splits every
//! leaf at its barycenter; the new vertex gets the smallest weight that keeps
//! the target inside `{f ≥ 0}`, or is excluded when its leaf misses the
//! target. Planar only, except for [`sampled_region_volume`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{NbcsError, Result};
use crate::geometry::{Polygon2D, Simplex};
use crate::system::{NestedSystem, NodeId, WeightVector, ZERO_COEFFICIENT};

/// Default cap on the number of stages.
pub const MAX_STAGES: usize = 8;

/// Tolerance for the containment check.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ApproxConfig {
    pub stages: usize,
    pub max_stages: usize,
    pub target: Polygon2D,
}

impl ApproxConfig {
    pub fn new(target: Polygon2D, stages: usize) -> Self {
        Self { stages, max_stages: MAX_STAGES, target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageMetrics {
    pub stage: usize,
    pub leaves: usize,
    pub max_diameter: f64,
    /// `area({f ≥ 0})`.
    pub region_area: f64,
    /// `area({f ≥ 0} ∖ target)`.
    pub excess_area: f64,
    /// `excess_area / area(root)`.
    pub excess_ratio: f64,
    /// Smallest decision value over the target (attained at a vertex of the
    /// target clipped to some leaf).
    pub min_target_value: f64,
}

impl StageMetrics {
    pub fn contains_target(&self) -> bool {
        self.min_target_value >= -CONTAINMENT_TOL
    }
}

#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub system: NestedSystem,
    pub weights: WeightVector,
    pub target: Polygon2D,
    /// One entry per stage, starting with stage 0.
    pub stages: Vec<StageMetrics>,
    /// Vertex count after each stage, so stage `i`'s weights are the prefix
    /// `weights[..vertex_counts[i]]` evaluated on the leaves of that stage.
    pub vertex_counts: Vec<usize>,
}

impl ApproxResult {
    pub fn final_metrics(&self) -> &StageMetrics {
        self.stages.last().expect("stage 0 is always recorded")
    }

    /// Leaves of the stage-`stage` subdivision (every node of that depth).
    pub fn stage_cells(&self, stage: usize) -> Vec<NodeId> {
        (0..self.system.node_count())
            .map(NodeId)
            .filter(|&n| self.system.depth(n) == stage)
            .collect()
    }

    /// Convex pieces of the stage-`stage` region `{f ≥ 0}`.
    pub fn stage_region_pieces(&self, stage: usize) -> Vec<Polygon2D> {
        self.stage_cells(stage)
            .into_iter()
            .filter_map(|n| {
                let s = self.system.simplex(n);
                let [a, b, c] = leaf_affine(s, &self.weights)?;
                Polygon2D::triangle(s, self.system.vertices()).clip_halfplane(a, b, c)
            })
            .collect()
    }

    /// Per-stage metrics as CSV.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("stage,leaves,max_diameter,region_area,excess_area,excess_ratio,min_target_value\n");
        for m in &self.stages {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                m.stage, m.leaves, m.max_diameter, m.region_area, m.excess_area, m.excess_ratio, m.min_target_value
            ));
        }
        out
    }
}

/// The default demo target: a convex pentagon inside the unit regular triangle.
pub fn builtin_pentagon() -> Polygon2D {
    Polygon2D::new(vec![[0.35, 0.15], [0.65, 0.17], [0.72, 0.38], [0.5, 0.58], [0.30, 0.36]])
        .expect("valid pentagon")
}

fn check_planar(sys: &NestedSystem) -> Result<()> {
    if sys.dim() != 2 {
        return Err(NbcsError::PlanarOnly(sys.dim()));
    }
    Ok(())
}

fn check_inside_root(root: &Simplex, target: &Polygon2D) -> Result<()> {
    for v in target.vertices() {
        let a = root.barycentric(v);
        if let Some((i, &c)) = a.iter().enumerate().find(|(_, &c)| c <= 0.0) {
            return Err(NbcsError::OutsideRoot { vertex: i, coefficient: c });
        }
    }
    Ok(())
}

pub fn approximate(cfg: &ApproxConfig) -> Result<ApproxResult> {
    if cfg.stages > cfg.max_stages {
        return Err(NbcsError::InvalidParameter(format!(
            "{} stages exceeds the cap of {}",
            cfg.stages, cfg.max_stages
        )));
    }
    let mut run = Approximation::start(cfg.target.clone())?;
    for _ in 0..cfg.stages {
        run.advance()?;
    }
    Ok(run.finish())
}

/// Runs stages until `excess_ratio < epsilon` or `max_stages` is reached.
pub fn approximate_to_tolerance(target: &Polygon2D, epsilon: f64, max_stages: usize) -> Result<ApproxResult> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(NbcsError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut run = Approximation::start(target.clone())?;
    // stage 0 has an empty region, so at least one stage always runs
    while run.stage() < max_stages && (run.stage() == 0 || run.last().excess_ratio >= epsilon) {
        run.advance()?;
    }
    Ok(run.finish())
}

/// Incremental construction, one stage per [`advance`](Self::advance).
#[derive(Debug, Clone)]
pub struct Approximation {
    result: ApproxResult,
}

impl Approximation {
    pub fn start(target: Polygon2D) -> Result<Self> {
        let system = NestedSystem::regular(2)?;
        check_inside_root(system.simplex(system.root()), &target)?;
        let weights = WeightVector::constant(3, -1.0);
        let mut result = ApproxResult { system, weights, target, stages: Vec::new(), vertex_counts: vec![3] };
        let m = stage_metrics(&result.system, &result.weights, &result.target, 0)?;
        result.stages.push(m);
        Ok(Self { result })
    }

    pub fn stage(&self) -> usize {
        self.result.stages.len() - 1
    }

    pub fn last(&self) -> &StageMetrics {
        self.result.final_metrics()
    }

    pub fn result(&self) -> &ApproxResult {
        &self.result
    }

    pub fn advance(&mut self) -> Result<&StageMetrics> {
        let r = &mut self.result;
        // the stage-0 region is empty, so stage-1 weights cannot obey the
        // average cap; from stage 2 on the previous region contains the
        // target and the cap only absorbs rounding
        let capped = r.stages.len() >= 2;
        let leaves: Vec<NodeId> = r.system.leaves().collect();
        for leaf in leaves {
            let parent = r.system.simplex(leaf).clone();
            let w_avg = parent.vertex_ids().iter().map(|&i| r.weights.values()[i]).sum::<f64>() / 3.0;
            let parent_excluded = parent.vertex_ids().iter().any(|&i| r.weights.is_excluded(i));
            let touches = !parent_excluded && convex_intersects(&Polygon2D::triangle(&parent, r.system.vertices()), &r.target);
            r.system.split_at_barycenter(leaf)?;
            if !touches {
                r.weights.push_excluded();
                continue;
            }
            let w = minimal_weight(&r.system, leaf, &r.target, &r.weights)?;
            r.weights.push(match w {
                Some(w) if capped => w.min(w_avg),
                Some(w) => w,
                None => w_avg,
            });
        }
        r.vertex_counts.push(r.system.vertex_count());
        let stage = r.stages.len();
        let m = stage_metrics(&r.system, &r.weights, &r.target, stage)?;
        r.stages.push(m);
        Ok(self.last())
    }

    pub fn finish(self) -> ApproxResult {
        self.result
    }
}

/// Smallest weight for the newest vertex (the split vertex of `parent`) such
/// that `f ≥ 0` on `target ∩ child` for every child of `parent`. `None` when
/// no point of the target constrains it.
///
/// `weights` covers every vertex except the new one.
pub fn minimal_weight(
    sys: &NestedSystem,
    parent: NodeId,
    target: &Polygon2D,
    weights: &WeightVector,
) -> Result<Option<f64>> {
    check_planar(sys)?;
    let new_vertex = sys
        .split_vertex_of(parent)
        .ok_or_else(|| NbcsError::InvalidParameter(format!("node {} has not been split", parent.0)))?;
    if weights.len() != new_vertex {
        return Err(NbcsError::WeightLength { expected: new_vertex, got: weights.len() });
    }
    let mut required: Option<f64> = None;
    for child in sys.children(parent).expect("split node has children") {
        let s = sys.simplex(child);
        let Some(piece) = target.clip_to_simplex(s) else { continue };
        for v in piece.vertices() {
            let a = s.barycentric(v);
            let mut rest = 0.0;
            let mut own = 0.0;
            for (&id, &c) in s.vertex_ids().iter().zip(&a) {
                if id == new_vertex {
                    own = c;
                } else {
                    rest += c * weights.values()[id];
                }
            }
            if own > ZERO_COEFFICIENT {
                let r = -rest / own;
                required = Some(required.map_or(r, |q: f64| q.max(r)));
            }
        }
    }
    Ok(required)
}

/// True when two convex polygons share at least one point (separating axis
/// test over both edge sets; touching counts as intersecting).
pub fn convex_intersects(a: &Polygon2D, b: &Polygon2D) -> bool {
    let separated_by = |p: &Polygon2D, q: &Polygon2D| {
        let v = p.vertices();
        (0..v.len()).any(|i| {
            let (s, e) = (v[i], v[(i + 1) % v.len()]);
            let n = [s[1] - e[1], e[0] - s[0]]; // inward normal of a CCW edge
            q.vertices().iter().all(|x| n[0] * (x[0] - s[0]) + n[1] * (x[1] - s[1]) < 0.0)
        })
    };
    !separated_by(a, b) && !separated_by(b, a)
}

/// Affine decision function `a·x + b·y + c` on a leaf, or `None` when the
/// leaf has an excluded vertex.
fn leaf_affine(s: &Simplex, w: &WeightVector) -> Option<[f64; 3]> {
    let mut coef = [0.0; 3];
    for (k, &id) in s.vertex_ids().iter().enumerate() {
        if w.is_excluded(id) {
            return None;
        }
        let row = s.inverse_row(k);
        for j in 0..3 {
            coef[j] += w.values()[id] * row[j];
        }
    }
    Some(coef)
}

/// Area of `{f ≥ 0}`. Leaves with an excluded vertex contribute nothing.
pub fn region_area(sys: &NestedSystem, w: &WeightVector) -> Result<f64> {
    check_planar(sys)?;
    check_len(sys, w)?;
    let mut area = 0.0;
    for leaf in sys.leaves() {
        let s = sys.simplex(leaf);
        if let Some([a, b, c]) = leaf_affine(s, w) {
            if let Some(p) = Polygon2D::triangle(s, sys.vertices()).clip_halfplane(a, b, c) {
                area += p.area();
            }
        }
    }
    Ok(area)
}

/// Area of `{f ≥ 0} ∩ target`.
pub fn region_area_within(sys: &NestedSystem, w: &WeightVector, target: &Polygon2D) -> Result<f64> {
    check_planar(sys)?;
    check_len(sys, w)?;
    let mut area = 0.0;
    for leaf in sys.leaves() {
        let s = sys.simplex(leaf);
        if let Some([a, b, c]) = leaf_affine(s, w) {
            if let Some(p) = target.clip_to_simplex(s).and_then(|p| p.clip_halfplane(a, b, c)) {
                area += p.area();
            }
        }
    }
    Ok(area)
}

/// Pieces of `{f ≥ 0}`, one convex polygon per contributing leaf.
pub fn region_pieces(sys: &NestedSystem, w: &WeightVector) -> Result<Vec<Polygon2D>> {
    check_planar(sys)?;
    check_len(sys, w)?;
    Ok(sys
        .leaves()
        .filter_map(|leaf| {
            let s = sys.simplex(leaf);
            let [a, b, c] = leaf_affine(s, w)?;
            Polygon2D::triangle(s, sys.vertices()).clip_halfplane(a, b, c)
        })
        .collect())
}

/// Smallest decision value over `target`: the minimum over the vertices of
/// `target ∩ leaf` for every leaf (the function is affine per leaf).
pub fn min_value_on(sys: &NestedSystem, w: &WeightVector, target: &Polygon2D) -> Result<f64> {
    check_planar(sys)?;
    check_len(sys, w)?;
    let mut min = f64::INFINITY;
    for leaf in sys.leaves() {
        let s = sys.simplex(leaf);
        let Some(piece) = target.clip_to_simplex(s) else { continue };
        for v in piece.vertices() {
            let a = s.barycentric(v);
            let mut value = 0.0;
            for (&id, &c) in s.vertex_ids().iter().zip(&a) {
                if c.abs() <= ZERO_COEFFICIENT {
                    continue;
                }
                if w.is_excluded(id) {
                    value = f64::NEG_INFINITY;
                    break;
                }
                value += c * w.values()[id];
            }
            min = min.min(value);
        }
    }
    Ok(min)
}

fn check_len(sys: &NestedSystem, w: &WeightVector) -> Result<()> {
    if w.len() != sys.vertex_count() {
        return Err(NbcsError::WeightLength { expected: sys.vertex_count(), got: w.len() });
    }
    Ok(())
}

fn stage_metrics(sys: &NestedSystem, w: &WeightVector, target: &Polygon2D, stage: usize) -> Result<StageMetrics> {
    let root_area = sys.simplex(sys.root()).volume();
    let region = region_area(sys, w)?;
    let inside = region_area_within(sys, w, target)?;
    let excess = (region - inside).max(0.0);
    let max_diameter = sys
        .leaves()
        .map(|l| sys.simplex(l).diameter(sys.vertices()))
        .fold(0.0, f64::max);
    Ok(StageMetrics {
        stage,
        leaves: sys.leaf_count(),
        max_diameter,
        region_area: region,
        excess_area: excess,
        excess_ratio: excess / root_area,
        min_target_value: min_value_on(sys, w, target)?,
    })
}

/// Monte-Carlo estimate of `vol({f ≥ 0})` in any dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub standard_error: f64,
}

pub fn sampled_region_volume(sys: &NestedSystem, w: &WeightVector, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    check_len(sys, w)?;
    if samples == 0 {
        return Err(NbcsError::InvalidParameter("need at least one sample".into()));
    }
    let root = sys.simplex(sys.root());
    let corners: Vec<&[f64]> = root.vertex_ids().iter().map(|&i| sys.vertex(i)).collect();
    let d = sys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut x = vec![0.0; d];
    let mut g = vec![0.0; d + 1];
    for _ in 0..samples {
        // normalized exponentials are uniform barycentric coordinates
        for v in g.iter_mut() {
            *v = rng.sample(Exp1);
        }
        let total: f64 = g.iter().sum();
        x.iter_mut().for_each(|v| *v = 0.0);
        for (gi, c) in g.iter().zip(&corners) {
            for (xj, cj) in x.iter_mut().zip(c.iter()) {
                *xj += gi / total * cj;
            }
        }
        if sys.decision_value(w, &x)? >= 0.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let vol = root.volume();
    Ok(VolumeEstimate { volume: p * vol, standard_error: vol * (p * (1.0 - p) / samples as f64).sqrt() })
}

/// Fraction of leaves with diameter above `threshold` after `stages` rounds
/// of barycentric subdivision of the unit regular `d`-simplex. Subtrees
/// below the threshold are counted without being enumerated.
pub fn long_leaf_fraction(d: usize, stages: usize, threshold: f64) -> Result<f64> {
    let (vertices, _) = crate::geometry::regular_simplex(d)?;
    fn diameter(v: &[Vec<f64>]) -> f64 {
        let mut m = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                m = m.max(crate::geometry::distance(&v[i], &v[j]));
            }
        }
        m
    }
    fn count_long(v: &[Vec<f64>], remaining: usize, threshold: f64) -> f64 {
        if diameter(v) <= threshold {
            return 0.0;
        }
        if remaining == 0 {
            return 1.0;
        }
        let n = v.len();
        let center: Vec<f64> = (0..v[0].len()).map(|j| v.iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        (0..n)
            .map(|k| {
                let mut child = v.to_vec();
                child[k] = center.clone();
                count_long(&child, remaining - 1, threshold)
            })
            .sum()
    }
    let total = ((d + 1) as f64).powi(stages as i32);
    Ok(count_long(&vertices, stages, threshold) / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root_triangle() -> Polygon2D {
        let sys = NestedSystem::regular(2).unwrap();
        Polygon2D::triangle(sys.simplex(sys.root()), sys.vertices())
    }

    /// Brute force: largest `−rest/own` over a grid of target points in the
    /// star, spacing `h`.
    fn grid_minimal_weight(sys: &NestedSystem, parent: NodeId, target: &Polygon2D, w: &WeightVector, h: f64) -> f64 {
        let nv = sys.split_vertex_of(parent).unwrap();
        let inside_target = |x: &[f64; 2]| {
            let v = target.vertices();
            (0..v.len()).all(|i| {
                let (s, e) = (v[i], v[(i + 1) % v.len()]);
                (e[0] - s[0]) * (x[1] - s[1]) - (e[1] - s[1]) * (x[0] - s[0]) >= 0.0
            })
        };
        let mut best = f64::NEG_INFINITY;
        let steps = (1.0 / h) as usize;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = [i as f64 * h, j as f64 * h];
                if !inside_target(&x) {
                    continue;
                }
                for child in sys.children(parent).unwrap() {
                    let s = sys.simplex(child);
                    if !s.contains(&x, 0.0) {
                        continue;
                    }
                    let a = s.barycentric(&x);
                    let (mut rest, mut own) = (0.0, 0.0);
                    for (&id, &c) in s.vertex_ids().iter().zip(&a) {
                        if id == nv {
                            own = c;
                        } else {
                            rest += c * w.values()[id];
                        }
                    }
                    if own > 1e-9 {
                        best = best.max(-rest / own);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn minimal_weight_matches_grid_oracle_first_stage() {
        let target = builtin_pentagon();
        let mut sys = NestedSystem::regular(2).unwrap();
        let w = WeightVector::constant(3, -1.0);
        sys.split_at_barycenter(sys.root()).unwrap();
        let exact = minimal_weight(&sys, sys.root(), &target, &w).unwrap().unwrap();
        let grid = grid_minimal_weight(&sys, sys.root(), &target, &w, 1e-3);
        assert!(grid <= exact + 1e-12);
        assert!((exact - grid).abs() / exact.abs() < 0.02, "exact={exact} grid={grid}");
    }

    #[test]
    fn minimal_weight_matches_grid_oracle_inside_star() {
        // a small triangle inside one child, with mixed existing weights
        let target = Polygon2D::new(vec![[0.45, 0.2], [0.6, 0.22], [0.5, 0.3]]).unwrap();
        let mut sys = NestedSystem::regular(2).unwrap();
        let w = WeightVector::from_values(vec![-1.0, -0.5, -2.0]);
        sys.split_at_barycenter(sys.root()).unwrap();
        let exact = minimal_weight(&sys, sys.root(), &target, &w).unwrap().unwrap();
        let grid = grid_minimal_weight(&sys, sys.root(), &target, &w, 1e-3);
        assert!(grid <= exact + 1e-12);
        assert!((exact - grid).abs() / exact.abs() < 0.02, "exact={exact} grid={grid}");
    }

    #[test]
    fn minimal_weight_is_tight() {
        let target = builtin_pentagon();
        let mut sys = NestedSystem::regular(2).unwrap();
        let mut w = WeightVector::constant(3, -1.0);
        sys.split_at_barycenter(sys.root()).unwrap();
        let m = minimal_weight(&sys, sys.root(), &target, &w).unwrap().unwrap();
        w.push(m);
        assert!(min_value_on(&sys, &w, &target).unwrap().abs() < 1e-12);
        w.values_mut()[3] = m - 1e-6;
        assert!(min_value_on(&sys, &w, &target).unwrap() < -1e-9);
    }

    #[test]
    fn minimal_weight_unconstrained_when_star_misses_target() {
        let target = Polygon2D::new(vec![[0.05, 0.01], [0.1, 0.01], [0.07, 0.03]]).unwrap();
        let mut sys = NestedSystem::regular(2).unwrap();
        sys.split_at_barycenter(sys.root()).unwrap();
        let leaf = sys.leaves().find(|&l| target.clip_to_simplex(sys.simplex(l)).is_none()).unwrap();
        sys.split_at_barycenter(leaf).unwrap();
        let w = WeightVector::constant(4, -1.0);
        assert_eq!(minimal_weight(&sys, leaf, &target, &w).unwrap(), None);
    }

    #[test]
    fn region_area_constant_weights() {
        let mut sys = NestedSystem::regular(2).unwrap();
        sys.split_at_barycenter(sys.root()).unwrap();
        let full = 3f64.sqrt() / 4.0;
        assert!((region_area(&sys, &WeightVector::constant(4, 1.0)).unwrap() - full).abs() < 1e-12);
        assert_eq!(region_area(&sys, &WeightVector::constant(4, -1.0)).unwrap(), 0.0);
    }

    #[test]
    fn region_area_single_positive_corner_is_quarter() {
        let sys = NestedSystem::regular(2).unwrap();
        let w = WeightVector::from_values(vec![1.0, -1.0, -1.0]);
        let full = 3f64.sqrt() / 4.0;
        assert!((region_area(&sys, &w).unwrap() - full / 4.0).abs() < 1e-12);
        // Monte-Carlo cross-check, 10⁶ samples
        let est = sampled_region_volume(&sys, &w, 1_000_000, 3).unwrap();
        assert!((est.volume - full / 4.0).abs() < 1e-3);
    }

    #[test]
    fn sampled_volume_agrees_with_exact_area() {
        let res = approximate(&ApproxConfig::new(builtin_pentagon(), 3)).unwrap();
        let exact = region_area(&res.system, &res.weights).unwrap();
        let est = sampled_region_volume(&res.system, &res.weights, 200_000, 9).unwrap();
        assert!((est.volume - exact).abs() <= 3.0 * est.standard_error, "{est:?} vs {exact}");
    }

    #[test]
    fn sampled_volume_all_excluded_is_zero() {
        let mut sys = NestedSystem::regular(3).unwrap();
        sys.split_at_barycenter(sys.root()).unwrap();
        let mut w = WeightVector::constant(4, 1.0);
        w.push_excluded();
        let est = sampled_region_volume(&sys, &w, 10_000, 1).unwrap();
        // only the measure-zero root boundary avoids the excluded vertex
        assert_eq!(est.volume, 0.0);
    }

    #[test]
    fn sampled_volume_3d_matches_grid() {
        let mut sys = NestedSystem::regular(3).unwrap();
        sys.split_at_barycenter(sys.root()).unwrap();
        let w = WeightVector::from_values(vec![1.0, -0.5, -1.0, 0.3, -0.2]);
        let est = sampled_region_volume(&sys, &w, 400_000, 5).unwrap();
        // dense grid over the bounding box
        let lo: Vec<f64> = (0..3).map(|j| sys.vertices()[..4].iter().map(|v| v[j]).fold(f64::INFINITY, f64::min)).collect();
        let hi: Vec<f64> = (0..3).map(|j| sys.vertices()[..4].iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
        let n = 120;
        let root = sys.simplex(sys.root());
        let (mut inside, mut positive) = (0usize, 0usize);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x: Vec<f64> = [i, j, k]
                        .iter()
                        .enumerate()
                        .map(|(a, &t)| lo[a] + (hi[a] - lo[a]) * (t as f64 + 0.5) / n as f64)
                        .collect();
                    if !root.contains(&x, 0.0) {
                        continue;
                    }
                    inside += 1;
                    if sys.decision_value(&w, &x).unwrap() >= 0.0 {
                        positive += 1;
                    }
                }
            }
        }
        let grid = root.volume() * positive as f64 / inside as f64;
        assert!((est.volume - grid).abs() / grid < 0.02, "{} vs {grid}", est.volume);
    }

    #[test]
    fn rejects_targets_touching_or_outside_root() {
        assert!(Approximation::start(root_triangle()).is_err());
        let outside = Polygon2D::new(vec![[-0.1, 0.1], [0.3, 0.1], [0.2, 0.3]]).unwrap();
        assert!(Approximation::start(outside).is_err());
        assert!(approximate(&ApproxConfig { stages: 9, max_stages: 8, target: builtin_pentagon() }).is_err());
    }

    #[test]
    fn stage_zero_region_is_empty() {
        let res = approximate(&ApproxConfig::new(builtin_pentagon(), 0)).unwrap();
        assert_eq!(res.stages[0].region_area, 0.0);
        assert!(!res.stages[0].contains_target());
    }

    #[test]
    fn pentagon_contained_and_shrinking() {
        let res = approximate(&ApproxConfig::new(builtin_pentagon(), 5)).unwrap();
        for m in &res.stages[1..] {
            assert!(m.contains_target(), "stage {}: {}", m.stage, m.min_target_value);
        }
        for pair in res.stages[1..].windows(2) {
            assert!(pair[1].region_area <= pair[0].region_area + 1e-9);
            assert!(pair[1].excess_area <= pair[0].excess_area + 1e-9);
        }
        assert_eq!(res.vertex_counts.len(), 6);
    }

    #[test]
    fn stage_pieces_match_stage_area() {
        let res = approximate(&ApproxConfig::new(builtin_pentagon(), 3)).unwrap();
        for stage in 0..=3 {
            assert_eq!(res.stage_cells(stage).len(), 3usize.pow(stage as u32));
            let area: f64 = res.stage_region_pieces(stage).iter().map(Polygon2D::area).sum();
            assert!((area - res.stages[stage].region_area).abs() < 1e-12);
        }
        assert_eq!(res.metrics_csv().lines().count(), 5);
    }

    #[test]
    fn weights_respect_average_cap() {
        let res = approximate(&ApproxConfig::new(builtin_pentagon(), 4)).unwrap();
        for rec in res.system.splits() {
            if res.weights.is_excluded(rec.vertex) || rec.vertex == 3 {
                continue;
            }
            let avg: f64 = rec.parent_vertices.iter().zip(&rec.beta).map(|(&i, b)| b * res.weights.values()[i]).sum();
            assert!(res.weights.values()[rec.vertex] <= avg + 1e-12);
        }
    }

    #[test]
    fn tiny_corner_triangle_shrinks() {
        let t = Polygon2D::new(vec![[0.05, 0.01], [0.08, 0.01], [0.06, 0.03]]).unwrap();
        let res = approximate(&ApproxConfig::new(t, 4)).unwrap();
        assert!(res.stages[4].excess_area < res.stages[1].excess_area);
        assert!(res.stages[1..].iter().all(StageMetrics::contains_target));
    }

    #[test]
    fn tolerance_mode_stops_early() {
        let res = approximate_to_tolerance(&builtin_pentagon(), 0.5, 8).unwrap();
        assert!(res.final_metrics().excess_ratio < 0.5);
        assert!(res.stages.len() <= 3);
    }

    #[test]
    fn intersection_test() {
        let a = Polygon2D::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let touching = Polygon2D::new(vec![[1.0, 0.0], [2.0, 0.0], [2.0, 1.0]]).unwrap();
        let apart = Polygon2D::new(vec![[0.6, 0.6], [2.0, 0.6], [2.0, 1.0]]).unwrap();
        assert!(convex_intersects(&a, &touching));
        assert!(!convex_intersects(&a, &apart));
        assert!(convex_intersects(&a, &a));
    }

    #[test]
    fn long_leaf_fraction_decays() {
        for z in 1..=3u32 {
            for k in 1..=3u32 {
                let stages = (z * k * 2) as usize;
                let threshold = (2.0f64 / 3.0).powi(z as i32);
                // the long fraction never grows with depth, so a shallower
                // count is an upper bound for the deeper one
                let frac = long_leaf_fraction(2, stages.min(12), threshold).unwrap();
                let bound = z as f64 * (1.0 - (-2.0f64).exp()).powi(k as i32);
                assert!(frac <= bound, "z={z} k={k}: {frac} > {bound}");
            }
        }
    }
}
