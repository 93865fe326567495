//! The nested barycentric coordinate system: an append-only vertex list plus
//! a (d+1)-ary tree of simplices built by interior splits.
//!
//! Conventions:
//! - vertices `0..=d` are the root simplex; every split appends one vertex.
//! - node ids are creation order; the root is node 0.
//! - child `k` of a split node replaces the parent's `k`-th vertex with the
//!   split vertex, so a child always shares `d` vertices with its parent.
//!
//! The system is built by a single writer; once built, all queries take
//! `&self` and are safe to run concurrently.

use serde::{Deserialize, Serialize};

use crate::error::{NbcsError, Result};
use crate::geometry::{regular_simplex, Simplex, DEFAULT_TOL};

/// Minimum barycentric coefficient a split point must have in its leaf.
pub const INTERIOR_THRESHOLD: f64 = 1e-6;

/// Fraction of the way toward the leaf barycenter a boundary point is moved.
pub const NUDGE_FRACTION: f64 = 1e-3;

/// Embedding coefficients at or below this magnitude are dropped.
pub const ZERO_COEFFICIENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
struct Node {
    simplex: Simplex,
    depth: usize,
    /// First child id; the d+1 children are contiguous.
    first_child: Option<usize>,
    split_vertex: Option<usize>,
}

/// β coefficients of a split vertex over its parent simplex's vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord {
    pub node: NodeId,
    pub vertex: usize,
    pub parent_vertices: Vec<usize>,
    pub beta: Vec<f64>,
}

/// How a requested split point was actually placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    AsGiven,
    Nudged,
    Barycenter,
}

/// Nonzero `(vertex, coefficient)` pairs of one point's embedding, by ascending vertex.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseEmbedding {
    pub entries: Vec<(usize, f64)>,
}

impl SparseEmbedding {
    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, a)| a).sum()
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, a)| a * w[i]).sum()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// One weight per vertex, with an explicit excluded (−∞) flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    excluded: Vec<bool>,
}

impl WeightVector {
    pub fn from_values(weights: Vec<f64>) -> Self {
        let excluded = vec![false; weights.len()];
        Self { weights, excluded }
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self::from_values(vec![value; len])
    }

    pub fn with_flags(weights: Vec<f64>, excluded: Vec<bool>) -> Result<Self> {
        if weights.len() != excluded.len() {
            return Err(NbcsError::WeightLength { expected: weights.len(), got: excluded.len() });
        }
        Ok(Self { weights, excluded })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.excluded[i]
    }

    pub fn excluded_flags(&self) -> &[bool] {
        &self.excluded
    }

    pub fn push(&mut self, value: f64) {
        self.weights.push(value);
        self.excluded.push(false);
    }

    pub fn push_excluded(&mut self) {
        self.weights.push(0.0);
        self.excluded.push(true);
    }

    /// `w·φ(x)`, or −∞ when the embedding touches an excluded vertex.
    pub fn evaluate(&self, e: &SparseEmbedding) -> f64 {
        if e.entries.iter().any(|&(i, _)| self.excluded[i]) {
            return f64::NEG_INFINITY;
        }
        e.dot(&self.weights)
    }
}

/// Result of a point-location query.
#[derive(Debug, Clone)]
pub struct Location {
    pub leaf: NodeId,
    /// Barycentric coordinates of the point in the leaf, in leaf vertex order.
    pub coords: Vec<f64>,
    /// Number of O(d²) coordinate solves, one per level including the root.
    pub solves: usize,
}

#[derive(Debug, Clone)]
pub struct NestedSystem {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    nodes: Vec<Node>,
    splits: Vec<SplitRecord>,
}

impl NestedSystem {
    /// Stage-0 system over the unit regular simplex.
    pub fn regular(d: usize) -> Result<Self> {
        let (vertices, root) = regular_simplex(d)?;
        Ok(Self::from_parts(vertices, root))
    }

    /// Stage-0 system over an arbitrary non-degenerate root simplex.
    pub fn from_root(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let root = Simplex::new((0..vertices.len()).collect(), &vertices)?;
        Ok(Self::from_parts(vertices, root))
    }

    fn from_parts(vertices: Vec<Vec<f64>>, root: Simplex) -> Self {
        Self {
            dim: root.dim(),
            vertices,
            nodes: vec![Node { simplex: root, depth: 0, first_child: None, split_vertex: None }],
            splits: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i]
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn simplex(&self, node: NodeId) -> &Simplex {
        &self.nodes[node.0].simplex
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.nodes[node.0].depth
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.nodes[node.0].first_child.is_none()
    }

    pub fn children(&self, node: NodeId) -> Option<impl Iterator<Item = NodeId>> {
        let n = &self.nodes[node.0];
        n.first_child.map(|f| (f..f + self.dim + 1).map(NodeId))
    }

    pub fn split_vertex_of(&self, node: NodeId) -> Option<usize> {
        self.nodes[node.0].split_vertex
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.first_child.is_none())
            .map(|(i, _)| NodeId(i))
    }

    pub fn leaf_count(&self) -> usize {
        1 + self.splits.len() * self.dim
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Split records in creation order; record `i` belongs to vertex `d+1+i`.
    pub fn splits(&self) -> &[SplitRecord] {
        &self.splits
    }

    pub fn split_record(&self, vertex: usize) -> Option<&SplitRecord> {
        vertex.checked_sub(self.dim + 1).and_then(|i| self.splits.get(i))
    }

    fn check_leaf(&self, leaf: NodeId) -> Result<()> {
        let node = self.nodes.get(leaf.0).ok_or(NbcsError::NoSuchNode(leaf.0))?;
        if node.first_child.is_some() {
            return Err(NbcsError::NotALeaf(leaf.0));
        }
        Ok(())
    }

    /// Splits `leaf` at the strictly interior point `p`; returns the new vertex index.
    pub fn split(&mut self, leaf: NodeId, p: &[f64]) -> Result<usize> {
        self.check_leaf(leaf)?;
        if p.len() != self.dim {
            return Err(NbcsError::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        let parent = &self.nodes[leaf.0];
        let beta = parent.simplex.barycentric(p);
        let min_coefficient = beta.iter().copied().fold(f64::INFINITY, f64::min);
        if min_coefficient < INTERIOR_THRESHOLD {
            return Err(NbcsError::NotInterior { min_coefficient });
        }
        let parent_vertices = parent.simplex.vertex_ids().to_vec();
        let depth = parent.depth + 1;
        let vertex = self.vertices.len();
        self.vertices.push(p.to_vec());

        let first_child = self.nodes.len();
        let mut children = Vec::with_capacity(self.dim + 1);
        for k in 0..=self.dim {
            let mut ids = parent_vertices.clone();
            ids[k] = vertex;
            match Simplex::new(ids, &self.vertices) {
                Ok(s) => children.push(Node { simplex: s, depth, first_child: None, split_vertex: None }),
                Err(e) => {
                    self.vertices.pop();
                    return Err(e);
                }
            }
        }
        self.nodes.extend(children);
        let node = &mut self.nodes[leaf.0];
        node.first_child = Some(first_child);
        node.split_vertex = Some(vertex);
        self.splits.push(SplitRecord { node: leaf, vertex, parent_vertices, beta });
        Ok(vertex)
    }

    /// Splits `leaf` at `p`, moving `p` toward the leaf barycenter when it is
    /// not interior enough or yields a degenerate child, and falling back to
    /// the barycenter itself.
    pub fn split_nudged(&mut self, leaf: NodeId, p: &[f64]) -> Result<(usize, Placement)> {
        self.check_leaf(leaf)?;
        if p.len() != self.dim {
            return Err(NbcsError::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        let simplex = &self.nodes[leaf.0].simplex;
        let min_coefficient = |x: &[f64]| {
            simplex.barycentric(x).into_iter().fold(f64::INFINITY, f64::min)
        };
        let c = simplex.barycenter(&self.vertices);
        let nudged: Vec<f64> = p.iter().zip(&c).map(|(pi, ci)| pi + NUDGE_FRACTION * (ci - pi)).collect();
        let mut candidates = Vec::with_capacity(2);
        if min_coefficient(p) >= INTERIOR_THRESHOLD {
            candidates.push((p.to_vec(), Placement::AsGiven));
        }
        if min_coefficient(&nudged) >= INTERIOR_THRESHOLD {
            candidates.push((nudged, Placement::Nudged));
        }
        for (point, placement) in candidates {
            match self.split(leaf, &point) {
                Ok(v) => return Ok((v, placement)),
                Err(NbcsError::DegenerateSimplex { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok((self.split(leaf, &c)?, Placement::Barycenter))
    }

    pub fn split_at_barycenter(&mut self, leaf: NodeId) -> Result<usize> {
        self.check_leaf(leaf)?;
        let c = self.nodes[leaf.0].simplex.barycenter(&self.vertices);
        self.split(leaf, &c)
    }

    /// Top-down descent to the lowest simplex containing `x`.
    ///
    /// At each internal node the child is chosen from the node's own
    /// coordinates: child `k` gets `α* = α_k/β_k` and `α_i − β_i α*` elsewhere.
    /// The child with the largest minimum coefficient wins, ties going to the
    /// lowest child index.
    pub fn locate(&self, x: &[f64]) -> Result<Location> {
        if x.len() != self.dim {
            return Err(NbcsError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let n = self.dim + 1;
        let mut node = 0usize;
        let mut coords = vec![0.0; n];
        self.nodes[0].simplex.barycentric_into(x, &mut coords);
        let mut solves = 1;
        if let Some((vertex, &coefficient)) = coords
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .filter(|(_, &a)| a < -DEFAULT_TOL)
        {
            return Err(NbcsError::OutsideRoot { vertex, coefficient });
        }
        while let Some(first) = self.nodes[node].first_child {
            let beta = &self.splits[self.split_index(node)].beta;
            let mut best = 0;
            let mut best_min = f64::NEG_INFINITY;
            for k in 0..n {
                let star = coords[k] / beta[k];
                let mut m = star;
                for i in 0..n {
                    if i != k {
                        m = m.min(coords[i] - beta[i] * star);
                    }
                }
                if m > best_min {
                    best_min = m;
                    best = k;
                }
            }
            node = first + best;
            self.nodes[node].simplex.barycentric_into(x, &mut coords);
            solves += 1;
        }
        Ok(Location { leaf: NodeId(node), coords, solves })
    }

    fn split_index(&self, node: usize) -> usize {
        let v = self.nodes[node].split_vertex.expect("internal node has a split vertex");
        v - self.dim - 1
    }

    pub fn embed(&self, x: &[f64]) -> Result<SparseEmbedding> {
        let loc = self.locate(x)?;
        Ok(self.embedding_from_location(&loc))
    }

    pub fn embedding_from_location(&self, loc: &Location) -> SparseEmbedding {
        let ids = self.nodes[loc.leaf.0].simplex.vertex_ids();
        let mut entries: Vec<(usize, f64)> = ids
            .iter()
            .zip(&loc.coords)
            .filter(|(_, a)| a.abs() > ZERO_COEFFICIENT)
            .map(|(&i, &a)| (i, a))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        SparseEmbedding { entries }
    }

    /// `Σ α_i q_i`.
    pub fn project_back(&self, e: &SparseEmbedding) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.dim];
        for &(i, a) in &e.entries {
            let q = self.vertices.get(i).ok_or(NbcsError::VertexOutOfRange {
                index: i,
                len: self.vertices.len(),
            })?;
            for (xk, qk) in x.iter_mut().zip(q) {
                *xk += a * qk;
            }
        }
        Ok(x)
    }

    pub fn decision_value(&self, w: &WeightVector, x: &[f64]) -> Result<f64> {
        self.check_weights(w)?;
        Ok(w.evaluate(&self.embed(x)?))
    }

    fn check_weights(&self, w: &WeightVector) -> Result<()> {
        if w.len() != self.vertices.len() {
            return Err(NbcsError::WeightLength { expected: self.vertices.len(), got: w.len() });
        }
        Ok(())
    }

    /// Extends `w` (defined on vertices `0..vertex`) with the β-weighted
    /// average of the parent weights for split vertex `vertex`.
    pub fn lift_weights(&self, w: &WeightVector, vertex: usize) -> Result<WeightVector> {
        let record = self
            .split_record(vertex)
            .ok_or(NbcsError::VertexOutOfRange { index: vertex, len: self.vertices.len() })?;
        if w.len() != vertex {
            return Err(NbcsError::WeightLength { expected: vertex, got: w.len() });
        }
        let mut out = w.clone();
        out.push(lifted_weight(w, record));
        if record.parent_vertices.iter().any(|&i| w.is_excluded(i)) {
            out.weights.pop();
            out.excluded.pop();
            out.push_excluded();
        }
        Ok(out)
    }

    /// Lifts `w` through every split it does not cover yet.
    pub fn lift_to_current(&self, w: &WeightVector) -> Result<WeightVector> {
        let mut out = w.clone();
        while out.len() < self.vertices.len() {
            out = self.lift_weights(&out, out.len())?;
        }
        Ok(out)
    }

    /// `max_i |α_{i,t}(x) − α_{i,t+1}(x) − β_i α*(x)|` for the split that
    /// created `vertex`, with `x` inside the split node.
    pub fn coefficient_recurrence_check(&self, x: &[f64], vertex: usize) -> Result<f64> {
        let record = self
            .split_record(vertex)
            .ok_or(NbcsError::VertexOutOfRange { index: vertex, len: self.vertices.len() })?;
        let parent = &self.nodes[record.node.0];
        let before = parent.simplex.barycentric(x);
        let first = parent.first_child.expect("split node has children");
        let n = self.dim + 1;
        // child containing x: largest minimum coefficient, lowest index on ties
        let mut best = (f64::NEG_INFINITY, 0usize, Vec::new());
        for k in 0..n {
            let a = self.nodes[first + k].simplex.barycentric(x);
            let m = a.iter().copied().fold(f64::INFINITY, f64::min);
            if m > best.0 {
                best = (m, k, a);
            }
        }
        let (_, k, after) = best;
        let star = after[k];
        let mut residual: f64 = 0.0;
        for i in 0..n {
            let after_i = if i == k { 0.0 } else { after[i] };
            residual = residual.max((before[i] - after_i - record.beta[i] * star).abs());
        }
        Ok(residual)
    }

    /// Serializable description: root vertices plus the split sequence.
    pub fn to_record(&self) -> SystemRecord {
        SystemRecord {
            dim: self.dim,
            root_vertices: self.vertices[..=self.dim].to_vec(),
            splits: self
                .splits
                .iter()
                .map(|s| SplitEntry { node: s.node.0, point: self.vertices[s.vertex].clone() })
                .collect(),
        }
    }

    /// Rebuilds a system by replaying its split sequence.
    pub fn from_record(record: &SystemRecord) -> Result<Self> {
        if record.root_vertices.len() != record.dim + 1 {
            return Err(NbcsError::ModelFormat(format!(
                "root has {} vertices, expected {}",
                record.root_vertices.len(),
                record.dim + 1
            )));
        }
        let mut sys = Self::from_root(record.root_vertices.clone())?;
        for (i, s) in record.splits.iter().enumerate() {
            if s.node >= sys.nodes.len() {
                return Err(NbcsError::ModelFormat(format!("split {i} targets unknown node {}", s.node)));
            }
            sys.split(NodeId(s.node), &s.point)
                .map_err(|e| NbcsError::ModelFormat(format!("split {i}: {e}")))?;
        }
        Ok(sys)
    }
}

fn lifted_weight(w: &WeightVector, record: &SplitRecord) -> f64 {
    record
        .parent_vertices
        .iter()
        .zip(&record.beta)
        .map(|(&i, &b)| b * w.values()[i])
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub node: usize,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub dim: usize,
    pub root_vertices: Vec<Vec<f64>>,
    pub splits: Vec<SplitEntry>,
}

/// Weights over `s`'s vertices whose zero set is the hyperplane through the
/// `d` given points, unit Euclidean norm, first nonzero entry positive.
///
/// The null space of the `d x (d+1)` matrix of embeddings is spanned by the
/// signed maximal minors (generalized cross product).
pub fn hyperplane_weights(s: &Simplex, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = s.dim();
    if points.len() != d {
        return Err(NbcsError::DimensionMismatch { expected: d, got: points.len() });
    }
    let rows: Vec<Vec<f64>> = points.iter().map(|p| s.barycentric(p)).collect();
    let mut w = vec![0.0; d + 1];
    for (j, wj) in w.iter_mut().enumerate() {
        let minor = nalgebra::DMatrix::from_fn(d, d, |r, c| rows[r][if c < j { c } else { c + 1 }]);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *wj = sign * minor.determinant();
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale: f64 = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).product();
    if norm <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(NbcsError::RankDeficient);
    }
    let first = w.iter().copied().find(|v| v.abs() > 1e-12 * norm).unwrap_or(1.0);
    let sign = if first < 0.0 { -1.0 } else { 1.0 };
    Ok(w.into_iter().map(|v| sign * v / norm).collect())
}
