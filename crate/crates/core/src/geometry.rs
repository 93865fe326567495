//! Simplex geometry: regular simplex construction, barycentric solves,
//! containment, volumes, and planar convex polygon clipping.
//!
//! Points are plain `&[f64]` slices. A [`Simplex`] only stores the global
//! indices of its vertices plus the cached inverse of its augmented vertex
//! matrix, so coordinate solves cost O(d²) after an O(d³) setup.

use nalgebra::DMatrix;

use crate::error::{NbcsError, Result};

/// Default absolute tolerance on barycentric coefficients.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `|det(Q)|` must exceed this times the product of the augmented column norms.
pub const DEGENERACY_RATIO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Simplex {
    vertex_ids: Vec<usize>,
    /// Row-major `(d+1) x (d+1)` inverse of `Q = [q_0 .. q_d; 1 .. 1]`.
    inv: Vec<f64>,
    abs_det: f64,
}

impl Simplex {
    /// Builds a simplex over `vertex_ids`, looking coordinates up in `vertices`.
    pub fn new(vertex_ids: Vec<usize>, vertices: &[Vec<f64>]) -> Result<Self> {
        let n = vertex_ids.len();
        if n < 2 {
            return Err(NbcsError::ZeroDimension);
        }
        let d = n - 1;
        for &id in &vertex_ids {
            let v = vertices.get(id).ok_or(NbcsError::VertexOutOfRange {
                index: id,
                len: vertices.len(),
            })?;
            if v.len() != d {
                return Err(NbcsError::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        let q = DMatrix::from_fn(n, n, |r, c| {
            if r < d {
                vertices[vertex_ids[c]][r]
            } else {
                1.0
            }
        });
        let det = q.clone().lu().determinant();
        let scale: f64 = q.column_iter().map(|c| c.norm()).product();
        let threshold = DEGENERACY_RATIO * scale;
        if !det.is_finite() || det.abs() <= threshold {
            return Err(NbcsError::DegenerateSimplex { det, threshold });
        }
        let inv = q
            .try_inverse()
            .ok_or(NbcsError::DegenerateSimplex { det, threshold })?;
        let mut flat = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                flat.push(inv[(r, c)]);
            }
        }
        Ok(Self { vertex_ids, inv: flat, abs_det: det.abs() })
    }

    pub fn dim(&self) -> usize {
        self.vertex_ids.len() - 1
    }

    pub fn vertex_ids(&self) -> &[usize] {
        &self.vertex_ids
    }

    /// Row `i` of the cached inverse: `α_i(x) = row · (x, 1)`.
    pub fn inverse_row(&self, i: usize) -> &[f64] {
        let n = self.vertex_ids.len();
        &self.inv[i * n..(i + 1) * n]
    }

    /// Barycentric coordinates of `x`, written into `out` (length d+1).
    pub fn barycentric_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.vertex_ids.len();
        let d = n - 1;
        debug_assert_eq!(x.len(), d);
        for (i, slot) in out.iter_mut().enumerate().take(n) {
            let row = &self.inv[i * n..(i + 1) * n];
            let mut acc = row[d];
            for j in 0..d {
                acc += row[j] * x[j];
            }
            *slot = acc;
        }
    }

    pub fn barycentric(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.vertex_ids.len()];
        self.barycentric_into(x, &mut out);
        out
    }

    /// True iff every coefficient is at least `-tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.barycentric(x).iter().all(|&a| a >= -tol)
    }

    pub fn barycenter(&self, vertices: &[Vec<f64>]) -> Vec<f64> {
        let d = self.dim();
        let mut c = vec![0.0; d];
        for &id in &self.vertex_ids {
            for (ci, vi) in c.iter_mut().zip(&vertices[id]) {
                *ci += vi;
            }
        }
        let k = (d + 1) as f64;
        c.iter_mut().for_each(|v| *v /= k);
        c
    }

    /// Largest pairwise vertex distance.
    pub fn diameter(&self, vertices: &[Vec<f64>]) -> f64 {
        let mut best: f64 = 0.0;
        for (a, &i) in self.vertex_ids.iter().enumerate() {
            for &j in &self.vertex_ids[a + 1..] {
                best = best.max(distance(&vertices[i], &vertices[j]));
            }
        }
        best
    }

    /// `|det(Q)| / d!`.
    pub fn volume(&self) -> f64 {
        let d = self.dim();
        self.abs_det / (1..=d).map(|k| k as f64).product::<f64>()
    }

    /// Point on the segment from the barycenter to `x` that lies inside the
    /// simplex and is closest to `x`. Returns `x` itself when already inside.
    pub fn clamp_toward_barycenter(&self, vertices: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let alpha = self.barycentric(x);
        let uniform = 1.0 / alpha.len() as f64;
        let mut t: f64 = 1.0;
        for &a in &alpha {
            if a < 0.0 {
                t = t.min(uniform / (uniform - a));
            }
        }
        if t >= 1.0 {
            return x.to_vec();
        }
        let c = self.barycenter(vertices);
        c.iter().zip(x).map(|(ci, xi)| ci + t * (xi - ci)).collect()
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Unit-side regular simplex in R^d with its first vertex at the origin.
///
/// The vertices are `e_i / √2` in R^{d+1}, translated so that `e_0 / √2`
/// sits at the origin and expressed in a Helmert basis of the hyperplane
/// `Σ x_i = 0`. Returns the vertex coordinates and the simplex over ids `0..=d`.
pub fn regular_simplex(d: usize) -> Result<(Vec<Vec<f64>>, Simplex)> {
    if d == 0 {
        return Err(NbcsError::ZeroDimension);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut vertices = vec![vec![0.0; d]; d + 1];
    for (i, v) in vertices.iter_mut().enumerate().skip(1) {
        // (e_i - e_0)/√2 projected on u_k = -(1,..,1,-k,0,..)/√(k(k+1)), k = 1..=d
        for k in 1..=d {
            let norm = ((k * (k + 1)) as f64).sqrt();
            let u = |j: usize| -> f64 {
                if j < k {
                    -1.0 / norm
                } else if j == k {
                    k as f64 / norm
                } else {
                    0.0
                }
            };
            v[k - 1] = s * (u(i) - u(0));
        }
    }
    let simplex = Simplex::new((0..=d).collect(), &vertices)?;
    Ok((vertices, simplex))
}

/// Closed-form volume of the unit-side regular d-simplex, `√(d+1) / (d! √(2^d))`.
pub fn regular_simplex_volume(d: usize) -> f64 {
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    ((d + 1) as f64).sqrt() / (fact * 2f64.powi(d as i32).sqrt())
}

/// Convex planar polygon, vertices stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2D {
    vertices: Vec<[f64; 2]>,
}

impl Polygon2D {
    /// Accepts a convex vertex loop in either orientation and stores it CCW.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(NbcsError::InvalidPolygon(format!(
                "{} vertices, need at least 3",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(NbcsError::InvalidPolygon("non-finite coordinate".into()));
        }
        let signed = signed_area(&vertices);
        if signed.abs() <= 1e-15 {
            return Err(NbcsError::InvalidPolygon("zero area".into()));
        }
        if signed < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if cross(a, b, c) < -1e-12 {
                return Err(NbcsError::InvalidPolygon("not convex".into()));
            }
        }
        Ok(Self { vertices })
    }

    /// Wraps a clipping result; the loop may be degenerate.
    fn from_clipped(vertices: Vec<[f64; 2]>) -> Option<Self> {
        (vertices.len() >= 3).then_some(Self { vertices })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    /// Keeps the part where `a·x + b·y + c ≥ 0`.
    pub fn clip_halfplane(&self, a: f64, b: f64, c: f64) -> Option<Self> {
        clip_loop(&self.vertices, a, b, c).and_then(Self::from_clipped)
    }

    /// Intersection with a 2-simplex whose coordinates live in `vertices`.
    pub fn clip_to_simplex(&self, s: &Simplex) -> Option<Self> {
        assert_eq!(s.dim(), 2, "clip_to_simplex requires a triangle");
        let mut current = self.vertices.clone();
        for i in 0..3 {
            let row = s.inverse_row(i);
            current = clip_loop(&current, row[0], row[1], row[2])?;
        }
        Self::from_clipped(current)
    }

    pub fn triangle(s: &Simplex, vertices: &[Vec<f64>]) -> Self {
        let v: Vec<[f64; 2]> = s
            .vertex_ids()
            .iter()
            .map(|&id| [vertices[id][0], vertices[id][1]])
            .collect();
        let mut p = Self { vertices: v };
        if signed_area(&p.vertices) < 0.0 {
            p.vertices.reverse();
        }
        p
    }
}

/// Shoelace area of an arbitrary vertex loop (absolute value).
pub fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    signed_area(vertices).abs()
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..v.len() {
        let (p, q) = (v[i], v[(i + 1) % v.len()]);
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}

fn cross(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Sutherland–Hodgman against one half-plane. `None` when nothing is left.
fn clip_loop(input: &[[f64; 2]], a: f64, b: f64, c: f64) -> Option<Vec<[f64; 2]>> {
    let f = |p: [f64; 2]| a * p[0] + b * p[1] + c;
    let mut out = Vec::with_capacity(input.len() + 1);
    for i in 0..input.len() {
        let p = input[i];
        let q = input[(i + 1) % input.len()];
        let (fp, fq) = (f(p), f(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out.dedup_by(|x, y| (x[0] - y[0]).abs() < 1e-15 && (x[1] - y[1]).abs() < 1e-15);
    if out.len() > 1 {
        let (first, last) = (out[0], out[out.len() - 1]);
        if (first[0] - last[0]).abs() < 1e-15 && (first[1] - last[1]).abs() < 1e-15 {
            out.pop();
        }
    }
    (!out.is_empty()).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri() -> (Vec<Vec<f64>>, Simplex) {
        let v = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = Simplex::new(vec![0, 1, 2], &v).unwrap();
        (v, s)
    }

    #[test]
    fn regular_simplex_has_unit_sides() {
        for d in 1..=7 {
            let (v, s) = regular_simplex(d).unwrap();
            assert_eq!(v.len(), d + 1);
            assert!(v[0].iter().all(|&x| x == 0.0));
            for i in 0..=d {
                for j in i + 1..=d {
                    assert_relative_eq!(distance(&v[i], &v[j]), 1.0, epsilon = 1e-12);
                }
            }
            assert_relative_eq!(s.diameter(&v), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn regular_simplex_volume_matches_closed_form() {
        assert_relative_eq!(regular_simplex_volume(2), 3f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_relative_eq!(regular_simplex_volume(3), 1.0 / (6.0 * 2f64.sqrt()), epsilon = 1e-15);
        for d in 1..=6 {
            let (_, s) = regular_simplex(d).unwrap();
            let want = regular_simplex_volume(d);
            assert!(((s.volume() - want) / want).abs() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(regular_simplex(0), Err(NbcsError::ZeroDimension)));
    }

    #[test]
    fn degenerate_simplex_rejected() {
        let v = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(
            Simplex::new(vec![0, 1, 2], &v),
            Err(NbcsError::DegenerateSimplex { .. })
        ));
    }

    #[test]
    fn cached_inverse_is_an_inverse() {
        let (v, s) = regular_simplex(5).unwrap();
        let n = 6;
        for i in 0..n {
            for (j, vj) in v.iter().enumerate() {
                let row = s.inverse_row(i);
                let acc = row[5] + row[..5].iter().zip(vj).map(|(r, x)| r * x).sum::<f64>();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn barycentric_special_points() {
        let (v, s) = tri();
        let c = s.barycenter(&v);
        assert_relative_eq!(c[0], 1.0 / 3.0);
        assert_relative_eq!(c[1], 1.0 / 3.0);
        for a in s.barycentric(&c) {
            assert_relative_eq!(a, 1.0 / 3.0, epsilon = 1e-15);
        }
        for (i, q) in v.iter().enumerate() {
            let a = s.barycentric(q);
            for (j, aj) in a.iter().enumerate() {
                assert_relative_eq!(*aj, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
        let a = s.barycentric(&[0.5, 0.0]);
        assert_relative_eq!(a[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(a[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(a[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn containment() {
        let (v, s) = tri();
        assert!(s.contains(&s.barycenter(&v), DEFAULT_TOL));
        assert!(!s.contains(&[2.0, 2.0], DEFAULT_TOL));
        assert!(s.contains(&[0.5, 0.5], DEFAULT_TOL));
        assert!(s.contains(&[0.3, 0.0], DEFAULT_TOL));
    }

    #[test]
    fn barycenter_distance_in_unit_triangle() {
        let (v, s) = regular_simplex(2).unwrap();
        let c = s.barycenter(&v);
        for q in &v {
            let dist = distance(&c, q);
            assert_relative_eq!(dist, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
            assert!(dist <= 2.0 / 3.0);
        }
    }

    fn random_simplex(rng: &mut ChaCha8Rng, d: usize) -> (Vec<Vec<f64>>, Simplex) {
        loop {
            let v: Vec<Vec<f64>> = (0..=d)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            if let Ok(s) = Simplex::new((0..=d).collect(), &v) {
                if s.volume() > 1e-4 {
                    return (v, s);
                }
            }
        }
    }

    fn random_interior(rng: &mut ChaCha8Rng, v: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let mut w: Vec<f64> = (0..v.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let d = v[0].len();
        let mut x = vec![0.0; d];
        for (wi, q) in w.iter().zip(v) {
            for k in 0..d {
                x[k] += wi * q[k];
            }
        }
        (x, w)
    }

    #[test]
    fn reconstruction_and_partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let d = 1 + trial % 6;
            let (v, s) = random_simplex(&mut rng, d);
            let (x, _) = random_interior(&mut rng, &v);
            let a = s.barycentric(&x);
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mut back = vec![0.0; d];
            for (ai, q) in a.iter().zip(&v) {
                for k in 0..d {
                    back[k] += ai * q[k];
                }
            }
            let err = back.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "d={d} err={err}");
        }
    }

    #[test]
    fn barycenter_to_vertex_bounded_by_diameter_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..500 {
            let d = 1 + trial % 6;
            let (v, s) = random_simplex(&mut rng, d);
            let c = s.diameter(&v);
            let b = s.barycenter(&v);
            for q in &v {
                assert!(distance(&b, q) <= c * d as f64 / (d + 1) as f64 + 1e-9);
            }
        }
    }

    #[test]
    fn polygon_area_cases() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_relative_eq!(polygon_area(&square), 1.0);
        let (v, s) = regular_simplex(2).unwrap();
        assert_relative_eq!(Polygon2D::triangle(&s, &v).area(), 3f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_eq!(polygon_area(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), 0.0);
    }

    #[test]
    fn polygon_validation() {
        assert!(Polygon2D::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(Polygon2D::new(vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
        let dart = vec![[0.0, 0.0], [2.0, 0.0], [0.5, 0.5], [0.0, 2.0]];
        assert!(Polygon2D::new(dart).is_err());
        let cw = Polygon2D::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(signed_area(cw.vertices()) > 0.0);
    }

    #[test]
    fn clipping_cases() {
        let (v, s) = tri();
        let inner = Polygon2D::new(vec![[0.1, 0.1], [0.3, 0.1], [0.1, 0.3]]).unwrap();
        let clipped = inner.clip_to_simplex(&s).unwrap();
        assert_relative_eq!(clipped.area(), inner.area(), epsilon = 1e-15);
        assert_eq!(clipped.vertices().len(), 3);

        let far = Polygon2D::new(vec![[2.0, 2.0], [3.0, 2.0], [2.0, 3.0]]).unwrap();
        assert!(far.clip_to_simplex(&s).is_none());

        let square = Polygon2D::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let half = square.clip_halfplane(-1.0, 0.0, 0.5).unwrap();
        assert_relative_eq!(half.area(), 0.5, epsilon = 1e-15);

        let both = square.clip_to_simplex(&s).unwrap();
        assert_relative_eq!(both.area(), 0.5, epsilon = 1e-15);
        assert!(both.area() <= square.area().min(Polygon2D::triangle(&s, &v).area()) + 1e-15);
    }

    #[test]
    fn complementary_clips_partition_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (v, s) = random_simplex(&mut rng, 2);
            let n = rng.random_range(3..9);
            let r = rng.random_range(0.2..1.5);
            let (cx, cy) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let poly = Polygon2D::new(
                (0..n)
                    .map(|k| {
                        let t = std::f64::consts::TAU * k as f64 / n as f64;
                        [cx + r * t.cos(), cy + r * t.sin()]
                    })
                    .collect(),
            )
            .unwrap();
            let inside = poly.clip_to_simplex(&s).map_or(0.0, |p| p.area());
            // p \ s is the disjoint union of {α_0<0}, {α_0≥0, α_1<0}, {α_0≥0, α_1≥0, α_2<0}
            let mut outside = 0.0;
            let mut kept = Some(poly.clone());
            for i in 0..3 {
                let row = s.inverse_row(i);
                let Some(k) = kept.clone() else { break };
                outside += k.clip_halfplane(-row[0], -row[1], -row[2]).map_or(0.0, |p| p.area());
                kept = k.clip_halfplane(row[0], row[1], row[2]);
            }
            assert!((inside + outside - poly.area()).abs() < 1e-9);
            let _ = &v;
        }
    }
}
