//! Browser bindings: polygon approximation, planar classification and point
//! embedding, each returning SVG markup for the demo page.

use std::fmt::Write;

use nbcs::approx::{approximate, ApproxConfig, ApproxResult, MAX_STAGES};
use nbcs::learner::{fit, FitParams, LabeledDataset, Model, Strategy};
use nbcs::svg::{approx_svg, model_svg};
use nbcs::{NestedSystem, Polygon2D};
use wasm_bindgen::prelude::*;

const MAX_EMBED_STAGES: usize = 5;

fn pairs(flat: &[f64]) -> Result<Vec<[f64; 2]>, String> {
    if !flat.len().is_multiple_of(2) {
        return Err(format!("expected x,y pairs, got {} numbers", flat.len()));
    }
    Ok(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
}

/// Outer approximation of a convex polygon given as flat `x0,y0,x1,y1,...`.
#[wasm_bindgen]
pub struct Approximation {
    result: ApproxResult,
}

impl Approximation {
    pub fn build(polygon: &[f64], stages: usize) -> Result<Self, String> {
        if stages > MAX_STAGES {
            return Err(format!("at most {MAX_STAGES} stages"));
        }
        let target = Polygon2D::new(pairs(polygon)?).map_err(|e| e.to_string())?;
        let result = approximate(&ApproxConfig::new(target, stages)).map_err(|e| e.to_string())?;
        Ok(Self { result })
    }

    pub fn panel(&self, stage: usize) -> Result<String, String> {
        approx_svg(&self.result, stage).map_err(|e| e.to_string())
    }
}

#[wasm_bindgen]
impl Approximation {
    #[wasm_bindgen(constructor)]
    pub fn new(polygon: &[f64], stages: usize) -> Result<Approximation, JsError> {
        Self::build(polygon, stages).map_err(|e| JsError::new(&e))
    }

    pub fn stages(&self) -> usize {
        self.result.stages.len() - 1
    }

    pub fn svg(&self, stage: usize) -> Result<String, JsError> {
        self.panel(stage).map_err(|e| JsError::new(&e))
    }

    pub fn excess_ratio(&self, stage: usize) -> f64 {
        self.result.stages.get(stage).map_or(f64::NAN, |m| m.excess_ratio)
    }

    pub fn metrics_csv(&self) -> String {
        self.result.metrics_csv()
    }
}

/// Planar classifier trained on clicked points.
#[wasm_bindgen]
pub struct Classifier {
    model: Model,
    data: LabeledDataset,
}

impl Classifier {
    pub fn train(points: &[f64], labels: &[i32], strategy: &str, q: usize, c: f64) -> Result<Self, String> {
        let pts = pairs(points)?;
        if pts.len() != labels.len() {
            return Err(format!("{} points but {} labels", pts.len(), labels.len()));
        }
        let strategy: Strategy = strategy.parse().map_err(|e: nbcs::NbcsError| e.to_string())?;
        let data = LabeledDataset::new(
            pts.iter().map(|p| p.to_vec()).collect(),
            labels.iter().map(|&l| i64::from(l)).collect(),
        )
        .map_err(|e| e.to_string())?;
        let params = FitParams { q, c, ..FitParams::default() };
        let model = fit(&data, strategy, &params).map_err(|e| e.to_string())?;
        Ok(Self { model, data })
    }

    pub fn render(&self, grid: usize) -> Result<String, String> {
        model_svg(&self.model, Some(&self.data), grid).map_err(|e| e.to_string())
    }
}

#[wasm_bindgen]
impl Classifier {
    #[wasm_bindgen(constructor)]
    pub fn new(points: &[f64], labels: &[i32], strategy: &str, q: usize, c: f64) -> Result<Classifier, JsError> {
        Self::train(points, labels, strategy, q, c).map_err(|e| JsError::new(&e))
    }

    pub fn svg(&self, grid: usize) -> Result<String, JsError> {
        self.render(grid).map_err(|e| JsError::new(&e))
    }

    pub fn predict(&self, x: f64, y: f64) -> i32 {
        self.model.predict(&[x, y]) as i32
    }

    pub fn train_accuracy(&self) -> f64 {
        self.model.accuracy(&self.data)
    }

    pub fn leaves(&self) -> usize {
        self.model.leaf_count()
    }
}

/// Sparse embedding of one point of the unit-edge triangle under uniform
/// barycentric subdivision.
#[wasm_bindgen]
pub struct Embedding {
    indices: Vec<u32>,
    coefficients: Vec<f64>,
    svg: String,
}

impl Embedding {
    pub fn compute(x: f64, y: f64, stages: usize) -> Result<Self, String> {
        if stages > MAX_EMBED_STAGES {
            return Err(format!("at most {MAX_EMBED_STAGES} stages"));
        }
        let mut sys = NestedSystem::regular(2).map_err(|e| e.to_string())?;
        for _ in 0..stages {
            let leaves: Vec<_> = sys.leaves().collect();
            for leaf in leaves {
                sys.split_at_barycenter(leaf).map_err(|e| e.to_string())?;
            }
        }
        let loc = sys.locate(&[x, y]).map_err(|e| e.to_string())?;
        let e = sys.embedding_from_location(&loc);
        let svg = embedding_svg(&sys, loc.leaf, [x, y], &e.entries);
        Ok(Self {
            indices: e.entries.iter().map(|&(i, _)| i as u32).collect(),
            coefficients: e.entries.iter().map(|&(_, a)| a).collect(),
            svg,
        })
    }
}

#[wasm_bindgen]
impl Embedding {
    #[wasm_bindgen(constructor)]
    pub fn new(x: f64, y: f64, stages: usize) -> Result<Embedding, JsError> {
        Self::compute(x, y, stages).map_err(|e| JsError::new(&e))
    }

    pub fn indices(&self) -> Vec<u32> {
        self.indices.clone()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.coefficients.clone()
    }

    pub fn svg(&self) -> String {
        self.svg.clone()
    }
}

const SIDE: f64 = 600.0;
const PAD: f64 = 30.0;

fn to_canvas(p: &[f64]) -> (f64, f64) {
    (PAD + p[0] * SIDE, PAD + (3f64.sqrt() / 2.0 - p[1]) * SIDE)
}

fn triangle_points(sys: &NestedSystem, node: nbcs::NodeId) -> String {
    sys.simplex(node)
        .vertex_ids()
        .iter()
        .map(|&i| {
            let (x, y) = to_canvas(sys.vertex(i));
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn embedding_svg(sys: &NestedSystem, leaf: nbcs::NodeId, p: [f64; 2], entries: &[(usize, f64)]) -> String {
    let w = SIDE + 2.0 * PAD;
    let h = SIDE * 3f64.sqrt() / 2.0 + 2.0 * PAD;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(out, r##"<polygon points="{}" fill="#fdd49e" stroke="none"/>"##, triangle_points(sys, leaf));
    let _ = writeln!(out, r##"<g fill="none" stroke="#888888" stroke-width="0.8">"##);
    for node in sys.leaves() {
        let _ = writeln!(out, r#"<polygon points="{}"/>"#, triangle_points(sys, node));
    }
    let _ = writeln!(out, "</g>");
    for &(i, a) in entries {
        let (vx, vy) = to_canvas(sys.vertex(i));
        let _ = writeln!(out, r##"<circle cx="{vx:.2}" cy="{vy:.2}" r="{:.2}" fill="#d94801"/>"##, 3.0 + 9.0 * a.max(0.0));
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13">{i}: {a:.3}</text>"#,
            vx + 8.0,
            vy - 8.0
        );
    }
    let (px, py) = to_canvas(&p);
    let _ = writeln!(out, r##"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="#08519c"/>"##);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const PENTAGON: [f64; 10] = [0.35, 0.15, 0.65, 0.17, 0.72, 0.38, 0.5, 0.58, 0.30, 0.36];

    #[test]
    fn approximation_panels_cover_every_stage() {
        let a = Approximation::build(&PENTAGON, 3).unwrap();
        assert_eq!(a.stages(), 3);
        for s in 0..=3 {
            assert!(a.panel(s).unwrap().starts_with("<svg"));
        }
        assert!(a.panel(4).is_err());
        assert!(a.excess_ratio(3) < a.excess_ratio(1));
        assert_eq!(a.metrics_csv().lines().count(), 5);
    }

    #[test]
    fn approximation_rejects_bad_input() {
        assert!(Approximation::build(&PENTAGON[..9], 2).is_err());
        assert!(Approximation::build(&PENTAGON, MAX_STAGES + 1).is_err());
        assert!(Approximation::build(&[0.1, 0.1, 0.2, 0.2], 1).is_err());
    }

    #[test]
    fn classifier_separates_clicked_clusters() {
        let points = [0.0, 0.0, 0.1, 0.2, 0.2, 0.1, 1.0, 1.0, 0.9, 0.8, 0.8, 0.9];
        let labels = [0, 0, 0, 1, 1, 1];
        let c = Classifier::train(&points, &labels, "adaptive", 2, 64.0).unwrap();
        assert_eq!(c.train_accuracy(), 1.0);
        assert_eq!(c.predict(0.05, 0.05), 0);
        assert_eq!(c.predict(0.95, 0.95), 1);
        assert!(c.render(20).unwrap().contains("<circle"));
        assert!(Classifier::train(&points, &labels[..5], "uniform", 1, 1.0).is_err());
        assert!(Classifier::train(&points, &labels, "spiral", 1, 1.0).is_err());
    }

    #[test]
    fn embedding_coefficients_reconstruct_the_point() {
        let e = Embedding::compute(0.4, 0.3, 3).unwrap();
        assert_eq!(e.indices.len(), e.coefficients.len());
        assert!(e.indices.len() <= 3);
        assert!((e.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(e.svg.contains("<text"));
        assert!(Embedding::compute(5.0, 5.0, 1).is_err());
        assert!(Embedding::compute(0.4, 0.3, MAX_EMBED_STAGES + 1).is_err());
    }
}
