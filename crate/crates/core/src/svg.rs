//! SVG rendering for planar approximations and planar classifiers.

use std::fmt::Write;

use crate::approx::ApproxResult;
use crate::error::{NbcsError, Result};
use crate::learner::{LabeledDataset, Model};
use crate::system::NestedSystem;

const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 900.0;
const MARGIN: f64 = 40.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Maps data coordinates onto the canvas with a common scale and flipped y.
#[derive(Debug, Clone, Copy)]
struct Viewport {
    min: [f64; 2],
    scale: f64,
    offset: [f64; 2],
}

impl Viewport {
    fn fit(min: [f64; 2], max: [f64; 2]) -> Self {
        let span = [(max[0] - min[0]).max(1e-12), (max[1] - min[1]).max(1e-12)];
        let scale = ((WIDTH - 2.0 * MARGIN) / span[0]).min((HEIGHT - 2.0 * MARGIN) / span[1]);
        let offset = [(WIDTH - scale * span[0]) / 2.0, (HEIGHT - scale * span[1]) / 2.0];
        Self { min, scale, offset }
    }

    fn map(&self, p: &[f64]) -> (f64, f64) {
        let x = self.offset[0] + (p[0] - self.min[0]) * self.scale;
        let y = HEIGHT - (self.offset[1] + (p[1] - self.min[1]) * self.scale);
        (x, y)
    }

    fn points(&self, pts: &[[f64; 2]]) -> String {
        pts.iter()
            .map(|p| {
                let (x, y) = self.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn open(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
}

fn bounds(points: impl Iterator<Item = [f64; 2]>) -> ([f64; 2], [f64; 2]) {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in points {
        for j in 0..2 {
            min[j] = min[j].min(p[j]);
            max[j] = max[j].max(p[j]);
        }
    }
    (min, max)
}

fn cell_corners(sys: &NestedSystem, node: crate::system::NodeId) -> Vec<[f64; 2]> {
    sys.simplex(node).vertex_ids().iter().map(|&i| [sys.vertex(i)[0], sys.vertex(i)[1]]).collect()
}

/// One panel of an approximation run: the stage's cells, its region
/// `{f ≥ 0}` and the target outline.
pub fn approx_svg(result: &ApproxResult, stage: usize) -> Result<String> {
    if stage >= result.stages.len() {
        return Err(NbcsError::InvalidParameter(format!(
            "stage {stage} not computed (have 0..{})",
            result.stages.len() - 1
        )));
    }
    let sys = &result.system;
    let root = cell_corners(sys, sys.root());
    let (min, max) = bounds(root.iter().copied());
    let vp = Viewport::fit(min, max);
    let mut out = String::new();
    open(&mut out);
    for piece in result.stage_region_pieces(stage) {
        let _ = writeln!(out, r##"<polygon points="{}" fill="#9ecae1" stroke="none"/>"##, vp.points(piece.vertices()));
    }
    let _ = writeln!(out, r##"<g fill="none" stroke="#999999" stroke-width="0.6">"##);
    for cell in result.stage_cells(stage) {
        let _ = writeln!(out, r#"<polygon points="{}"/>"#, vp.points(&cell_corners(sys, cell)));
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<polygon points="{}" fill="none" stroke="#000000" stroke-width="2"/>"##, vp.points(&root));
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="none" stroke="#d62728" stroke-width="2.5"/>"##,
        vp.points(result.target.vertices())
    );
    let m = &result.stages[stage];
    let _ = writeln!(
        out,
        r#"<text x="20" y="30" font-family="sans-serif" font-size="20">stage {} · {} cells · excess {:.4}</text>"#,
        m.stage, m.leaves, m.excess_ratio
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Decision regions of a planar model on a `grid × grid` raster, with leaf
/// edges and optionally the data points.
pub fn model_svg(model: &Model, data: Option<&LabeledDataset>, grid: usize) -> Result<String> {
    if model.dim() != 2 {
        return Err(NbcsError::PlanarOnly(model.dim()));
    }
    if grid == 0 {
        return Err(NbcsError::InvalidParameter("grid must be positive".into()));
    }
    let sys = &model.system;
    let to_input = |p: &[f64]| {
        let x = model.transform.invert(p);
        [x[0], x[1]]
    };
    let (mut min, mut max) = match data.filter(|d| !d.is_empty()) {
        Some(d) => bounds(d.points.iter().map(|p| [p[0], p[1]])),
        None => bounds(cell_corners(sys, sys.root()).iter().map(|c| to_input(c))),
    };
    for j in 0..2 {
        let pad = 0.08 * (max[j] - min[j]).max(1e-9);
        min[j] -= pad;
        max[j] += pad;
    }
    let vp = Viewport::fit(min, max);
    let mut out = String::new();
    open(&mut out);
    let _ = writeln!(out, r#"<g opacity="0.35" shape-rendering="crispEdges">"#);
    let (dx, dy) = ((max[0] - min[0]) / grid as f64, (max[1] - min[1]) / grid as f64);
    for i in 0..grid {
        for j in 0..grid {
            let corner = [min[0] + i as f64 * dx, min[1] + (j + 1) as f64 * dy];
            let center = [min[0] + (i as f64 + 0.5) * dx, min[1] + (j as f64 + 0.5) * dy];
            let class = model.predict(&center);
            let color = class_color(model, class);
            let (x, y) = vp.map(&corner);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                dx * vp.scale + 0.5,
                dy * vp.scale + 0.5
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let (x0, y0) = vp.map(&[min[0], max[1]]);
    let (x1, y1) = vp.map(&[max[0], min[1]]);
    let _ = writeln!(
        out,
        r#"<clipPath id="plot"><rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(out, r##"<g fill="none" stroke="#555555" stroke-width="0.7" clip-path="url(#plot)">"##);
    for leaf in sys.leaves() {
        let corners: Vec<[f64; 2]> = cell_corners(sys, leaf).iter().map(|c| to_input(c)).collect();
        let _ = writeln!(out, r#"<polygon points="{}"/>"#, vp.points(&corners));
    }
    let _ = writeln!(out, "</g>");
    if let Some(d) = data {
        let _ = writeln!(out, r##"<g stroke="#222222" stroke-width="0.8">"##);
        for (p, &l) in d.points.iter().zip(&d.labels) {
            let (x, y) = vp.map(p);
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{}"/>"#, class_color(model, l));
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn class_color(model: &Model, class: i64) -> &'static str {
    let idx = model.classes.binary_search(&class).unwrap_or(model.classes.len());
    PALETTE[idx % PALETTE.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{approximate, builtin_pentagon, ApproxConfig};
    use crate::learner::{fit_uniform, generate_xor};

    #[test]
    fn approx_panel_has_cells_and_target() {
        let res = approximate(&ApproxConfig::new(builtin_pentagon(), 2)).unwrap();
        let svg = approx_svg(&res, 2).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r##"stroke="#d62728""##).count(), 1);
        // 9 cells + root + target + region pieces
        assert!(svg.matches("<polygon").count() >= 11);
        assert!(approx_svg(&res, 3).is_err());
    }

    #[test]
    fn model_panel_renders_grid_and_points() {
        let data = generate_xor(20, 0.2, 1);
        let model = fit_uniform(&data, 2, 16.0).unwrap();
        let svg = model_svg(&model, Some(&data), 10).unwrap();
        assert_eq!(svg.matches("<rect").count(), 1 + 100 + 1);
        assert_eq!(svg.matches("<circle").count(), 80);
    }
}
