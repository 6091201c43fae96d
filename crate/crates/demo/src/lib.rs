//! Browser bindings for the label and reconstruction pipeline.
//!
//! Polygons cross the boundary as a flat `[x0, y0, x1, y1, ...]` coordinate
//! array plus a vertex count per polygon. The `*_impl` functions hold the
//! logic and are what the native tests exercise.

use kernelexpand::eval::iou;
use kernelexpand::geometry::{offset_polygon, shrink_offset};
use kernelexpand::labelgen::gen_labels;
use kernelexpand::{
    postprocess, Error, InstanceLabel, LabelConfig, LabelMaps, Point2, Polygon, PostprocessConfig,
    PredMaps, Result,
};
use wasm_bindgen::prelude::*;

/// Largest canvas side the demo accepts.
pub const MAX_SIDE: usize = 1024;

pub fn parse_polygons(coords: &[f64], counts: &[u32]) -> Result<Vec<Polygon>> {
    let total: usize = counts.iter().map(|&c| c as usize).sum();
    if total * 2 != coords.len() {
        return Err(Error::InvalidArgument(format!(
            "{} coordinates for {total} vertices",
            coords.len()
        )));
    }
    let mut rest = coords;
    counts
        .iter()
        .map(|&c| {
            let (head, tail) = rest.split_at(c as usize * 2);
            rest = tail;
            Polygon::new(head.chunks(2).map(|p| Point2::new(p[0], p[1])).collect())
        })
        .collect()
}

fn labels_for(
    polys: &[Polygon],
    height: usize,
    width: usize,
    shrink_ratio: f64,
) -> Result<LabelMaps> {
    if height == 0 || width == 0 || height > MAX_SIDE || width > MAX_SIDE {
        return Err(Error::InvalidArgument(format!(
            "canvas {width}x{height} out of range"
        )));
    }
    let instances: Vec<InstanceLabel> = polys.iter().cloned().map(InstanceLabel::new).collect();
    let cfg = LabelConfig {
        shrink_ratio,
        ..LabelConfig::default()
    };
    gen_labels(&instances, height, width, &cfg)
}

/// RGBA pixels of one label layer: `"kernel"`, `"threshold"` or `"expand"`.
pub fn render_labels_impl(
    coords: &[f64],
    counts: &[u32],
    height: usize,
    width: usize,
    shrink_ratio: f64,
    layer: &str,
) -> Result<Vec<u8>> {
    let polys = parse_polygons(coords, counts)?;
    let labels = labels_for(&polys, height, width, shrink_ratio)?;
    let mut rgba = Vec::with_capacity(height * width * 4);
    for y in 0..height {
        for x in 0..width {
            let px = match layer {
                "kernel" => {
                    if labels.kernel_mask.get(x, y) {
                        [240, 140, 30]
                    } else {
                        [20, 20, 28]
                    }
                }
                "threshold" => {
                    let t = labels.threshold_map.get(x, y);
                    let v = ((t - 0.3) / 0.4 * 255.0).clamp(0.0, 255.0) as u8;
                    [v, v, v]
                }
                "expand" => {
                    if labels.expand_valid.get(x, y) {
                        let (dx, dy) = labels.expand_field.get(x, y);
                        let s = 127.0 / (2.0 * labels.mean_shrink).max(1.0);
                        let c = |d: f64| (128.0 + d * s).clamp(0.0, 255.0) as u8;
                        [c(dx), c(dy), 160]
                    } else if labels.kernel_mask.get(x, y) {
                        [255, 255, 255]
                    } else {
                        [0, 0, 0]
                    }
                }
                other => return Err(Error::InvalidArgument(format!("unknown layer {other:?}"))),
            };
            rgba.extend_from_slice(&[px[0], px[1], px[2], 255]);
        }
    }
    Ok(rgba)
}

/// Kernel outline of a single polygon, rings separated by a `NaN, NaN` pair.
pub fn kernel_outline_impl(coords: &[f64], shrink_ratio: f64) -> Result<Vec<f64>> {
    let poly = parse_polygons(coords, &[(coords.len() / 2) as u32])?.remove(0);
    let r = shrink_offset(&poly, shrink_ratio)?;
    let mut out = Vec::new();
    for ring in offset_polygon(&poly, -r).rings() {
        if !out.is_empty() {
            out.extend([f64::NAN, f64::NAN]);
        }
        out.extend(ring.iter().flat_map(|p| [p.x, p.y]));
    }
    Ok(out)
}

/// Labels the polygons, feeds the labels back as a perfect prediction and
/// post-processes them. Each detection is emitted as
/// `[vertex_count, score, best_iou, x0, y0, ...]`.
pub fn reconstruct_impl(
    coords: &[f64],
    counts: &[u32],
    height: usize,
    width: usize,
    shrink_ratio: f64,
) -> Result<Vec<f64>> {
    let polys = parse_polygons(coords, counts)?;
    let labels = labels_for(&polys, height, width, shrink_ratio)?;
    let cfg = PostprocessConfig::default().with_mean_shrink(labels.mean_shrink);
    let dets = postprocess::detect(&PredMaps::from_labels(&labels), &cfg)?;
    let mut out = Vec::new();
    for d in dets {
        let best = polys.iter().map(|g| iou(&d.polygon, g)).fold(0.0, f64::max);
        out.extend([d.polygon.len() as f64, d.score, best]);
        out.extend(d.polygon.vertices().iter().flat_map(|p| [p.x, p.y]));
    }
    Ok(out)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn render_labels(
    coords: &[f64],
    counts: &[u32],
    height: usize,
    width: usize,
    shrink_ratio: f64,
    layer: &str,
) -> std::result::Result<Vec<u8>, JsError> {
    render_labels_impl(coords, counts, height, width, shrink_ratio, layer).map_err(js)
}

#[wasm_bindgen]
pub fn kernel_outline(coords: &[f64], shrink_ratio: f64) -> std::result::Result<Vec<f64>, JsError> {
    kernel_outline_impl(coords, shrink_ratio).map_err(js)
}

#[wasm_bindgen]
pub fn reconstruct(
    coords: &[f64],
    counts: &[u32],
    height: usize,
    width: usize,
    shrink_ratio: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    reconstruct_impl(coords, counts, height, width, shrink_ratio).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUAD: [f64; 8] = [20.0, 20.0, 100.0, 24.0, 98.0, 60.0, 22.0, 56.0];

    #[test]
    fn rejects_mismatched_counts() {
        assert!(parse_polygons(&QUAD, &[3]).is_err());
        assert!(render_labels_impl(&QUAD, &[4], 0, 10, 0.4, "kernel").is_err());
        assert!(render_labels_impl(&QUAD, &[4], 80, 120, 0.4, "nope").is_err());
    }

    #[test]
    fn layers_have_rgba_size() {
        for layer in ["kernel", "threshold", "expand"] {
            let px = render_labels_impl(&QUAD, &[4], 80, 120, 0.4, layer).unwrap();
            assert_eq!(px.len(), 80 * 120 * 4);
        }
        let kernel = render_labels_impl(&QUAD, &[4], 80, 120, 0.4, "kernel").unwrap();
        let on = kernel.chunks(4).filter(|p| p[0] == 240).count();
        assert!(on > 200 && on < 80 * 36);
    }

    #[test]
    fn outline_lies_inside() {
        let poly = Polygon::new(QUAD.chunks(2).map(|p| Point2::new(p[0], p[1])).collect()).unwrap();
        let out = kernel_outline_impl(&QUAD, 0.4).unwrap();
        assert!(out.len() >= 6);
        for p in out.chunks(2).filter(|p| !p[0].is_nan()) {
            assert!(poly.contains(Point2::new(p[0], p[1])));
        }
    }

    #[test]
    fn reconstruction_recovers_the_polygon() {
        let out = reconstruct_impl(&QUAD, &[4], 80, 120, 0.4).unwrap();
        let n = out[0] as usize;
        assert_eq!(out.len(), 3 + 2 * n);
        assert!(out[2] >= 0.9, "iou {}", out[2]);
    }
}
