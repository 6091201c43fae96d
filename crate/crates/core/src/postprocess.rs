//! Reconstruction of text polygons from predicted maps.
//!
//! 1. Binarize probability against threshold and label 8-connected
//!    components (the kernels).
//! 2. Grow each kernel with the pixels whose expand vector lands inside it,
//!    out to the contour located by the threshold ridge.
//! 3. Trace the grown mask and simplify it into a polygon.

use crate::contour::{simplify_ring, trace_outer_boundary};
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::loss::{binarize, PredMaps};
use crate::raster::{
    close3, label_components, largest_component, rasterize_polygon, Mask, Raster, VectorField,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostprocessConfig {
    /// Cut-off on the binarized map.
    pub bin_thresh: f64,
    pub min_component_area: usize,
    pub k: f64,
    /// Largest expand-vector length that may attach a pixel; `None` leaves
    /// it unbounded.
    pub max_expand: Option<f64>,
    pub simplify_eps: f64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            bin_thresh: 0.5,
            min_component_area: 16,
            k: 50.0,
            max_expand: None,
            simplify_eps: 2.0,
        }
    }
}

impl PostprocessConfig {
    /// Caps expansion at three times the mean shrink offset, the reach of
    /// the outermost labelled ring.
    pub fn with_mean_shrink(mut self, mean_shrink: f64) -> Self {
        self.max_expand = Some(3.0 * mean_shrink);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_thresh > 0.0 && self.bin_thresh < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "bin_thresh {}",
                self.bin_thresh
            )));
        }
        if self.min_component_area < 1 {
            return Err(Error::InvalidArgument(
                "min_component_area must be >= 1".into(),
            ));
        }
        if let Some(m) = self.max_expand {
            if m.is_nan() || m < 0.0 {
                return Err(Error::InvalidArgument(format!("max_expand {m}")));
            }
        }
        if self.simplify_eps.is_nan() || self.simplify_eps < 0.0 || self.k.is_nan() || self.k <= 0.0
        {
            return Err(Error::InvalidArgument(
                "simplify_eps and k must be positive".into(),
            ));
        }
        Ok(())
    }

    fn cap(&self) -> f64 {
        self.max_expand.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectedInstance {
    pub polygon: Polygon,
    /// Mean kernel probability over the source component.
    pub score: f64,
}

/// Component labels after the area filter, renumbered `1..=count` in raster
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub labels: Raster<u32>,
    pub count: usize,
}

impl Components {
    pub fn mask(&self, id: u32) -> Mask {
        self.labels.map(|&l| l == id)
    }
}

pub fn binarize_and_label(pred: &PredMaps, cfg: &PostprocessConfig) -> Result<Components> {
    cfg.validate()?;
    let binary = binarize(&pred.kernel_prob, &pred.thresh, cfg.k)?;
    let mask = binary.map(|&b| b > cfg.bin_thresh);
    let (labels, n) = label_components(&mask);
    let mut sizes = vec![0usize; n + 1];
    for &l in labels.data() {
        sizes[l as usize] += 1;
    }
    let mut remap = vec![0u32; n + 1];
    let mut count = 0;
    for id in 1..=n {
        if sizes[id] >= cfg.min_component_area {
            count += 1;
            remap[id] = count as u32;
        }
    }
    Ok(Components {
        labels: labels.map(|&l| remap[l as usize]),
        count,
    })
}

/// Pixels near `component` whose expand vector, rounded, lands in it and
/// whose vector length is at most `reach`, as `(x, y, length)`.
fn attachable(component: &Mask, expand: &VectorField, reach: f64) -> Vec<(usize, usize, f64)> {
    let Some((x0, y0, x1, y1)) = component.bounds() else {
        return Vec::new();
    };
    let (h, w) = component.shape();
    let pad = if reach.is_finite() {
        reach.ceil() as usize
    } else {
        w.max(h)
    };
    let mut out = Vec::new();
    for y in y0.saturating_sub(pad)..(y1 + pad + 1).min(h) {
        for x in x0.saturating_sub(pad)..(x1 + pad + 1).min(w) {
            if component.get(x, y) {
                continue;
            }
            let (dx, dy) = expand.get(x, y);
            let len = dx.hypot(dy);
            if len == 0.0 || len > reach {
                continue;
            }
            let tx = x as i64 + dx.round() as i64;
            let ty = y as i64 + dy.round() as i64;
            if component.in_bounds(tx, ty) && component.get(tx as usize, ty as usize) {
                out.push((x, y, len));
            }
        }
    }
    out
}

/// Grows `component` by every pixel within `cfg.max_expand` whose expand
/// vector lands inside it, then closes pinholes with a 3x3 closing.
pub fn expand_component(component: &Mask, expand: &VectorField, cfg: &PostprocessConfig) -> Mask {
    expand_component_within(component, expand, cfg.cap())
}

/// As [`expand_component`] with an explicit attachment reach.
pub fn expand_component_within(component: &Mask, expand: &VectorField, reach: f64) -> Mask {
    let mut grown = component.clone();
    for (x, y, _) in attachable(component, expand, reach) {
        grown.set(x, y, true);
    }
    close3(&grown)
}

/// Pixels within this fraction of the local threshold range below its peak
/// count as sitting on the predicted contour.
const RIDGE_FRACTION: f64 = 0.1;
/// Minimum spread of the threshold map around a component for it to be
/// used as a contour cue.
const RIDGE_CONTRAST: f64 = 0.05;
/// Pixels whose normalized threshold is below this carry no distance cue.
const MIN_PROFILE: f64 = 0.05;
const REFINE_ROUNDS: usize = 3;

/// Least-squares line `len = b + slope * u`, or `None` when `u` is constant.
fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    let (su, sl) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(u, l)| (a + u, b + l));
    let (mu, ml) = (su / n, sl / n);
    let (cov, var) = pts.iter().fold((0.0, 0.0), |(c, v), &(u, l)| {
        (c + (u - mu) * (l - ml), v + (u - mu) * (u - mu))
    });
    if var < 1e-12 {
        return None;
    }
    let slope = cov / var;
    Some((ml - slope * mu, slope))
}

/// Expand-vector length at which the predicted threshold map peaks around
/// `component`, i.e. where the text contour sits. `None` when the threshold
/// map carries no contour cue there.
///
/// A first guess is the median vector length over near-peak pixels. The
/// threshold falls off linearly on both sides of the contour, so with `s`
/// the threshold normalized to the local range, vector length grows as
/// `b + R * s` inside the contour and `b + R * (2 - s)` outside it. The
/// guess is refined by fitting that line, reclassifying inside / outside
/// with each new estimate `b + R`.
pub fn contour_reach(component: &Mask, pred: &PredMaps, cap: f64) -> Option<f64> {
    let cands = attachable(component, &pred.expand, cap);
    if cands.is_empty() {
        return None;
    }
    let t = |x: usize, y: usize| pred.thresh.get(x, y);
    let (lo, hi) = cands.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), &(x, y, _)| (lo.min(t(x, y)), hi.max(t(x, y))),
    );
    if hi - lo < RIDGE_CONTRAST {
        return None;
    }
    let cut = hi - RIDGE_FRACTION * (hi - lo);
    let mut ridge: Vec<f64> = cands
        .iter()
        .filter(|&&(x, y, _)| t(x, y) >= cut)
        .map(|&(_, _, len)| len)
        .collect();
    ridge.sort_by(f64::total_cmp);
    let mut reach = ridge[ridge.len() / 2];

    let profile: Vec<(f64, f64)> = cands
        .iter()
        .map(|&(x, y, len)| ((t(x, y) - lo) / (hi - lo), len))
        .filter(|&(s, _)| s >= MIN_PROFILE)
        .collect();
    for _ in 0..REFINE_ROUNDS {
        let pts: Vec<(f64, f64)> = profile
            .iter()
            .map(|&(s, len)| (if len <= reach { s } else { 2.0 - s }, len))
            .collect();
        match fit_line(&pts) {
            Some((b, slope)) if slope > 0.0 && (b + slope).is_finite() => {
                reach = (b + slope).min(cap)
            }
            _ => break,
        }
    }
    Some(reach)
}

/// Threshold differences below this are treated as flat.
const SLOPE_TOL: f64 = 1e-9;

/// Grows `component` using the threshold map as a contour cue.
///
/// The threshold peaks on the text contour and falls off on both sides, so
/// along the expand vector it decreases toward the kernel inside the contour
/// and increases outside it. Each attachable pixel is classified by a
/// centred difference over its neighbours one step away from and toward the
/// kernel; where the map is flat the pixel is attached only within
/// [`contour_reach`]. Pixels beyond `cfg.max_expand` never attach.
pub fn expand_with_contour(component: &Mask, pred: &PredMaps, cfg: &PostprocessConfig) -> Mask {
    let cap = cfg.cap();
    let reach = contour_reach(component, pred, cap).unwrap_or(cap);
    let t = &pred.thresh;
    let sample = |x: i64, y: i64, fallback: f64| {
        if t.in_bounds(x, y) {
            t.get(x as usize, y as usize)
        } else {
            fallback
        }
    };
    let mut grown = component.clone();
    for (x, y, len) in attachable(component, &pred.expand, cap) {
        let (dx, dy) = pred.expand.get(x, y);
        let sx = (dx / len).round() as i64;
        let sy = (dy / len).round() as i64;
        let here = t.get(x, y);
        let away = sample(x as i64 - sx, y as i64 - sy, here);
        let toward = sample(x as i64 + sx, y as i64 + sy, here);
        let inside = if away > toward + SLOPE_TOL {
            true
        } else if away < toward - SLOPE_TOL {
            false
        } else {
            len <= reach
        };
        if inside {
            grown.set(x, y, true);
        }
    }
    close3(&grown)
}

/// Simplification is accepted while the polygon's raster agrees with the
/// mask to this IoU, which also keeps at least this fraction of the mask.
const MIN_SIMPLIFIED_IOU: f64 = 0.95;

/// Polygon of the outer boundary of `mask`, simplified with Douglas-Peucker.
///
/// The tolerance is halved (down to no simplification) until the polygon is
/// valid and its rasterization stays faithful to the mask.
pub fn extract_polygon(mask: &Mask, cfg: &PostprocessConfig) -> Result<Polygon> {
    let ring = trace_outer_boundary(mask).ok_or(Error::EmptyMask)?;
    let (h, w) = mask.shape();
    let total = mask.count();
    let mut eps = cfg.simplify_eps;
    loop {
        let simplified = simplify_ring(&ring, eps);
        if let Ok(poly) = Polygon::new(simplified) {
            let raster = rasterize_polygon(&poly, h, w);
            let inter = raster.zip_map(mask, |&a, &b| a && b)?.count();
            let union = raster.count() + total - inter;
            if eps == 0.0 || inter as f64 >= MIN_SIMPLIFIED_IOU * union as f64 {
                return Ok(poly);
            }
        } else if eps == 0.0 {
            return Polygon::new(ring);
        }
        eps = if eps > 0.25 { eps * 0.5 } else { 0.0 };
    }
}

/// Full reconstruction, ordered by descending score (component order on
/// ties).
pub fn detect(pred: &PredMaps, cfg: &PostprocessConfig) -> Result<Vec<DetectedInstance>> {
    let comps = binarize_and_label(pred, cfg)?;
    let (h, w) = pred.shape();
    let mut scored: Vec<(f64, u32)> = (1..=comps.count as u32)
        .map(|id| {
            let (sum, n) = comps
                .labels
                .data()
                .iter()
                .zip(pred.kernel_prob.data())
                .filter(|(&l, _)| l == id)
                .fold((0.0, 0usize), |(s, n), (_, &p)| (s + p, n + 1));
            (sum / n as f64, id)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut claimed = Mask::new(h, w, false);
    let mut out = Vec::new();
    for (score, id) in scored {
        let comp = comps.mask(id);
        let grown = expand_with_contour(&comp, pred, cfg);
        // Earlier (higher-scoring) detections keep contested pixels.
        let mut own = grown.minus(&claimed);
        own.union_with(&comp);
        let own = largest_component(&own);
        claimed.union_with(&own);
        if let Ok(polygon) = extract_polygon(&own, cfg) {
            out.push(DetectedInstance { polygon, score });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelgen::{gen_labels, InstanceLabel, LabelConfig};

    fn blob_pred(h: usize, w: usize, blobs: &[(usize, usize, usize, usize)]) -> PredMaps {
        let mut pred = PredMaps::zeros(h, w);
        pred.thresh = Raster::new(h, w, 0.3);
        for &(x0, y0, bw, bh) in blobs {
            for y in y0..y0 + bh {
                for x in x0..x0 + bw {
                    pred.kernel_prob.set(x, y, 0.95);
                }
            }
        }
        pred
    }

    #[test]
    fn labeling_examples() {
        let cfg = PostprocessConfig::default();
        let empty = PredMaps::zeros(16, 16);
        assert_eq!(binarize_and_label(&empty, &cfg).unwrap().count, 0);
        let two = blob_pred(32, 32, &[(2, 2, 6, 6), (20, 20, 6, 6)]);
        assert_eq!(binarize_and_label(&two, &cfg).unwrap().count, 2);
        let small = blob_pred(16, 16, &[(2, 2, 3, 3)]);
        assert_eq!(binarize_and_label(&small, &cfg).unwrap().count, 0);
        let mut exact = cfg;
        exact.min_component_area = 9;
        assert_eq!(binarize_and_label(&small, &exact).unwrap().count, 1);
    }

    #[test]
    fn zero_field_leaves_component_unchanged() {
        let mut comp = Mask::new(20, 20, false);
        for y in 5..12 {
            for x in 4..15 {
                comp.set(x, y, true);
            }
        }
        let grown = expand_component(
            &comp,
            &VectorField::zeros(20, 20),
            &PostprocessConfig::default(),
        );
        assert_eq!(grown, comp);
    }

    #[test]
    fn band_field_dilates_component() {
        // Field built the same way labels are: nearest-component vectors on a
        // band of width 2 around a square.
        let mut comp = Mask::new(24, 24, false);
        for y in 8..16 {
            for x in 8..16 {
                comp.set(x, y, true);
            }
        }
        let nearest = crate::edt::nearest_set_pixel(&comp);
        let mut field = VectorField::zeros(24, 24);
        let mut expected = comp.clone();
        for y in 0..24 {
            for x in 0..24 {
                let (sx, sy) = nearest.get(x, y).unwrap();
                let dx = sx as f64 - x as f64;
                let dy = sy as f64 - y as f64;
                let cheb = dx.abs().max(dy.abs());
                if cheb > 0.0 && cheb <= 2.0 {
                    field.set(x, y, (dx, dy));
                    expected.set(x, y, true);
                }
            }
        }
        let grown = expand_component(&comp, &field, &PostprocessConfig::default());
        assert_eq!(grown, expected);
    }

    #[test]
    fn vectors_longer_than_cap_never_attach() {
        let mut comp = Mask::new(20, 20, false);
        comp.set(10, 10, true);
        let mut field = VectorField::zeros(20, 20);
        field.set(4, 10, (6.0, 0.0));
        field.set(11, 10, (-1.0, 0.0));
        let cfg = PostprocessConfig {
            max_expand: Some(3.0),
            ..Default::default()
        };
        let grown = expand_component_within(&comp, &field, cfg.max_expand.unwrap());
        assert!(!grown.get(4, 10));
        assert!(grown.get(11, 10));
        let free = expand_component(&comp, &field, &PostprocessConfig::default());
        assert!(free.get(4, 10));
    }

    #[test]
    fn extract_polygon_examples() {
        let cfg = PostprocessConfig::default();
        let mut sq = Mask::new(16, 16, false);
        for y in 3..13 {
            for x in 3..13 {
                sq.set(x, y, true);
            }
        }
        let p = extract_polygon(&sq, &cfg).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.bbox(), (3.0, 3.0, 13.0, 13.0));

        let mut one = Mask::new(5, 5, false);
        one.set(2, 2, true);
        let p = extract_polygon(&one, &cfg).unwrap();
        assert_eq!(p.area(), 1.0);

        let mut l = Mask::new(20, 20, false);
        for y in 2..18 {
            for x in 2..8 {
                l.set(x, y, true);
            }
        }
        for y in 12..18 {
            for x in 8..18 {
                l.set(x, y, true);
            }
        }
        let p = extract_polygon(&l, &cfg).unwrap();
        assert_eq!(p.len(), 6);
        assert!(extract_polygon(&Mask::new(4, 4, false), &cfg).is_err());
    }

    #[test]
    fn detect_recovers_square_from_label_prediction() {
        let inst = [InstanceLabel::new(
            Polygon::rectangle(10.0, 12.0, 30.0, 16.0).unwrap(),
        )];
        let labels = gen_labels(&inst, 48, 56, &LabelConfig::default()).unwrap();
        let pred = PredMaps::from_labels(&labels);
        let cfg = PostprocessConfig::default().with_mean_shrink(labels.mean_shrink);
        let dets = detect(&pred, &cfg).unwrap();
        assert_eq!(dets.len(), 1);
        let iou = crate::eval::iou(&dets[0].polygon, &inst[0].polygon);
        assert!(iou >= 0.9, "iou {iou}");
        assert!(detect(&PredMaps::zeros(10, 10), &cfg).unwrap().is_empty());
    }
}
