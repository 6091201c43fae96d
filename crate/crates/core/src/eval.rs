//! IoU matching of detections against ground truth, and precision / recall /
//! F-measure aggregation.

use std::cmp::Ordering;

use crate::geometry::Polygon;
use crate::postprocess::DetectedInstance;
use crate::raster::{rasterize_polygon, Mask};

#[derive(Debug, Clone, PartialEq)]
pub struct GtInstance {
    pub polygon: Polygon,
    pub ignore: bool,
}

impl GtInstance {
    pub fn new(polygon: Polygon) -> Self {
        Self {
            polygon,
            ignore: false,
        }
    }

    pub fn ignored(polygon: Polygon) -> Self {
        Self {
            polygon,
            ignore: true,
        }
    }
}

/// Both polygons rasterized at 1 px on their joint bounding box, snapped
/// outward to integer coordinates so the grid does not depend on argument
/// order.
fn joint_masks(a: &Polygon, b: &Polygon) -> Option<(Mask, Mask)> {
    let (ax0, ay0, ax1, ay1) = a.bbox();
    let (bx0, by0, bx1, by1) = b.bbox();
    if ax1 <= bx0 || bx1 <= ax0 || ay1 <= by0 || by1 <= ay0 {
        return None;
    }
    let x0 = ax0.min(bx0).floor();
    let y0 = ay0.min(by0).floor();
    let w = (ax1.max(bx1).ceil() - x0) as usize;
    let h = (ay1.max(by1).ceil() - y0) as usize;
    let ma = rasterize_polygon(&a.translate(-x0, -y0), h, w);
    let mb = rasterize_polygon(&b.translate(-x0, -y0), h, w);
    Some((ma, mb))
}

fn overlap_counts(a: &Polygon, b: &Polygon) -> (usize, usize, usize) {
    let Some((ma, mb)) = joint_masks(a, b) else {
        return (0, 0, 0);
    };
    let mut inter = 0;
    let mut union = 0;
    for (&x, &y) in ma.data().iter().zip(mb.data()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    (inter, union, ma.count())
}

/// Raster intersection-over-union. Polygons whose rasterization is empty
/// give 0.
pub fn iou(a: &Polygon, b: &Polygon) -> f64 {
    let (inter, union, _) = overlap_counts(a, b);
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Fraction of `det`'s raster covered by `region`.
pub fn intersection_over_det(det: &Polygon, region: &Polygon) -> f64 {
    let (inter, _, det_px) = overlap_counts(det, region);
    if det_px == 0 {
        0.0
    } else {
        inter as f64 / det_px as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImageCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl std::ops::Add for ImageCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// Detections overlapping an ignore region by more than this fraction of
/// their own area are dropped before matching.
pub const IGNORE_OVERLAP: f64 = 0.5;

fn cmp_vertices(a: &Polygon, b: &Polygon) -> Ordering {
    let flat = |p: &Polygon| -> Vec<f64> { p.vertices().iter().flat_map(|v| [v.x, v.y]).collect() };
    let (fa, fb) = (flat(a), flat(b));
    fa.iter()
        .zip(&fb)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(fa.len().cmp(&fb.len()))
}

/// Greedy one-to-one matching on one image.
///
/// Detections are put in a canonical order (score descending, then vertex
/// coordinates) and ground truth by vertex coordinates, so the result does
/// not depend on input order.
pub fn match_image(dets: &[DetectedInstance], gts: &[GtInstance], iou_thresh: f64) -> ImageCounts {
    let mut dets: Vec<&DetectedInstance> = dets.iter().collect();
    dets.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| cmp_vertices(&a.polygon, &b.polygon))
    });
    let mut gts: Vec<&GtInstance> = gts.iter().collect();
    gts.sort_by(|a, b| cmp_vertices(&a.polygon, &b.polygon).then(a.ignore.cmp(&b.ignore)));

    let kept: Vec<&DetectedInstance> = dets
        .into_iter()
        .filter(|d| {
            !gts.iter()
                .any(|g| g.ignore && intersection_over_det(&d.polygon, &g.polygon) > IGNORE_OVERLAP)
        })
        .collect();
    let cares: Vec<&GtInstance> = gts.into_iter().filter(|g| !g.ignore).collect();

    let mut pairs = Vec::new();
    for (di, d) in kept.iter().enumerate() {
        for (gi, g) in cares.iter().enumerate() {
            let v = iou(&d.polygon, &g.polygon);
            if v >= iou_thresh {
                pairs.push((v, di, gi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut det_used = vec![false; kept.len()];
    let mut gt_used = vec![false; cares.len()];
    let mut tp = 0;
    for (_, di, gi) in pairs {
        if !det_used[di] && !gt_used[gi] {
            det_used[di] = true;
            gt_used[gi] = true;
            tp += 1;
        }
    }
    ImageCounts {
        tp,
        fp: kept.len() - tp,
        fn_: cares.len() - tp,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub per_image: Vec<(String, ImageCounts)>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn report(per_image: Vec<(String, ImageCounts)>) -> MatchReport {
    let total = per_image
        .iter()
        .fold(ImageCounts::default(), |acc, (_, c)| acc + *c);
    let precision = ratio(total.tp, total.tp + total.fp);
    let recall = ratio(total.tp, total.tp + total.fn_);
    MatchReport {
        tp: total.tp,
        fp: total.fp,
        fn_: total.fn_,
        precision,
        recall,
        f_measure: f_measure(precision, recall),
        per_image,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x: f64, y: f64, w: f64, h: f64) -> Polygon {
        Polygon::rectangle(x, y, w, h).unwrap()
    }

    fn det(p: Polygon, score: f64) -> DetectedInstance {
        DetectedInstance { polygon: p, score }
    }

    #[test]
    fn iou_examples() {
        let a = rect(3.0, 4.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &rect(30.0, 4.0, 10.0, 10.0)), 0.0);
        // Half-overlapping squares: |A n B| = 50, |A u B| = 150.
        let b = rect(8.0, 4.0, 10.0, 10.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(iou(&a, &b), iou(&b, &a));
    }

    #[test]
    fn match_examples() {
        let gts: Vec<GtInstance> = (0..3)
            .map(|i| GtInstance::new(rect(20.0 * i as f64, 0.0, 15.0, 8.0)))
            .collect();
        let dets: Vec<DetectedInstance> = gts.iter().map(|g| det(g.polygon.clone(), 0.9)).collect();
        assert_eq!(
            match_image(&dets, &gts, 0.5),
            ImageCounts {
                tp: 3,
                fp: 0,
                fn_: 0
            }
        );

        let ignore = [GtInstance::ignored(rect(0.0, 0.0, 20.0, 20.0))];
        let inside = [det(rect(2.0, 2.0, 10.0, 10.0), 0.8)];
        assert_eq!(match_image(&inside, &ignore, 0.5), ImageCounts::default());

        let gt = [GtInstance::new(rect(0.0, 0.0, 20.0, 10.0))];
        let dup = [
            det(rect(0.0, 0.0, 20.0, 10.0), 0.9),
            det(rect(1.0, 0.0, 20.0, 10.0), 0.7),
        ];
        assert_eq!(
            match_image(&dup, &gt, 0.5),
            ImageCounts {
                tp: 1,
                fp: 1,
                fn_: 0
            }
        );
    }

    #[test]
    fn report_examples() {
        assert!((f_measure(0.92, 0.8024) - 0.857_185_3).abs() < 1e-6);
        assert!((f_measure(0.4, 0.4) - 0.4).abs() < 1e-15);
        let r = report(vec![]);
        assert_eq!((r.precision, r.recall, r.f_measure), (0.0, 0.0, 0.0));
        let r = report(vec![
            (
                "a".into(),
                ImageCounts {
                    tp: 3,
                    fp: 1,
                    fn_: 0,
                },
            ),
            (
                "b".into(),
                ImageCounts {
                    tp: 1,
                    fp: 0,
                    fn_: 2,
                },
            ),
        ]);
        assert_eq!((r.tp, r.fp, r.fn_), (4, 1, 2));
        assert!((r.precision - 0.8).abs() < 1e-12);
        assert!((r.recall - 4.0 / 6.0).abs() < 1e-12);
    }
}
