//! Seeded synthetic text layouts: convex quadrilaterals and 14-point curved
//! bands with integer vertices, kept apart so their label zones do not touch.

use rand::Rng;

use crate::geometry::{shrink_offset, Point2, Polygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Quad,
    CurvedBand,
}

/// Points per long side of a curved band.
const BAND_SIDE_POINTS: usize = 7;
const PLACEMENT_ATTEMPTS: usize = 200;
const BORDER: f64 = 4.0;

fn rotate(p: Point2, c: Point2, angle: f64) -> Point2 {
    let (s, co) = angle.sin_cos();
    let d = p - c;
    Point2::new(c.x + d.x * co - d.y * s, c.y + d.x * s + d.y * co)
}

fn rounded(points: Vec<Point2>) -> Vec<Point2> {
    points
        .into_iter()
        .map(|p| Point2::new(p.x.round(), p.y.round()))
        .collect()
}

fn is_convex(ring: &[Point2]) -> bool {
    let n = ring.len();
    let signs: Vec<f64> = (0..n)
        .map(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            let c = ring[(i + 2) % n];
            (b - a).cross(c - b)
        })
        .collect();
    signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0)
}

/// A convex quadrilateral roughly `len` by `thick`, centred on `c`.
pub fn random_quad<R: Rng>(rng: &mut R, c: Point2) -> Option<Polygon> {
    let half_len = rng.gen_range(25.0..50.0);
    let half_thick = rng.gen_range(11.0..20.0);
    let angle = rng.gen_range(-0.6..0.6);
    let jitter = 3.0;
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let pts: Vec<Point2> = corners
        .iter()
        .map(|&(sx, sy)| {
            let p = Point2::new(
                c.x + sx * half_len + rng.gen_range(-jitter..jitter),
                c.y + sy * half_thick + rng.gen_range(-jitter..jitter),
            );
            rotate(p, c, angle)
        })
        .collect();
    let pts = rounded(pts);
    if !is_convex(&pts) {
        return None;
    }
    Polygon::new(pts).ok()
}

/// A band following a circular arc: 7 points along the outer side and 7
/// back along the inner side.
pub fn random_band<R: Rng>(rng: &mut R, c: Point2) -> Option<Polygon> {
    let radius: f64 = rng.gen_range(70.0..200.0);
    let arc_len: f64 = rng.gen_range(70.0..120.0);
    let thick: f64 = rng.gen_range(22.0..32.0);
    let span = arc_len / radius;
    let angle = rng.gen_range(-0.5..0.5);
    let flip = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    // Arc centre placed so the band's midpoint sits at `c`.
    let centre = Point2::new(c.x, c.y + flip * radius);
    let at = |r: f64, t: f64| {
        let a = -std::f64::consts::FRAC_PI_2 * flip + t;
        let p = Point2::new(centre.x + r * a.cos(), centre.y + r * a.sin());
        rotate(p, c, angle)
    };
    let step = |i: usize| -span / 2.0 + span * i as f64 / (BAND_SIDE_POINTS - 1) as f64;
    let outer = (0..BAND_SIDE_POINTS).map(|i| at(radius + thick / 2.0, step(i)));
    let inner = (0..BAND_SIDE_POINTS)
        .rev()
        .map(|i| at(radius - thick / 2.0, step(i)));
    let pts = rounded(outer.chain(inner).collect());
    let poly = Polygon::new(pts).ok()?;
    (poly.len() == 2 * BAND_SIDE_POINTS).then_some(poly)
}

/// A star-shaped simple polygon around `c` with `n` vertices at sorted
/// random angles and radii in `[r_min, r_max)`. Not rounded.
pub fn random_star<R: Rng>(rng: &mut R, c: Point2, n: usize, r_min: f64, r_max: f64) -> Polygon {
    loop {
        let mut angles: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        let pts: Vec<Point2> = angles
            .iter()
            .map(|&a| {
                let r = rng.gen_range(r_min..r_max);
                Point2::new(c.x + r * a.cos(), c.y + r * a.sin())
            })
            .collect();
        if let Ok(p) = Polygon::new(pts) {
            return p;
        }
    }
}

fn boxes_overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> bool {
    a.0 < b.2 && b.0 < a.2 && a.1 < b.3 && b.1 < a.3
}

/// Up to `count` non-interfering instances of `kind` in a `height` x `width`
/// image. Each bounding box is padded by twice the instance's shrink offset
/// (at `shrink_ratio`) plus one pixel, so expand zones stay disjoint.
/// Placement is attempted a bounded number of times, so crowded images may
/// get fewer than `count`.
pub fn synth_layout<R: Rng>(
    rng: &mut R,
    kind: ShapeKind,
    height: usize,
    width: usize,
    count: usize,
    shrink_ratio: f64,
) -> Vec<Polygon> {
    let mut placed: Vec<(Polygon, (f64, f64, f64, f64))> = Vec::new();
    for _ in 0..PLACEMENT_ATTEMPTS {
        if placed.len() >= count {
            break;
        }
        let c = Point2::new(
            rng.gen_range(0.0..width as f64),
            rng.gen_range(0.0..height as f64),
        );
        let poly = match kind {
            ShapeKind::Quad => random_quad(rng, c),
            ShapeKind::CurvedBand => random_band(rng, c),
        };
        let Some(poly) = poly else { continue };
        let (x0, y0, x1, y1) = poly.bbox();
        if x0 < BORDER || y0 < BORDER || x1 > width as f64 - BORDER || y1 > height as f64 - BORDER {
            continue;
        }
        let Ok(r) = shrink_offset(&poly, shrink_ratio) else {
            continue;
        };
        let pad = 2.0 * r + 1.0;
        let padded = (x0 - pad, y0 - pad, x1 + pad, y1 + pad);
        if placed.iter().any(|(_, b)| boxes_overlap(*b, padded)) {
            continue;
        }
        placed.push((poly, padded));
    }
    placed.into_iter().map(|(p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layouts_are_integer_valid_and_deterministic() {
        for kind in [ShapeKind::Quad, ShapeKind::CurvedBand] {
            let a = synth_layout(&mut ChaCha8Rng::seed_from_u64(5), kind, 256, 256, 3, 0.4);
            let b = synth_layout(&mut ChaCha8Rng::seed_from_u64(5), kind, 256, 256, 3, 0.4);
            assert_eq!(a, b);
            assert!(!a.is_empty());
            for p in &a {
                assert!(p
                    .vertices()
                    .iter()
                    .all(|v| v.x.fract() == 0.0 && v.y.fract() == 0.0));
                let expect = if kind == ShapeKind::Quad { 4 } else { 14 };
                assert_eq!(p.len(), expect);
                assert!(p.area() > 400.0);
            }
        }
    }

    #[test]
    fn quads_are_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for p in synth_layout(&mut rng, ShapeKind::Quad, 256, 256, 4, 0.4) {
            assert!(is_convex(p.vertices()));
        }
    }
}
