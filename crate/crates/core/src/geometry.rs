//! Polygon primitives and offsetting.
//!
//! Coordinates are continuous pixel coordinates (x to the right, y down).
//! Orientation follows the sign of the shoelace sum: a polygon is
//! "counter-clockwise" when `sum(x_i * y_{i+1} - x_{i+1} * y_i) > 0`, which is
//! the canonical orientation of every [`Polygon`].

use std::ops::{Add, Mul, Neg, Sub};

use crate::clip::{self, FillRule};
use crate::error::{Error, Result};

/// A point in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// Signed shoelace area of a closed ring (positive = canonical orientation).
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

/// Euclidean distance from `p` to the segment `a`–`b`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// A simple polygon with at least three vertices, stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Validates and canonicalizes a vertex ring.
    ///
    /// Repeated vertices and collinear runs are collapsed. A self-intersecting
    /// ring is repaired by keeping the largest loop of its even-odd
    /// decomposition. The result is oriented counter-clockwise.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFiniteVertex(i));
        }
        let cleaned = collapse_ring(vertices);
        if cleaned.len() < 3 {
            return Err(Error::TooFewVertices(cleaned.len()));
        }
        let ring = if ring_is_simple(&cleaned) {
            cleaned
        } else {
            repair_ring(&cleaned)?
        };
        let area = signed_area(&ring);
        if area.abs() <= f64::EPSILON * bbox_scale(&ring).powi(2) {
            return Err(Error::DegeneratePolygon);
        }
        let mut ring = ring;
        if area < 0.0 {
            ring.reverse();
        }
        Ok(Self { vertices: ring })
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().copied().map(Point2::from).collect())
    }

    /// Axis-aligned rectangle `[x0, x0 + w] x [y0, y0 + h]`.
    pub fn rectangle(x0: f64, y0: f64, w: f64, h: f64) -> Result<Self> {
        Self::from_coords(&[(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs, closing edge included.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// `(min_x, min_y, max_x, max_y)`
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        bbox(&self.vertices)
    }

    /// Even-odd point containment.
    pub fn contains(&self, p: Point2) -> bool {
        crate::raster::point_in_ring(p, &self.vertices)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        let d = Point2::new(dx, dy);
        Self {
            vertices: self.vertices.iter().map(|&p| p + d).collect(),
        }
    }

    /// Uniform scaling about the origin.
    pub fn scale(&self, s: f64) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&p| p * s).collect())
    }

    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        distance_to_boundary(p, self)
    }
}

/// Outcome of offsetting: zero or more outer polygons plus any holes.
///
/// Rasterization treats all rings with the even-odd rule, so holes nested in
/// an outer polygon are subtracted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolySet {
    pub polygons: Vec<Polygon>,
    pub holes: Vec<Polygon>,
}

impl PolySet {
    pub fn single(poly: Polygon) -> Self {
        Self {
            polygons: vec![poly],
            holes: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum::<f64>()
            - self.holes.iter().map(Polygon::area).sum::<f64>()
    }

    /// All rings, outers first.
    pub fn rings(&self) -> impl Iterator<Item = &[Point2]> {
        self.polygons
            .iter()
            .chain(self.holes.iter())
            .map(Polygon::vertices)
    }
}

pub fn area(poly: &Polygon) -> f64 {
    poly.area()
}

pub fn perimeter(poly: &Polygon) -> f64 {
    poly.perimeter()
}

/// Inward offset distance `A * (1 - r^2) / L` used to shrink a text polygon
/// into its kernel.
pub fn shrink_offset(poly: &Polygon, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidRatio(r));
    }
    Ok(poly.area() * (1.0 - r * r) / poly.perimeter())
}

/// Minimum distance from `p` to any edge of `poly`.
pub fn distance_to_boundary(p: Point2, poly: &Polygon) -> f64 {
    poly.edges()
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Miter joins are kept while the miter length stays within this multiple
/// of the offset distance; sharper corners are beveled.
pub const MITER_LIMIT: f64 = 2.0;

/// Offsets `poly` by `delta` pixels (negative shrinks, positive dilates).
///
/// The raw offset ring is built edge by edge with miter joins (bevel past
/// [`MITER_LIMIT`]) and then cleaned by keeping the positive-winding region,
/// which removes the loops created at reflex corners and by collapsed parts.
pub fn offset_polygon(poly: &Polygon, delta: f64) -> PolySet {
    if delta == 0.0 || !delta.is_finite() {
        return PolySet::single(poly.clone());
    }
    let raw = raw_offset_ring(poly.vertices(), delta);
    let loops = clip::boundary_loops(&[raw], FillRule::Positive);
    let mut out = PolySet::default();
    for ring in loops {
        let hole = signed_area(&ring) < 0.0;
        if let Ok(p) = Polygon::new(ring) {
            if hole {
                out.holes.push(p);
            } else {
                out.polygons.push(p);
            }
        }
    }
    out.polygons.sort_by(|a, b| b.area().total_cmp(&a.area()));
    out
}

fn raw_offset_ring(ring: &[Point2], delta: f64) -> Vec<Point2> {
    let n = ring.len();
    // Outward unit normal of edge i (ring[i] -> ring[i + 1]).
    let normals: Vec<Point2> = (0..n)
        .map(|i| {
            let d = ring[(i + 1) % n] - ring[i];
            let len = d.norm();
            Point2::new(d.y / len, -d.x / len)
        })
        .collect();
    let mut out = Vec::with_capacity(n * 3);
    for j in 0..n {
        let p = ring[j];
        let n1 = normals[(j + n - 1) % n];
        let n2 = normals[j];
        let sin_a = n1.cross(n2);
        let cos_a = n1.dot(n2);
        if sin_a * delta < 0.0 {
            // Corner turning away from the offset side; the loop this makes is
            // removed by the winding filter.
            out.push(p + n1 * delta);
            out.push(p);
            out.push(p + n2 * delta);
        } else if 1.0 + cos_a >= 2.0 / (MITER_LIMIT * MITER_LIMIT) {
            out.push(p + (n1 + n2) * (delta / (1.0 + cos_a)));
        } else {
            out.push(p + n1 * delta);
            out.push(p + n2 * delta);
        }
    }
    out
}

pub(crate) fn bbox(points: &[Point2]) -> (f64, f64, f64, f64) {
    points.iter().fold(
        (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ),
        |(x0, y0, x1, y1), p| (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
    )
}

fn bbox_scale(points: &[Point2]) -> f64 {
    let (x0, y0, x1, y1) = bbox(points);
    (x1 - x0).max(y1 - y0).max(1.0)
}

/// Removes repeated vertices and collinear (including backtracking) vertices
/// until the ring is stable.
fn collapse_ring(mut ring: Vec<Point2>) -> Vec<Point2> {
    let scale = if ring.is_empty() {
        1.0
    } else {
        bbox_scale(&ring)
    };
    let same = |a: Point2, b: Point2| a.distance(b) <= 1e-12 * scale;
    loop {
        let before = ring.len();
        ring.dedup_by(|b, a| same(*a, *b));
        while ring.len() > 1 && same(ring[0], ring[ring.len() - 1]) {
            ring.pop();
        }
        let n = ring.len();
        if n < 3 {
            return ring;
        }
        let mut keep = vec![true; n];
        for i in 0..n {
            let prev = ring[(i + n - 1) % n];
            let cur = ring[i];
            let next = ring[(i + 1) % n];
            let a = cur - prev;
            let b = next - cur;
            if a.cross(b).abs() <= 1e-10 * a.norm() * b.norm() {
                keep[i] = false;
                // Drop one vertex per pass so adjacent removals stay consistent.
                break;
            }
        }
        ring = ring
            .into_iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(p))
            .collect();
        if ring.len() == before {
            return ring;
        }
    }
}

/// Proper or touching intersection of closed segments `a`–`b` and `c`–`d`.
pub(crate) fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let scale = (b - a).norm().max((d - c).norm()).max(1.0);
    let eps = 1e-12 * scale * scale;
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    let s = |v: f64| {
        if v > eps {
            1
        } else if v < -eps {
            -1
        } else {
            0
        }
    };
    let (s1, s2, s3, s4) = (s(o1), s(o2), s(o3), s(o4));
    if s1 * s2 < 0 && s3 * s4 < 0 {
        return true;
    }
    let on = |p: Point2, q: Point2, r: Point2| {
        r.x >= p.x.min(q.x) - 1e-12 * scale
            && r.x <= p.x.max(q.x) + 1e-12 * scale
            && r.y >= p.y.min(q.y) - 1e-12 * scale
            && r.y <= p.y.max(q.y) + 1e-12 * scale
    };
    (s1 == 0 && on(a, b, c))
        || (s2 == 0 && on(a, b, d))
        || (s3 == 0 && on(c, d, a))
        || (s4 == 0 && on(c, d, b))
}

pub(crate) fn ring_is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn repair_ring(ring: &[Point2]) -> Result<Vec<Point2>> {
    clip::boundary_loops(&[ring.to_vec()], FillRule::EvenOdd)
        .into_iter()
        .map(collapse_ring)
        .filter(|r| r.len() >= 3 && ring_is_simple(r))
        .max_by(|a, b| signed_area(a).abs().total_cmp(&signed_area(b).abs()))
        .ok_or(Error::DegeneratePolygon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(side: f64) -> Polygon {
        Polygon::rectangle(0.0, 0.0, side, side).unwrap()
    }

    #[test]
    fn area_and_perimeter_examples() {
        assert_eq!(area(&square(10.0)), 100.0);
        let cw =
            Polygon::from_coords(&[(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]).unwrap();
        assert_eq!(cw.area(), 100.0);
        assert!(signed_area(cw.vertices()) > 0.0);
        let rect = Polygon::rectangle(0.0, 0.0, 40.0, 10.0).unwrap();
        assert_eq!(rect.area(), 400.0);
        assert_eq!(perimeter(&square(10.0)), 40.0);
        assert_eq!(rect.perimeter(), 100.0);
        let tri = Polygon::from_coords(&[(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)]).unwrap();
        assert!((tri.perimeter() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn shrink_offset_examples() {
        assert!((shrink_offset(&square(10.0), 0.4).unwrap() - 2.1).abs() < 1e-12);
        assert_eq!(shrink_offset(&square(10.0), 1.0).unwrap(), 0.0);
        let rect = Polygon::rectangle(0.0, 0.0, 40.0, 10.0).unwrap();
        assert!((shrink_offset(&rect, 0.4).unwrap() - 3.36).abs() < 1e-12);
        assert!(matches!(
            shrink_offset(&rect, 0.0),
            Err(Error::InvalidRatio(_))
        ));
        assert!(shrink_offset(&rect, 1.5).is_err());
        assert!(shrink_offset(&rect, f64::NAN).is_err());
    }

    #[test]
    fn construction_rejects_and_collapses() {
        assert_eq!(
            Polygon::from_coords(&[(0.0, 0.0), (1.0, 1.0)]),
            Err(Error::TooFewVertices(2))
        );
        assert!(matches!(
            Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0), (f64::NAN, 1.0)]),
            Err(Error::NonFiniteVertex(2))
        ));
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).is_err());
        let p = Polygon::from_coords(&[
            (0.0, 0.0),
            (5.0, 0.0),
            (10.0, 0.0),
            (10.0, 10.0),
            (10.0, 10.0),
            (0.0, 10.0),
        ])
        .unwrap();
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn bowtie_is_repaired_to_largest_loop() {
        // Figure-eight with unequal lobes crossing at (4, 2).
        let p = Polygon::from_coords(&[(0.0, 0.0), (12.0, 6.0), (12.0, 0.0), (0.0, 3.0)]).unwrap();
        assert!(ring_is_simple(p.vertices()));
        let (x0, _, x1, _) = p.bbox();
        assert!(x1 - x0 > 6.0, "kept the larger lobe: {:?}", p.vertices());
        assert!(p.area() > 20.0);
    }

    #[test]
    fn offset_square_examples() {
        let s = square(10.0);
        let shrunk = offset_polygon(&s, -2.1);
        assert_eq!(shrunk.len(), 1);
        let (x0, y0, x1, y1) = shrunk.polygons[0].bbox();
        for (got, want) in [(x0, 2.1), (y0, 2.1), (x1, 7.9), (y1, 7.9)] {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(shrunk.polygons[0].len(), 4);
        assert!(offset_polygon(&s, -6.0).is_empty());
        let grown = offset_polygon(&s, 2.0);
        assert_eq!(grown.len(), 1);
        assert!((grown.area() - 196.0).abs() < 1e-9);
        assert_eq!(grown.polygons[0].len(), 4);
    }

    #[test]
    fn offset_bevels_sharp_corners() {
        // Acute spike: miter would exceed twice the offset.
        let tri = Polygon::from_coords(&[(0.0, 0.0), (40.0, 0.0), (0.0, 5.0)]).unwrap();
        let grown = offset_polygon(&tri, 1.0);
        assert_eq!(grown.len(), 1);
        let far = grown.polygons[0]
            .vertices()
            .iter()
            .map(|v| v.x)
            .fold(f64::MIN, f64::max);
        assert!(far < 40.0 + 2.0 + 1e-9);
        assert!(grown.polygons[0].len() >= 4);
    }

    #[test]
    fn offset_concave_polygon() {
        // U shape: the notch closes when dilated enough and splits when shrunk.
        let u = Polygon::from_coords(&[
            (0.0, 0.0),
            (30.0, 0.0),
            (30.0, 30.0),
            (20.0, 30.0),
            (20.0, 10.0),
            (10.0, 10.0),
            (10.0, 30.0),
            (0.0, 30.0),
        ])
        .unwrap();
        let grown = offset_polygon(&u, 1.0);
        assert_eq!(grown.len(), 1);
        assert!(grown.holes.is_empty());
        // Rounded reflex corners are not produced by miter joins; exact area.
        let expected = (32.0 * 32.0) - (8.0 * 20.0);
        assert!((grown.area() - expected).abs() < 1e-9, "{}", grown.area());
        let shrunk = offset_polygon(&u, -4.0);
        assert_eq!(shrunk.len(), 1);
        let expected = 22.0 * 2.0 + 2.0 * (2.0 * 20.0);
        assert!((shrunk.area() - expected).abs() < 1e-9, "{}", shrunk.area());
        assert!(offset_polygon(&u, -5.5).is_empty());
        let closed = offset_polygon(&u, 6.0);
        assert_eq!(closed.len(), 1);
        assert!(closed.holes.is_empty());
    }

    #[test]
    fn shrinking_a_dumbbell_splits_it() {
        let d = Polygon::from_coords(&[
            (0.0, 0.0),
            (20.0, 0.0),
            (20.0, 8.0),
            (40.0, 8.0),
            (40.0, 0.0),
            (60.0, 0.0),
            (60.0, 20.0),
            (40.0, 20.0),
            (40.0, 12.0),
            (20.0, 12.0),
            (20.0, 20.0),
            (0.0, 20.0),
        ])
        .unwrap();
        let split = offset_polygon(&d, -3.0);
        assert_eq!(split.len(), 2);
        assert!((split.area() - 2.0 * 14.0 * 14.0).abs() < 1e-9);
    }

    #[test]
    fn offset_can_leave_a_hole() {
        // C shape whose opening closes under dilation, enclosing a hole.
        let c = Polygon::from_coords(&[
            (0.0, 0.0),
            (30.0, 0.0),
            (30.0, 12.0),
            (16.0, 12.0),
            (16.0, 10.0),
            (28.0, 10.0),
            (28.0, 2.0),
            (2.0, 2.0),
            (2.0, 28.0),
            (28.0, 28.0),
            (28.0, 20.0),
            (16.0, 20.0),
            (16.0, 18.0),
            (30.0, 18.0),
            (30.0, 30.0),
            (0.0, 30.0),
        ])
        .unwrap();
        let grown = offset_polygon(&c, 3.5);
        assert_eq!(grown.len(), 1);
        assert_eq!(grown.holes.len(), 1);
    }

    #[test]
    fn distance_examples() {
        let s = square(10.0);
        assert_eq!(distance_to_boundary(Point2::new(5.0, 5.0), &s), 5.0);
        assert_eq!(distance_to_boundary(Point2::new(10.0, 0.0), &s), 0.0);
        assert_eq!(distance_to_boundary(Point2::new(12.0, 5.0), &s), 2.0);
    }
}
