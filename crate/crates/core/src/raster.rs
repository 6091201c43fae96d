//! Dense row-major rasters and the pixel-level operations built on them.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::{Point2, PolySet, Polygon};

/// Row-major `height x width` grid. Pixel `(x, y)` covers
/// `[x, x + 1) x [y, y + 1)` and is sampled at its center `(x + 0.5, y + 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

pub type Mask = Raster<bool>;

impl<T: Clone> Raster<T> {
    pub fn new(height: usize, width: usize, fill: T) -> Self {
        Self {
            height,
            width,
            data: vec![fill; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {height}x{width} raster",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Raster<U> {
        Raster {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn zip_map<U: Clone, V: Clone>(
        &self,
        other: &Raster<U>,
        f: impl Fn(&T, &U) -> V,
    ) -> Result<Raster<V>> {
        self.check_shape(other)?;
        Ok(Raster {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

impl<T> Raster<T> {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn check_shape<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }
}

impl<T: Copy> Raster<T> {
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: T) {
        let w = self.width;
        self.data[y * w + x] = v;
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    /// Pixelwise OR, in place.
    pub fn union_with(&mut self, other: &Mask) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a |= b;
        }
    }

    /// Pixelwise `self && !other`.
    pub fn minus(&self, other: &Mask) -> Mask {
        self.zip_map(other, |&a, &b| a && !b)
            .expect("mask shapes agree")
    }

    /// Bounding box `(x0, y0, x1, y1)` of set pixels, inclusive.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let mut out: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out = Some(match out {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        out
    }
}

/// Two-channel raster of `(dx, dy)` vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub dx: Raster<f64>,
    pub dy: Raster<f64>,
}

impl VectorField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            dx: Raster::new(height, width, 0.0),
            dy: Raster::new(height, width, 0.0),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.dx.shape()
    }

    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        (self.dx.get(x, y), self.dy.get(x, y))
    }

    pub fn set(&mut self, x: usize, y: usize, (dx, dy): (f64, f64)) {
        self.dx.set(x, y, dx);
        self.dy.set(x, y, dy);
    }

    pub fn magnitude(&self, x: usize, y: usize) -> f64 {
        let (dx, dy) = self.get(x, y);
        dx.hypot(dy)
    }
}

/// Even-odd point-in-ring test (crossing number).
pub fn point_in_ring(p: Point2, ring: &[Point2]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let xint = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < xint {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Scanline fill of closed rings under the even-odd rule, sampling pixel
/// centers.
pub fn rasterize_rings<'a>(
    rings: impl IntoIterator<Item = &'a [Point2]>,
    height: usize,
    width: usize,
) -> Mask {
    let rings: Vec<&[Point2]> = rings.into_iter().collect();
    let mut mask = Mask::new(height, width, false);
    let mut xs: Vec<f64> = Vec::new();
    for y in 0..height {
        let yc = y as f64 + 0.5;
        xs.clear();
        for ring in &rings {
            let n = ring.len();
            let mut j = n - 1;
            for i in 0..n {
                let (a, b) = (ring[i], ring[j]);
                if (a.y > yc) != (b.y > yc) {
                    xs.push((b.x - a.x) * (yc - a.y) / (b.y - a.y) + a.x);
                }
                j = i;
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Centers with pair[0] <= xc < pair[1].
            let lo = (pair[0] - 0.5).ceil().max(0.0);
            let hi = (pair[1] - 0.5).ceil().min(width as f64);
            if hi <= lo {
                continue;
            }
            for x in lo as usize..hi as usize {
                let idx = y * width + x;
                mask.data[idx] = true;
            }
        }
    }
    mask
}

pub fn rasterize_polygon(poly: &Polygon, height: usize, width: usize) -> Mask {
    rasterize_rings([poly.vertices()], height, width)
}

pub fn rasterize_polyset(set: &PolySet, height: usize, width: usize) -> Mask {
    rasterize_rings(set.rings(), height, width)
}

const NEIGHBORS8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-connected component labels (0 = background, components numbered from 1
/// in raster order of their first pixel) and the component count.
pub fn label_components(mask: &Mask) -> (Raster<u32>, usize) {
    let (h, w) = mask.shape();
    let mut labels = Raster::new(h, w, 0u32);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || labels.get(x, y) != 0 {
                continue;
            }
            next += 1;
            labels.set(x, y, next);
            queue.push_back((x, y));
            while let Some((cx, cy)) = queue.pop_front() {
                for (dx, dy) in NEIGHBORS8 {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if !mask.in_bounds(nx, ny) {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if mask.get(nx, ny) && labels.get(nx, ny) == 0 {
                        labels.set(nx, ny, next);
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

/// Keeps only the largest 8-connected component (earliest on ties).
pub fn largest_component(mask: &Mask) -> Mask {
    let (labels, n) = label_components(mask);
    if n <= 1 {
        return mask.clone();
    }
    let mut sizes = vec![0usize; n + 1];
    for &l in labels.data() {
        sizes[l as usize] += 1;
    }
    let best = (1..=n)
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        .unwrap();
    labels.map(|&l| l as usize == best)
}

fn morph3(mask: &Mask, dilate: bool) -> Mask {
    let (h, w) = mask.shape();
    let mut out = Mask::new(h, w, false);
    for y in 0..h {
        for x in 0..w {
            let mut acc = !dilate;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    // Outside the canvas counts as background for dilation and
                    // as foreground for erosion, so closing never eats the border.
                    let v = if mask.in_bounds(nx, ny) {
                        mask.get(nx as usize, ny as usize)
                    } else {
                        !dilate
                    };
                    if dilate {
                        acc |= v;
                    } else {
                        acc &= v;
                    }
                }
            }
            out.set(x, y, acc);
        }
    }
    out
}

pub fn dilate3(mask: &Mask) -> Mask {
    morph3(mask, true)
}

pub fn erode3(mask: &Mask) -> Mask {
    morph3(mask, false)
}

/// 3x3 morphological closing, computed as if the canvas extended with
/// background in every direction.
pub fn close3(mask: &Mask) -> Mask {
    const PAD: usize = 2;
    let (h, w) = mask.shape();
    let mut padded = Mask::new(h + 2 * PAD, w + 2 * PAD, false);
    for y in 0..h {
        for x in 0..w {
            padded.set(x + PAD, y + PAD, mask.get(x, y));
        }
    }
    let closed = erode3(&dilate3(&padded));
    let mut out = Mask::new(h, w, false);
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, closed.get(x + PAD, y + PAD));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(poly: &Polygon, h: usize, w: usize) -> Mask {
        let mut m = Mask::new(h, w, false);
        for y in 0..h {
            for x in 0..w {
                let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                m.set(x, y, point_in_ring(c, poly.vertices()));
            }
        }
        m
    }

    #[test]
    fn rasterize_examples() {
        let sq = Polygon::rectangle(0.0, 0.0, 10.0, 10.0).unwrap();
        let m = rasterize_polygon(&sq, 20, 20);
        assert_eq!(m.count(), 100);
        assert_eq!(m, brute_force(&sq, 20, 20));
        let away = Polygon::rectangle(30.0, 30.0, 5.0, 5.0).unwrap();
        assert_eq!(rasterize_polygon(&away, 20, 20).count(), 0);
        let full = Polygon::rectangle(0.0, 0.0, 20.0, 12.0).unwrap();
        assert_eq!(rasterize_polygon(&full, 12, 20).count(), 240);
        let neg = Polygon::rectangle(-5.0, -5.0, 40.0, 40.0).unwrap();
        assert_eq!(rasterize_polygon(&neg, 7, 9).count(), 63);
    }

    #[test]
    fn rasterize_matches_brute_force_on_odd_shapes() {
        let polys = [
            Polygon::from_coords(&[
                (1.3, 2.2),
                (17.9, 4.1),
                (12.5, 15.5),
                (6.0, 11.0),
                (2.0, 16.7),
            ])
            .unwrap(),
            Polygon::from_coords(&[(0.5, 0.5), (15.5, 0.5), (15.5, 3.5), (0.5, 3.5)]).unwrap(),
            Polygon::from_coords(&[(-3.0, 4.0), (9.0, -2.0), (22.0, 9.5), (8.0, 21.0)]).unwrap(),
        ];
        for p in &polys {
            assert_eq!(rasterize_polygon(p, 20, 20), brute_force(p, 20, 20));
        }
    }

    #[test]
    fn components_and_closing() {
        let mut m = Mask::new(8, 8, false);
        for (x, y) in [(0, 0), (1, 1), (5, 5), (6, 5), (7, 6)] {
            m.set(x, y, true);
        }
        let (labels, n) = label_components(&m);
        assert_eq!(n, 2);
        assert_eq!(labels.get(1, 1), 1);
        assert_eq!(labels.get(7, 6), 2);
        assert_eq!(largest_component(&m).count(), 3);

        let mut ring = Mask::new(7, 7, false);
        for y in 1..6 {
            for x in 1..6 {
                ring.set(x, y, true);
            }
        }
        ring.set(3, 3, false);
        let closed = close3(&ring);
        assert!(closed.get(3, 3));
        assert_eq!(closed.count(), 25);
    }
}
