//! Outer-boundary tracing along pixel edges, and Douglas-Peucker
//! simplification of the resulting closed rings.

use crate::geometry::{point_segment_distance, Point2};
use crate::raster::Mask;

/// Traces the outer boundary of the 8-connected component containing the
/// first set pixel in raster order. Vertices lie on pixel corners; runs of
/// collinear corners are merged. Returns `None` for an empty mask.
pub fn trace_outer_boundary(mask: &Mask) -> Option<Vec<Point2>> {
    let (h, w) = mask.shape();
    let start = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .find(|&(x, y)| mask.get(x, y))?;
    let fg = |x: i64, y: i64| mask.in_bounds(x, y) && mask.get(x as usize, y as usize);

    // Walk corners with the foreground on the right-hand side (y points down,
    // so facing +x the right-hand side is +y).
    let start_vertex = (start.0 as i64, start.1 as i64);
    let start_dir = (1i64, 0i64);
    let mut v = start_vertex;
    let mut d = start_dir;
    let mut corners = vec![v];
    loop {
        v = (v.0 + d.0, v.1 + d.1);
        let right = (-d.1, d.0);
        let left = (d.1, -d.0);
        // Pixels ahead of corner `v` on either side of the heading.
        let cell = |side: (i64, i64)| {
            let cx = v.0 + d.0.min(0).min(side.0);
            let cy = v.1 + d.1.min(0).min(side.1);
            fg(cx, cy)
        };
        d = if cell(left) {
            left
        } else if cell(right) {
            d
        } else {
            right
        };
        if v == start_vertex && d == start_dir {
            break;
        }
        corners.push(v);
    }

    let pts: Vec<Point2> = corners
        .iter()
        .map(|&(x, y)| Point2::new(x as f64, y as f64))
        .collect();
    Some(merge_collinear(pts))
}

fn merge_collinear(pts: Vec<Point2>) -> Vec<Point2> {
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    (0..n)
        .filter(|&i| {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            (pts[i] - prev).cross(next - pts[i]) != 0.0 || (pts[i] - prev).dot(next - pts[i]) < 0.0
        })
        .map(|i| pts[i])
        .collect()
}

/// Douglas-Peucker simplification of a closed ring with tolerance `eps`.
///
/// The ring is split at its first vertex and the vertex farthest from it,
/// and each open chain is simplified independently.
pub fn simplify_ring(ring: &[Point2], eps: f64) -> Vec<Point2> {
    let n = ring.len();
    if n <= 3 || eps <= 0.0 {
        return ring.to_vec();
    }
    let far = (1..n)
        .max_by(|&a, &b| {
            ring[0]
                .distance(ring[a])
                .total_cmp(&ring[0].distance(ring[b]))
        })
        .unwrap();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    let first: Vec<usize> = (0..=far).collect();
    let second: Vec<usize> = (far..n).chain(std::iter::once(0)).collect();
    mark_chain(ring, &first, eps, &mut keep);
    mark_chain(ring, &second, eps, &mut keep);
    (0..n).filter(|&i| keep[i]).map(|i| ring[i]).collect()
}

fn mark_chain(ring: &[Point2], chain: &[usize], eps: f64, keep: &mut [bool]) {
    let mut stack = vec![(0usize, chain.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (a, b) = (ring[chain[lo]], ring[chain[hi]]);
        let (idx, dist) = ((lo + 1)..hi)
            .map(|k| (k, point_segment_distance(ring[chain[k]], a, b)))
            .fold(
                (lo, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if dist > eps {
            keep[chain[idx]] = true;
            stack.push((lo, idx));
            stack.push((idx, hi));
        }
    }
}

/// Douglas-Peucker for an open polyline (endpoints always kept).
pub fn simplify_polyline(line: &[Point2], eps: f64) -> Vec<Point2> {
    if line.len() <= 2 {
        return line.to_vec();
    }
    let mut keep = vec![false; line.len()];
    keep[0] = true;
    keep[line.len() - 1] = true;
    let chain: Vec<usize> = (0..line.len()).collect();
    mark_chain(line, &chain, eps, &mut keep);
    line.iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::signed_area;

    fn mask_from(rows: &[&str]) -> Mask {
        let h = rows.len();
        let w = rows[0].len();
        let mut m = Mask::new(h, w, false);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.chars().enumerate() {
                m.set(x, y, c == '#');
            }
        }
        m
    }

    #[test]
    fn square_traces_to_four_corners() {
        let mut m = Mask::new(14, 14, false);
        for y in 2..12 {
            for x in 2..12 {
                m.set(x, y, true);
            }
        }
        let ring = trace_outer_boundary(&m).unwrap();
        assert_eq!(ring.len(), 4);
        assert!((signed_area(&ring).abs() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn single_pixel_is_unit_square() {
        let m = mask_from(&["...", ".#.", "..."]);
        let ring = trace_outer_boundary(&m).unwrap();
        assert_eq!(ring.len(), 4);
        assert_eq!(signed_area(&ring).abs(), 1.0);
    }

    #[test]
    fn l_shape_has_six_corners() {
        let m = mask_from(&["##..", "##..", "####", "####"]);
        let ring = trace_outer_boundary(&m).unwrap();
        assert_eq!(ring.len(), 6);
        assert_eq!(signed_area(&ring).abs(), 12.0);
    }

    #[test]
    fn diagonal_neighbors_are_traced_together() {
        let m = mask_from(&["#..", ".#.", "..#"]);
        let ring = trace_outer_boundary(&m).unwrap();
        assert_eq!(signed_area(&ring).abs(), 3.0);
    }

    #[test]
    fn empty_mask_has_no_boundary() {
        assert!(trace_outer_boundary(&Mask::new(3, 3, false)).is_none());
    }

    #[test]
    fn simplify_drops_staircase_noise() {
        let stairs: Vec<Point2> = (0..20)
            .flat_map(|i| {
                let i = i as f64;
                [Point2::new(i, i * 0.5), Point2::new(i + 1.0, i * 0.5)]
            })
            .collect();
        let s = simplify_polyline(&stairs, 1.0);
        assert_eq!(s.len(), 2);
        let ring = [
            Point2::new(0.0, 0.0),
            Point2::new(5.0, 0.2),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 10.0),
            Point2::new(0.0, 10.0),
        ];
        assert_eq!(simplify_ring(&ring, 0.5).len(), 4);
        assert_eq!(simplify_ring(&ring, 0.1).len(), 5);
    }
}
