//! Exact Euclidean feature transform: for every pixel, a nearest set pixel of
//! a mask.
//!
//! Separable lower-envelope construction over squared distances (column pass,
//! then row pass with parabola envelopes), carrying the argmin along so the
//! nearest pixel itself is recovered, not just the distance.

use crate::raster::{Mask, Raster};

const NONE: usize = usize::MAX;

/// Nearest set pixel `(x, y)` for every pixel, or `None` when the mask is
/// empty.
pub fn nearest_set_pixel(mask: &Mask) -> Raster<Option<(usize, usize)>> {
    let (h, w) = mask.shape();
    let mut out = Raster::new(h, w, None);
    if !mask.any() {
        return out;
    }

    // Column pass: nearest feature row within each column.
    let mut col_row = Raster::new(h, w, NONE);
    for x in 0..w {
        let mut last = NONE;
        for y in 0..h {
            if mask.get(x, y) {
                last = y;
            }
            col_row.set(x, y, last);
        }
        let mut next = NONE;
        for y in (0..h).rev() {
            if mask.get(x, y) {
                next = y;
            }
            let up = col_row.get(x, y);
            let best = match (up, next) {
                (NONE, n) => n,
                (u, NONE) => u,
                (u, n) => {
                    if y - u <= n - y {
                        u
                    } else {
                        n
                    }
                }
            };
            col_row.set(x, y, best);
        }
    }

    // Row pass: lower envelope of parabolas f(x') + (x - x')^2.
    let mut sites: Vec<usize> = Vec::with_capacity(w);
    let mut bounds: Vec<f64> = Vec::with_capacity(w + 1);
    for y in 0..h {
        let f = |x: usize| -> f64 {
            let r = col_row.get(x, y);
            let d = r as f64 - y as f64;
            d * d
        };
        sites.clear();
        bounds.clear();
        for q in 0..w {
            if col_row.get(q, y) == NONE {
                continue;
            }
            let fq = f(q) + (q * q) as f64;
            loop {
                match sites.last() {
                    None => {
                        sites.push(q);
                        bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&p) => {
                        let fp = f(p) + (p * p) as f64;
                        let s = (fq - fp) / (2.0 * (q as f64 - p as f64));
                        if s <= *bounds.last().unwrap() {
                            sites.pop();
                            bounds.pop();
                        } else {
                            sites.push(q);
                            bounds.push(s);
                            break;
                        }
                    }
                }
            }
        }
        let mut k = 0;
        for x in 0..w {
            while k + 1 < sites.len() && bounds[k + 1] < x as f64 {
                k += 1;
            }
            let sx = sites[k];
            out.set(x, y, Some((sx, col_row.get(sx, y))));
        }
    }
    out
}

/// Squared Euclidean distance to the nearest set pixel (infinite when none).
pub fn squared_distance(mask: &Mask) -> Raster<f64> {
    let (h, w) = mask.shape();
    let nearest = nearest_set_pixel(mask);
    let mut out = Raster::new(h, w, f64::INFINITY);
    for y in 0..h {
        for x in 0..w {
            if let Some((sx, sy)) = nearest.get(x, y) {
                let dx = sx as f64 - x as f64;
                let dy = sy as f64 - y as f64;
                out.set(x, y, dx * dx + dy * dy);
            }
        }
    }
    out
}
