//! Region extraction from possibly self-intersecting closed paths.
//!
//! All paths are split at their mutual intersections into a planar
//! arrangement. Each arrangement edge is kept when the fill rule classifies
//! its two sides differently, oriented so the filled side lies on its left,
//! and the kept edges are chained into loops. Outer loops come out with
//! positive signed area, holes with negative.

use std::collections::BTreeMap;

use crate::geometry::{bbox, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillRule {
    EvenOdd,
    NonZero,
    Positive,
}

impl FillRule {
    fn inside(self, winding: i32) -> bool {
        match self {
            FillRule::EvenOdd => winding % 2 != 0,
            FillRule::NonZero => winding != 0,
            FillRule::Positive => winding > 0,
        }
    }
}

/// Winding number of the closed paths around `p`.
pub fn winding_number(p: Point2, paths: &[Vec<Point2>]) -> i32 {
    let mut w = 0;
    for path in paths {
        let n = path.len();
        for i in 0..n {
            let a = path[i];
            let b = path[(i + 1) % n];
            if a.y <= p.y {
                if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                    w += 1;
                }
            } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
                w -= 1;
            }
        }
    }
    w
}

struct Segment {
    a: Point2,
    b: Point2,
    splits: Vec<Point2>,
}

/// Boundary loops of the region selected by `rule`.
pub fn boundary_loops(paths: &[Vec<Point2>], rule: FillRule) -> Vec<Vec<Point2>> {
    let all: Vec<Point2> = paths.iter().flatten().copied().collect();
    if all.len() < 3 {
        return Vec::new();
    }
    let (x0, y0, x1, y1) = bbox(&all);
    let scale = (x1 - x0).max(y1 - y0).max(1.0);
    let snap = 1e-9 * scale;

    let mut segs: Vec<Segment> = paths
        .iter()
        .flat_map(|path| {
            let n = path.len();
            (0..n).map(move |i| (path[i], path[(i + 1) % n]))
        })
        .filter(|(a, b)| a.distance(*b) > snap)
        .map(|(a, b)| Segment {
            a,
            b,
            splits: Vec::new(),
        })
        .collect();

    for i in 0..segs.len() {
        for j in (i + 1)..segs.len() {
            let (pi, pj) = intersections(&segs[i], &segs[j], snap);
            segs[i].splits.extend(pi);
            segs[j].splits.extend(pj);
        }
    }

    // Node identity by quantized coordinates; first representative wins.
    let quantum = 1e-7 * scale;
    let mut nodes: Vec<Point2> = Vec::new();
    let mut index: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut node_of = |p: Point2| -> usize {
        let key = (
            (p.x / quantum).round() as i64,
            (p.y / quantum).round() as i64,
        );
        *index.entry(key).or_insert_with(|| {
            nodes.push(p);
            nodes.len() - 1
        })
    };

    let mut undirected: BTreeMap<(usize, usize), ()> = BTreeMap::new();
    for seg in &segs {
        let d = seg.b - seg.a;
        let len2 = d.dot(d);
        let mut pts: Vec<(f64, Point2)> = seg
            .splits
            .iter()
            .map(|&p| ((p - seg.a).dot(d) / len2, p))
            .filter(|(t, _)| *t > 0.0 && *t < 1.0)
            .collect();
        pts.push((0.0, seg.a));
        pts.push((1.0, seg.b));
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let ids: Vec<usize> = pts.iter().map(|&(_, p)| node_of(p)).collect();
        for w in ids.windows(2) {
            if w[0] != w[1] {
                let key = (w[0].min(w[1]), w[0].max(w[1]));
                undirected.insert(key, ());
            }
        }
    }

    // Classify both sides of every arrangement edge.
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for &(u, v) in undirected.keys() {
        let (a, b) = (nodes[u], nodes[v]);
        let d = b - a;
        let len = d.norm();
        let left = Point2::new(-d.y / len, d.x / len);
        let mid = (a + b) * 0.5;
        let eps = (1e-7 * scale).min(0.25 * len);
        let in_left = rule.inside(winding_number(mid + left * eps, paths));
        let in_right = rule.inside(winding_number(mid - left * eps, paths));
        if in_left == in_right {
            continue;
        }
        let (from, to) = if in_left { (u, v) } else { (v, u) };
        out_edges[from].push(edges.len());
        edges.push((from, to));
    }

    let angle = |e: usize| {
        let (f, t) = edges[e];
        let d = nodes[t] - nodes[f];
        d.y.atan2(d.x)
    };
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut ring = Vec::new();
        let mut e = start;
        loop {
            used[e] = true;
            let (from, to) = edges[e];
            ring.push(nodes[from]);
            // Leave `to` by the unused edge with the smallest clockwise sweep
            // from the reversed incoming direction, which keeps touching loops
            // separate.
            let back = angle(e) + std::f64::consts::PI;
            let next = out_edges[to]
                .iter()
                .copied()
                .filter(|&c| !used[c] || c == start)
                .min_by(|&c1, &c2| sweep(back, angle(c1)).total_cmp(&sweep(back, angle(c2))));
            match next {
                Some(n) if n == start => break,
                Some(n) => e = n,
                None => break,
            }
        }
        if ring.len() >= 3 {
            loops.push(ring);
        }
    }
    loops
}

/// Clockwise angle from direction `from` to direction `to`, in (0, 2pi].
fn sweep(from: f64, to: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let s = (from - to).rem_euclid(tau);
    if s <= 1e-12 {
        tau
    } else {
        s
    }
}

fn intersections(s: &Segment, t: &Segment, snap: f64) -> (Vec<Point2>, Vec<Point2>) {
    let (p, r) = (s.a, s.b - s.a);
    let (q, u) = (t.a, t.b - t.a);
    let denom = r.cross(u);
    let qp = q - p;
    let mut on_s = Vec::new();
    let mut on_t = Vec::new();
    let rl = r.norm();
    let ul = u.norm();
    if denom.abs() > 1e-12 * rl * ul {
        let ts = qp.cross(u) / denom;
        let tt = qp.cross(r) / denom;
        let tol_s = snap / rl;
        let tol_t = snap / ul;
        if ts < -tol_s || ts > 1.0 + tol_s || tt < -tol_t || tt > 1.0 + tol_t {
            return (on_s, on_t);
        }
        let mut x = p + r * ts;
        for end in [s.a, s.b, t.a, t.b] {
            if x.distance(end) <= snap {
                x = end;
                break;
            }
        }
        on_s.push(x);
        on_t.push(x);
    } else if qp.cross(r).abs() <= snap * rl {
        // Collinear: each segment is split at the other's endpoints.
        let within = |a: Point2, d: Point2, l2: f64, x: Point2| {
            let k = (x - a).dot(d) / l2;
            k > 0.0 && k < 1.0
        };
        for x in [t.a, t.b] {
            if within(p, r, rl * rl, x) {
                on_s.push(x);
            }
        }
        for x in [s.a, s.b] {
            if within(q, u, ul * ul, x) {
                on_t.push(x);
            }
        }
    }
    (on_s, on_t)
}
