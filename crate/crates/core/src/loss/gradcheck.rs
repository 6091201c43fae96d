//! Central finite-difference verification of the analytic loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Largest relative gap between analytic and central-difference partials
/// over `coords`. Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn max_relative_error(
    f: impl Fn(&[f64]) -> f64,
    point: &[f64],
    analytic: &[f64],
    coords: &[usize],
    eps: f64,
) -> f64 {
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for &c in coords {
        let orig = x[c];
        x[c] = orig + eps;
        let up = f(&x);
        x[c] = orig - eps;
        let down = f(&x);
        x[c] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[c];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub name: &'static str,
    pub points: usize,
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

pub const DEFAULT_EPS: f64 = 1e-5;
const SIDE: usize = 12;

fn raster(v: &[f64]) -> Raster<f64> {
    Raster::from_vec(SIDE, SIDE, v.to_vec()).expect("square raster")
}

fn random_mask(rng: &mut ChaCha8Rng, p: f64) -> Mask {
    let mut m = Mask::new(SIDE, SIDE, false);
    for v in m.data_mut() {
        *v = rng.gen_bool(p);
    }
    // Keep at least one positive so every term has a support.
    m.data_mut()[rng.gen_range(0..SIDE * SIDE)] = true;
    m
}

fn coords(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    (0..count).map(|_| rng.gen_range(0..n)).collect()
}

/// Hard-negative mining is piecewise: keep the selection cut well away from
/// ties so a perturbation of `eps` cannot change it.
fn ohem_margin(pred: &[f64], label: &Mask, ratio: f64) -> f64 {
    let mut neg: Vec<f64> = pred
        .iter()
        .zip(label.data())
        .filter(|(_, &y)| !y)
        .map(|(&p, _)| -(1.0 - p).ln())
        .collect();
    let pos = label.count();
    let take = (ratio * pos as f64).round() as usize;
    if take == 0 || take >= neg.len() {
        return f64::INFINITY;
    }
    neg.sort_by(|a, b| b.total_cmp(a));
    neg[take - 1] - neg[take]
}

pub fn check_bce_ohem(
    rng: &mut ChaCha8Rng,
    points: usize,
    per_point: usize,
    eps: f64,
) -> GradCheckReport {
    let n = SIDE * SIDE;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let label = random_mask(rng, 0.15);
        let pred: Vec<f64> = loop {
            let cand: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            if ohem_margin(&cand, &label, 3.0) > 1e-3 {
                break cand;
            }
        };
        let (_, g) = bce_ohem_grad(&raster(&pred), &label, 3.0).expect("shapes");
        let f = |x: &[f64]| bce_ohem(&raster(x), &label, 3.0).expect("shapes");
        let cs = coords(rng, n, per_point);
        worst = worst.max(max_relative_error(f, &pred, g.data(), &cs, eps));
    }
    GradCheckReport {
        name: "bce_ohem",
        points,
        coordinates: points * per_point,
        max_rel_error: worst,
        tolerance: 1e-3,
    }
}

pub fn check_dice(
    rng: &mut ChaCha8Rng,
    points: usize,
    per_point: usize,
    eps: f64,
) -> GradCheckReport {
    let n = SIDE * SIDE;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let label = random_mask(rng, 0.3);
        let pred: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (_, g) = dice_loss_grad(&raster(&pred), &label).expect("shapes");
        let f = |x: &[f64]| dice_loss(&raster(x), &label).expect("shapes");
        let cs = coords(rng, n, per_point);
        worst = worst.max(max_relative_error(f, &pred, g.data(), &cs, eps));
    }
    GradCheckReport {
        name: "dice_loss",
        points,
        coordinates: points * per_point,
        max_rel_error: worst,
        tolerance: 1e-4,
    }
}

/// Dice of the binarized map, differentiated through both the probability
/// and the threshold raster.
pub fn check_binarized_dice(
    rng: &mut ChaCha8Rng,
    points: usize,
    per_point: usize,
    eps: f64,
    k: f64,
) -> GradCheckReport {
    let n = SIDE * SIDE;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let label = random_mask(rng, 0.3);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.8)).collect();
        let t: Vec<f64> = p.iter().map(|&v| v + rng.gen_range(-0.05..0.05)).collect();
        let (_, gp, gt) = binarized_dice_grad(&raster(&p), &raster(&t), &label, k).expect("shapes");
        let point: Vec<f64> = p.iter().chain(&t).copied().collect();
        let analytic: Vec<f64> = gp.data().iter().chain(gt.data()).copied().collect();
        let f = |x: &[f64]| {
            let b = binarize(&raster(&x[..n]), &raster(&x[n..]), k).expect("shapes");
            dice_loss(&b, &label).expect("shapes")
        };
        let cs = coords(rng, 2 * n, per_point);
        worst = worst.max(max_relative_error(f, &point, &analytic, &cs, eps));
    }
    GradCheckReport {
        name: "binarize_dice",
        points,
        coordinates: points * per_point,
        max_rel_error: worst,
        tolerance: 1e-3,
    }
}

pub fn check_threshold(
    rng: &mut ChaCha8Rng,
    points: usize,
    per_point: usize,
    eps: f64,
) -> GradCheckReport {
    let n = SIDE * SIDE;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let region = random_mask(rng, 0.5);
        let label: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..0.7)).collect();
        // Residuals kept clear of the kink at zero.
        let pred: Vec<f64> = label
            .iter()
            .map(|&l| {
                let r: f64 = rng.gen_range(0.01..0.3);
                if rng.gen_bool(0.5) {
                    l + r
                } else {
                    l - r
                }
            })
            .collect();
        let label_r = raster(&label);
        let (_, g) = threshold_loss_grad(&raster(&pred), &label_r, &region).expect("shapes");
        let f = |x: &[f64]| threshold_loss(&raster(x), &label_r, &region).expect("shapes");
        let cs = coords(rng, n, per_point);
        worst = worst.max(max_relative_error(f, &pred, g.data(), &cs, eps));
    }
    GradCheckReport {
        name: "threshold_loss",
        points,
        coordinates: points * per_point,
        max_rel_error: worst,
        tolerance: 1e-3,
    }
}

pub fn check_expand(
    rng: &mut ChaCha8Rng,
    points: usize,
    per_point: usize,
    eps: f64,
) -> GradCheckReport {
    let n = SIDE * SIDE;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let valid = random_mask(rng, 0.5);
        let scale = 4.0 * rng.gen_range(1.0..5.0);
        let label: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        // Scaled residuals kept clear of the branch point |x| = 1.
        let pred: Vec<f64> = label
            .iter()
            .map(|&l| {
                let x: f64 = loop {
                    let x = rng.gen_range(-3.0..3.0f64);
                    if (x.abs() - 1.0).abs() > 0.01 {
                        break x;
                    }
                };
                l + x * scale
            })
            .collect();
        let split = |v: &[f64]| VectorField {
            dx: raster(&v[..n]),
            dy: raster(&v[n..]),
        };
        let label_f = split(&label);
        let (_, g) = expand_loss_grad(&split(&pred), &label_f, &valid, scale).expect("shapes");
        let analytic: Vec<f64> = g.dx.data().iter().chain(g.dy.data()).copied().collect();
        let f = |x: &[f64]| expand_loss(&split(x), &label_f, &valid, scale).expect("shapes");
        let cs = coords(rng, 2 * n, per_point);
        worst = worst.max(max_relative_error(f, &pred, &analytic, &cs, eps));
    }
    GradCheckReport {
        name: "expand_loss",
        points,
        coordinates: points * per_point,
        max_rel_error: worst,
        tolerance: 1e-3,
    }
}

/// Every gradient check, seeded. `points` random points per loss, each
/// probed at `per_point` random coordinates.
pub fn run_suite(seed: u64, points: usize, per_point: usize) -> Vec<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = DEFAULT_EPS;
    vec![
        check_bce_ohem(&mut rng, points, per_point, eps),
        check_dice(&mut rng, points, per_point, eps),
        check_binarized_dice(&mut rng, points, per_point, eps, LossWeights::default().k),
        check_threshold(&mut rng, points, per_point, eps),
        check_expand(&mut rng, points, per_point, eps),
    ]
}
