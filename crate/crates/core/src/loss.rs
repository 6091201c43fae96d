//! Training objective over the three prediction maps, with analytic
//! gradients for every term.
//!
//! `total = alpha * (l_kp + l_kb) + beta * l_t + gamma * l_e` where
//! `l_kp` is hard-negative-mined BCE on the kernel probability, `l_kb` is
//! dice loss on the differentiable binarization of probability against
//! threshold, `l_t` is mean L1 on the threshold map inside the dilated
//! contours and `l_e` is mean smooth-L1 on the expand field.

use crate::error::{Error, Result};
use crate::labelgen::LabelMaps;
use crate::raster::{Mask, Raster, VectorField};

pub mod gradcheck;

pub const PROB_EPS: f64 = 1e-7;
pub const DICE_EPS: f64 = 1e-6;
/// Negatives kept when an image has no positive pixel.
pub const EMPTY_HARD_NEGATIVES: usize = 100;

/// Predicted maps for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct PredMaps {
    pub kernel_prob: Raster<f64>,
    pub thresh: Raster<f64>,
    pub expand: VectorField,
}

impl PredMaps {
    /// Checks shapes and finiteness, clamping both probability rasters to
    /// `[0, 1]`.
    pub fn new(kernel_prob: Raster<f64>, thresh: Raster<f64>, expand: VectorField) -> Result<Self> {
        kernel_prob.check_shape(&thresh)?;
        kernel_prob.check_shape(&expand.dx)?;
        kernel_prob.check_shape(&expand.dy)?;
        let finite = |r: &Raster<f64>| r.data().iter().all(|v| v.is_finite());
        if !finite(&kernel_prob) {
            return Err(Error::NonFinite("kernel probability"));
        }
        if !finite(&thresh) {
            return Err(Error::NonFinite("threshold"));
        }
        if !finite(&expand.dx) || !finite(&expand.dy) {
            return Err(Error::NonFinite("expand field"));
        }
        Ok(Self {
            kernel_prob: kernel_prob.map(|v| v.clamp(0.0, 1.0)),
            thresh: thresh.map(|v| v.clamp(0.0, 1.0)),
            expand,
        })
    }

    /// The prediction a perfect model would make for `labels`: the kernel
    /// mask as 0/1 probabilities, the label threshold map, and the label
    /// expand field (zero off its valid pixels).
    pub fn from_labels(labels: &LabelMaps) -> Self {
        Self {
            kernel_prob: labels.kernel_mask.map(|&b| if b { 1.0 } else { 0.0 }),
            thresh: labels.threshold_map.clone(),
            expand: labels.expand_field.clone(),
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            kernel_prob: Raster::new(height, width, 0.0),
            thresh: Raster::new(height, width, 0.0),
            expand: VectorField::zeros(height, width),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.kernel_prob.shape()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Binarization amplification.
    pub k: f64,
    /// Negatives kept per positive in hard-negative mining.
    pub ohem_ratio: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 10.0,
            gamma: 4.0,
            k: 50.0,
            ohem_ratio: 3.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma, self.k, self.ohem_ratio];
        // gamma = 0 is allowed: it is the ablation without the expand term.
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) || self.k == 0.0 {
            return Err(Error::InvalidArgument(format!("loss weights {self:?}")));
        }
        Ok(())
    }

    pub fn combine(&self, l_kp: f64, l_kb: f64, l_t: f64, l_e: f64) -> f64 {
        self.alpha * (l_kp + l_kb) + self.beta * l_t + self.gamma * l_e
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub l_kp: f64,
    pub l_kb: f64,
    pub l_t: f64,
    pub l_e: f64,
    pub total: f64,
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn bce_pixel(p: f64, positive: bool) -> f64 {
    let p = clamp_prob(p);
    if positive {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Indices in the mined sample: all positives plus the hardest negatives.
fn ohem_selection(pred: &Raster<f64>, label: &Mask, ratio: f64) -> Vec<usize> {
    let mut selected: Vec<usize> = Vec::new();
    let mut negatives: Vec<(f64, usize)> = Vec::new();
    for (i, (&p, &y)) in pred.data().iter().zip(label.data()).enumerate() {
        if y {
            selected.push(i);
        } else {
            negatives.push((bce_pixel(p, false), i));
        }
    }
    let n_neg = if selected.is_empty() {
        EMPTY_HARD_NEGATIVES
    } else {
        (ratio * selected.len() as f64).round() as usize
    }
    .min(negatives.len());
    negatives.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    selected.extend(negatives[..n_neg].iter().map(|&(_, i)| i));
    selected
}

/// Mean binary cross-entropy over the positives and the `ratio x positives`
/// hardest negatives.
pub fn bce_ohem(pred: &Raster<f64>, label: &Mask, ratio: f64) -> Result<f64> {
    bce_ohem_grad(pred, label, ratio).map(|(v, _)| v)
}

pub fn bce_ohem_grad(pred: &Raster<f64>, label: &Mask, ratio: f64) -> Result<(f64, Raster<f64>)> {
    pred.check_shape(label)?;
    let selected = ohem_selection(pred, label, ratio);
    let mut grad = pred.map(|_| 0.0);
    if selected.is_empty() {
        return Ok((0.0, grad));
    }
    let n = selected.len() as f64;
    let mut total = 0.0;
    for &i in &selected {
        let raw = pred.data()[i];
        let y = label.data()[i];
        total += bce_pixel(raw, y);
        let p = clamp_prob(raw);
        let clamped = p != raw;
        grad.data_mut()[i] = if clamped {
            0.0
        } else if y {
            -1.0 / (p * n)
        } else {
            1.0 / ((1.0 - p) * n)
        };
    }
    Ok((total / n, grad))
}

/// Numerically stable `1 / (1 + exp(-x))`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Differentiable binarization `1 / (1 + exp(-k (P - T)))`.
pub fn binarize(prob: &Raster<f64>, thresh: &Raster<f64>, k: f64) -> Result<Raster<f64>> {
    prob.zip_map(thresh, |&p, &t| logistic(k * (p - t)))
}

/// `1 - 2 sum(y yhat) / (sum(y) + sum(yhat) + eps)`
pub fn dice_loss(pred: &Raster<f64>, label: &Mask) -> Result<f64> {
    dice_loss_grad(pred, label).map(|(v, _)| v)
}

pub fn dice_loss_grad(pred: &Raster<f64>, label: &Mask) -> Result<(f64, Raster<f64>)> {
    pred.check_shape(label)?;
    let mut inter = 0.0;
    let mut union = DICE_EPS;
    for (&p, &y) in pred.data().iter().zip(label.data()) {
        let y = if y { 1.0 } else { 0.0 };
        inter += y * p;
        union += y + p;
    }
    let loss = 1.0 - 2.0 * inter / union;
    let grad = pred.zip_map(label, |_, &y| {
        let y = if y { 1.0 } else { 0.0 };
        -2.0 * (y * union - inter) / (union * union)
    })?;
    Ok((loss, grad))
}

/// Dice loss of the binarized map, with gradients with respect to the
/// probability and threshold rasters.
pub fn binarized_dice_grad(
    prob: &Raster<f64>,
    thresh: &Raster<f64>,
    label: &Mask,
    k: f64,
) -> Result<(f64, Raster<f64>, Raster<f64>)> {
    let b = binarize(prob, thresh, k)?;
    let (loss, db) = dice_loss_grad(&b, label)?;
    let dp = b.zip_map(&db, |&s, &g| g * k * s * (1.0 - s))?;
    let dt = dp.map(|&g| -g);
    Ok((loss, dp, dt))
}

/// Mean absolute error over `region` (0 for an empty region).
pub fn threshold_loss(pred: &Raster<f64>, label: &Raster<f64>, region: &Mask) -> Result<f64> {
    threshold_loss_grad(pred, label, region).map(|(v, _)| v)
}

pub fn threshold_loss_grad(
    pred: &Raster<f64>,
    label: &Raster<f64>,
    region: &Mask,
) -> Result<(f64, Raster<f64>)> {
    pred.check_shape(label)?;
    pred.check_shape(region)?;
    let n = region.count();
    let mut grad = pred.map(|_| 0.0);
    if n == 0 {
        return Ok((0.0, grad));
    }
    let n = n as f64;
    let mut total = 0.0;
    for i in 0..pred.len() {
        if !region.data()[i] {
            continue;
        }
        let r = pred.data()[i] - label.data()[i];
        total += r.abs();
        grad.data_mut()[i] = if r > 0.0 {
            1.0 / n
        } else if r < 0.0 {
            -1.0 / n
        } else {
            0.0
        };
    }
    Ok((total / n, grad))
}

fn smooth_l1(x: f64) -> f64 {
    if x.abs() < 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

fn smooth_l1_deriv(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x
    } else {
        x.signum()
    }
}

/// Mean smooth-L1 over valid pixels and both channels, on residuals divided
/// by `scale`.
pub fn expand_loss(
    pred: &VectorField,
    label: &VectorField,
    valid: &Mask,
    scale: f64,
) -> Result<f64> {
    expand_loss_grad(pred, label, valid, scale).map(|(v, _)| v)
}

pub fn expand_loss_grad(
    pred: &VectorField,
    label: &VectorField,
    valid: &Mask,
    scale: f64,
) -> Result<(f64, VectorField)> {
    pred.dx.check_shape(&pred.dy)?;
    pred.dx.check_shape(&label.dx)?;
    pred.dx.check_shape(&label.dy)?;
    pred.dx.check_shape(valid)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("expand scale {scale}")));
    }
    let (h, w) = pred.shape();
    let mut grad = VectorField::zeros(h, w);
    let n = valid.count();
    if n == 0 {
        return Ok((0.0, grad));
    }
    let denom = 2.0 * n as f64;
    let mut total = 0.0;
    for i in 0..valid.len() {
        if !valid.data()[i] {
            continue;
        }
        let xd = (pred.dx.data()[i] - label.dx.data()[i]) / scale;
        let yd = (pred.dy.data()[i] - label.dy.data()[i]) / scale;
        total += smooth_l1(xd) + smooth_l1(yd);
        grad.dx.data_mut()[i] = smooth_l1_deriv(xd) / (scale * denom);
        grad.dy.data_mut()[i] = smooth_l1_deriv(yd) / (scale * denom);
    }
    Ok((total / denom, grad))
}

/// Residual scale for the expand loss: four times the mean shrink offset.
pub fn expand_scale(labels: &LabelMaps) -> f64 {
    let s = 4.0 * labels.mean_shrink;
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

pub fn total_loss(pred: &PredMaps, labels: &LabelMaps, w: &LossWeights) -> Result<LossBreakdown> {
    w.validate()?;
    let l_kp = bce_ohem(&pred.kernel_prob, &labels.kernel_mask, w.ohem_ratio)?;
    let binary = binarize(&pred.kernel_prob, &pred.thresh, w.k)?;
    let l_kb = dice_loss(&binary, &labels.kernel_mask)?;
    let l_t = threshold_loss(
        &pred.thresh,
        &labels.threshold_map,
        &labels.threshold_region,
    )?;
    let l_e = expand_loss(
        &pred.expand,
        &labels.expand_field,
        &labels.expand_valid,
        expand_scale(labels),
    )?;
    Ok(LossBreakdown {
        l_kp,
        l_kb,
        l_t,
        l_e,
        total: w.combine(l_kp, l_kb, l_t, l_e),
    })
}
