//! Binary greyscale PGM (P5) export for eyeballing label and prediction maps.

use std::path::Path;

use kernelexpand::Raster;

use crate::error::Result;
use crate::fsutil::write_atomic;

/// Encodes `raster` scaled linearly from its min..max onto 0..255. The
/// original range is kept in a `# min=... max=...` comment. A constant
/// raster encodes as all zeros.
pub fn encode_pgm(raster: &Raster<f64>) -> Vec<u8> {
    let (h, w) = raster.shape();
    let (lo, hi) = raster
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let mut out = format!("P5\n# min={lo} max={hi}\n{w} {h}\n255\n").into_bytes();
    out.extend(raster.data().iter().map(|&v| {
        if hi > lo {
            ((v - lo) / (hi - lo) * 255.0).round() as u8
        } else {
            0
        }
    }));
    out
}

pub fn export_pgm(raster: &Raster<f64>, path: &Path) -> Result<()> {
    write_atomic(path, &encode_pgm(raster))
}
