//! Ground-truth generation for the three regression targets: the shrunk
//! kernel mask, the threshold map around each contour, and the expand field
//! pointing from the pixels around each kernel back to it.

use crate::edt;
use crate::error::Result;
use crate::geometry::{
    distance_to_boundary, offset_polygon, shrink_offset, Point2, PolySet, Polygon,
};
use crate::raster::{rasterize_polygon, rasterize_polyset, Mask, Raster, VectorField};

/// One annotated text instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceLabel {
    pub polygon: Polygon,
    /// Don't-care region for evaluation. Labels are generated identically.
    pub ignore: bool,
}

impl InstanceLabel {
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfig {
    pub shrink_ratio: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            shrink_ratio: 0.4,
            t_min: 0.3,
            t_max: 0.7,
        }
    }
}

/// Per-image label rasters.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMaps {
    pub kernel_mask: Mask,
    pub threshold_map: Raster<f64>,
    /// Union of the dilated contours; the region the threshold loss covers.
    pub threshold_region: Mask,
    pub expand_field: VectorField,
    pub expand_valid: Mask,
    /// 0 = background, `i` = pixel belongs to the kernel of instance `i - 1`.
    pub instance_id: Raster<u32>,
    pub ignore: Vec<bool>,
    /// Mean of the per-instance shrink offsets (0 with no instances).
    pub mean_shrink: f64,
}

impl LabelMaps {
    pub fn shape(&self) -> (usize, usize) {
        self.kernel_mask.shape()
    }
}

/// Shrink offset, kernel geometry and kernel raster of one instance.
#[derive(Debug, Clone)]
pub struct InstanceKernel {
    pub shrink: f64,
    pub kernel: PolySet,
    pub mask: Mask,
}

/// Shrinks `poly` by its offset and rasterizes the result, falling back to
/// half the inradius when the full offset consumes the polygon, and to the
/// instance itself when even that leaves no pixel.
pub fn instance_kernel(
    poly: &Polygon,
    height: usize,
    width: usize,
    r: f64,
) -> Result<InstanceKernel> {
    let shrink = shrink_offset(poly, r)?;
    let mut kernel = offset_polygon(poly, -shrink);
    let mut mask = rasterize_polyset(&kernel, height, width);
    if !mask.any() {
        let inner = inradius(poly);
        if inner > 0.0 {
            kernel = offset_polygon(poly, -0.5 * inner);
            mask = rasterize_polyset(&kernel, height, width);
        }
    }
    if !mask.any() {
        kernel = PolySet::single(poly.clone());
        mask = rasterize_polygon(poly, height, width);
    }
    Ok(InstanceKernel {
        shrink,
        kernel,
        mask,
    })
}

/// Largest boundary distance over the pixel centers inside `poly`
/// (a discrete stand-in for the interior distance-transform maximum).
/// Falls back to the vertex centroid for polygons thinner than a pixel.
fn inradius(poly: &Polygon) -> f64 {
    let (x0, y0, x1, y1) = poly.bbox();
    let mut best: f64 = 0.0;
    for y in (y0.floor() as i64)..(y1.ceil() as i64) {
        for x in (x0.floor() as i64)..(x1.ceil() as i64) {
            let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            if poly.contains(c) {
                best = best.max(distance_to_boundary(c, poly));
            }
        }
    }
    if best == 0.0 {
        let n = poly.len() as f64;
        let c = poly
            .vertices()
            .iter()
            .fold(Point2::default(), |acc, &p| acc + p)
            * (1.0 / n);
        if poly.contains(c) {
            best = distance_to_boundary(c, poly);
        }
    }
    best
}

fn kernels(
    instances: &[InstanceLabel],
    height: usize,
    width: usize,
    r: f64,
) -> Result<Vec<InstanceKernel>> {
    instances
        .iter()
        .map(|inst| instance_kernel(&inst.polygon, height, width, r))
        .collect()
}

/// Union of all kernels and the instance ownership raster (later instances
/// win where kernels overlap).
pub fn gen_kernel_mask(
    instances: &[InstanceLabel],
    height: usize,
    width: usize,
    r: f64,
) -> Result<(Mask, Raster<u32>)> {
    let ks = kernels(instances, height, width, r)?;
    Ok(kernel_union(&ks, height, width))
}

fn kernel_union(ks: &[InstanceKernel], height: usize, width: usize) -> (Mask, Raster<u32>) {
    let mut mask = Mask::new(height, width, false);
    let mut ids = Raster::new(height, width, 0u32);
    for (i, k) in ks.iter().enumerate() {
        for (idx, &on) in k.mask.data().iter().enumerate() {
            if on {
                mask.data_mut()[idx] = true;
                ids.data_mut()[idx] = i as u32 + 1;
            }
        }
    }
    (mask, ids)
}

/// Threshold map and the region it is supervised on.
pub fn gen_threshold_map(
    instances: &[InstanceLabel],
    height: usize,
    width: usize,
    r: f64,
    t_min: f64,
    t_max: f64,
) -> Result<(Raster<f64>, Mask)> {
    let ks = kernels(instances, height, width, r)?;
    Ok(threshold_from_kernels(
        instances, &ks, height, width, t_min, t_max,
    ))
}

fn threshold_from_kernels(
    instances: &[InstanceLabel],
    ks: &[InstanceKernel],
    height: usize,
    width: usize,
    t_min: f64,
    t_max: f64,
) -> (Raster<f64>, Mask) {
    let mut map = Raster::new(height, width, t_min);
    let mut region = Mask::new(height, width, false);
    for (inst, k) in instances.iter().zip(ks) {
        let dilated = offset_polygon(&inst.polygon, k.shrink);
        let dilated_mask = rasterize_polyset(&dilated, height, width);
        region.union_with(&dilated_mask);
        if k.shrink <= 0.0 {
            continue;
        }
        let band = dilated_mask.minus(&k.mask);
        for y in 0..height {
            for x in 0..width {
                if !band.get(x, y) {
                    continue;
                }
                let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                let d = distance_to_boundary(c, &inst.polygon);
                let v = t_min + (t_max - t_min) * (1.0 - d / k.shrink).clamp(0.0, 1.0);
                if v > map.get(x, y) {
                    map.set(x, y, v);
                }
            }
        }
    }
    (map, region)
}

/// Expand field and its validity mask.
///
/// Each instance covers the pixels of its two-step dilation (offsets `+R`
/// and `+2R`) that are not kernel pixels: the surrounding ring together with
/// the gap between kernel and contour. Every covered pixel stores the vector
/// to its nearest kernel pixel over all instances.
pub fn gen_expand_field(
    instances: &[InstanceLabel],
    height: usize,
    width: usize,
    r: f64,
) -> Result<(VectorField, Mask)> {
    let ks = kernels(instances, height, width, r)?;
    let (kernel_mask, _) = kernel_union(&ks, height, width);
    Ok(expand_from_kernels(instances, &ks, &kernel_mask))
}

fn expand_from_kernels(
    instances: &[InstanceLabel],
    ks: &[InstanceKernel],
    kernel_mask: &Mask,
) -> (VectorField, Mask) {
    let (height, width) = kernel_mask.shape();
    let mut valid = Mask::new(height, width, false);
    for (inst, k) in instances.iter().zip(ks) {
        if k.shrink <= 0.0 {
            continue;
        }
        let outer = offset_polygon(&inst.polygon, 2.0 * k.shrink);
        valid.union_with(&rasterize_polyset(&outer, height, width));
    }
    let valid = valid.minus(kernel_mask);
    let mut field = VectorField::zeros(height, width);
    let nearest = edt::nearest_set_pixel(kernel_mask);
    for y in 0..height {
        for x in 0..width {
            if !valid.get(x, y) {
                continue;
            }
            if let Some((sx, sy)) = nearest.get(x, y) {
                field.set(x, y, (sx as f64 - x as f64, sy as f64 - y as f64));
            }
        }
    }
    (field, valid)
}

/// All label rasters for one image.
pub fn gen_labels(
    instances: &[InstanceLabel],
    height: usize,
    width: usize,
    cfg: &LabelConfig,
) -> Result<LabelMaps> {
    let ks = kernels(instances, height, width, cfg.shrink_ratio)?;
    let (kernel_mask, instance_id) = kernel_union(&ks, height, width);
    let (threshold_map, threshold_region) =
        threshold_from_kernels(instances, &ks, height, width, cfg.t_min, cfg.t_max);
    let (expand_field, expand_valid) = expand_from_kernels(instances, &ks, &kernel_mask);
    let mean_shrink = if ks.is_empty() {
        0.0
    } else {
        ks.iter().map(|k| k.shrink).sum::<f64>() / ks.len() as f64
    };
    Ok(LabelMaps {
        kernel_mask,
        threshold_map,
        threshold_region,
        expand_field,
        expand_valid,
        instance_id,
        ignore: instances.iter().map(|i| i.ignore).collect(),
        mean_shrink,
    })
}
