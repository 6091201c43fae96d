//! Label generation, losses, post-processing and evaluation for
//! kernel-expansion scene text detection.
//!
//! Text instances are shrunk to kernels, and each pixel around a kernel is
//! labelled with the vector to its nearest kernel pixel. A model trained on
//! those maps predicts kernels, a threshold map and the expand field;
//! [`postprocess::detect`] turns those predictions back into polygons.

pub mod clip;
pub mod contour;
pub mod edt;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod labelgen;
pub mod loss;
pub mod postprocess;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{GtInstance, ImageCounts, MatchReport};
pub use geometry::{Point2, PolySet, Polygon};
pub use labelgen::{InstanceLabel, LabelConfig, LabelMaps};
pub use loss::{LossBreakdown, LossWeights, PredMaps};
pub use postprocess::{DetectedInstance, PostprocessConfig};
pub use raster::{Mask, Raster, VectorField};
