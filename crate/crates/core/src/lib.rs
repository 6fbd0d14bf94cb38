//! Multi-frame rain removal toolkit.
//!
//! A rainy sequence of a static scene is collapsed into a rain-free pseudo
//! ground-truth image in two steps: the stacked frames are split into a
//! low-rank background and a sparse rain component ([`rpca`]), and the
//! aggregated background is contrast-corrected and sharpened under the
//! guidance of a reference histogram ([`enhance`]). [`metrics`] provides the
//! PSNR/SSIM pair used to score results, and [`pipeline`] wires everything
//! into batch runs that emit (rainy frame, pseudo-GT) pair manifests for
//! training a restoration network downstream.
//!
//! Images are stored as planar `f64` rasters in `[0, 1]`; conversion to
//! 8-bit happens only at file boundaries.

pub mod enhance;
pub mod error;
pub mod image;
pub mod metrics;
pub mod pipeline;
pub mod rpca;
pub mod sequence;
pub mod synthetic;
pub mod temporal;

pub use crate::enhance::{EnhanceParams, Histogram, HistogramMetric, SharpenMode, TuneGrid};
pub use crate::error::{Error, Result};
pub use crate::image::Image;
pub use crate::metrics::{psnr, quality_report, ssim, QualityReport};
pub use crate::rpca::{derain_sequence, rpca_decompose, RpcaConfig, RpcaOutput};
pub use crate::sequence::{load_manifest, save_image, save_sequence, validate_alignment, AlignmentReport, FrameSequence};
pub use crate::temporal::{temporal_mean, temporal_median};
