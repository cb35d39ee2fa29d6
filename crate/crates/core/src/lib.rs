//! Hybrid hierarchical light field compression.
//!
//! The pipeline factorizes each view subset of a light field into three
//! multiplicative transmittance layers, removes their spatial redundancy with
//! a randomized Block-Krylov SVD, codes the approximated layers with a
//! pluggable 2D codec, and then predicts the remaining view subsets from an
//! iteratively refined Fourier disparity layer model, coding only the
//! prediction residuals.
//!
//! Modules map onto the pipeline stages:
//!
//! * [`lightfield`] / [`scan`] / [`color`] — 4D data model, view subset
//!   scanning orders, color conversions
//! * [`layers`] — multiplicative three-layer model and its optimizer
//! * [`bksvd`] — randomized Block-Krylov low-rank approximation
//! * [`codec`] — baseline block-DCT codec plus an external-codec bridge
//! * [`fdl`] — Fourier disparity layer calibration, fitting, synthesis
//! * [`pipeline`] — end-to-end encoder/decoder and the container bitstream
//! * [`metrics`] — PSNR / YUV-PSNR / Bjontegaard rate savings
//! * [`fixtures`] — synthetic light field generators used by the oracle tests

pub mod bksvd;
pub mod codec;
pub mod color;
pub mod error;
pub mod fdl;
pub mod fft2;
pub mod fixtures;
pub mod image;
pub mod layers;
pub mod lightfield;
pub mod metrics;
pub mod pipeline;
pub mod scan;

mod rng;

pub use error::{Error, Result};
pub use image::RgbImage;
pub use lightfield::{LightField, ViewCoord};
pub use scan::{ScanKind, ScanOrder};
