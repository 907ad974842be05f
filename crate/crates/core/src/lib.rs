//! Learning-free color constancy built on the Grayness Index.
//!
//! The Grayness Index (GI) scores every pixel by how closely its local
//! chromatic structure matches that of an achromatic surface under the
//! dichromatic reflection model: the Laplacian-of-Gaussian contrast of the
//! log ratio between a color channel and the luminance magnitude vanishes for
//! gray surfaces regardless of shading and specular highlights. Ranking
//! pixels by GI yields gray candidates whose colour is the illuminant.
//!
//! The crate is organised along the processing pipeline:
//!
//! * [`image`] – pixel containers ([`LinearImage`], [`ScalarPlane`],
//!   [`PixelMask`], [`ChromaVector`]).
//! * [`kernels`] – log residual planes, LoG contrast and masked box averaging.
//! * [`preprocess`] – black level / saturation correction and pixel masks.
//! * [`grayness`] – GI map computation and gray pixel ranking.
//! * [`estimation`] – global and spatially varying illuminant estimates,
//!   von Kries correction.
//! * [`synthetic`] – dichromatic scene renderer used as a ground-truth oracle.
//! * [`baselines`] – Gray World, White Patch, Shades-of-Gray and Gray Edge.
//! * [`benchmark`] – angular error, summary statistics, dataset runs and the
//!   shrinking-box experiment.
//! * [`io`] – image readers and writers (PNG, TIFF, PFM, float rasters).

pub mod baselines;
pub mod benchmark;
pub mod config;
pub mod error;
pub mod estimation;
pub mod grayness;
pub mod image;
pub mod io;
pub mod kernels;
pub mod kmeans;
pub mod preprocess;
pub mod synthetic;

pub use crate::error::{Error, Result};
pub use crate::estimation::{
    correct_image, estimate_global, estimate_spatial, Illumination, IlluminantField, MultiParams,
};
pub use crate::grayness::{compute_gi, rank_gray, GiParams, GrayIndexMap};
pub use crate::image::{Channel, ChromaVector, LinearImage, Pixel, PixelMask, Rect, ScalarPlane};
pub use crate::preprocess::{correct_levels, dark_mask, saturation_mask, CameraLevels, RawImage};
