//! Grayness Index (GI) maps and gray pixel ranking.
//!
//! For a pixel on a gray surface the log ratio between the red (or blue)
//! channel and the luminance magnitude `I_R + I_G + I_B` is locally constant,
//! whatever the shading and specular intensities, so its Laplacian-of-Gaussian
//! contrast vanishes. GI is the l2 norm of the red and blue contrasts: the
//! smaller it is, the grayer the pixel.
//!
//! Pixels are excluded from candidacy when the caller's mask flags them, when
//! any channel is saturated, or when any raw channel lacks local contrast
//! (`|C{I_i}| <= epsilon`), since a flat patch yields a small GI whatever its
//! colour. The surviving GI values are averaged over a box window to damp
//! isolated noisy minima; exclusions survive the averaging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Channel, LinearImage, Pixel, PixelMask, ScalarPlane};
use crate::kernels::{self, DEFAULT_LOG_FLOOR, DEFAULT_LOG_SIGMA, DEFAULT_LOG_SIZE};

/// Sentinel stored for excluded pixels.
pub const EXCLUDED: f64 = f64::INFINITY;

/// Proportion (percent) of lowest-GI pixels averaged for a global estimate.
pub const DEFAULT_TOP_PERCENT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GiParams {
    /// Contrast threshold below which a channel is considered flat.
    pub epsilon: f64,
    pub log_kernel_size: usize,
    pub log_sigma: f64,
    pub smooth_window: usize,
    pub log_floor: f64,
    /// Adds the green residual to the norm.
    pub include_green: bool,
    /// Leaves GI undefined where the LoG support or the smoothing window
    /// reaches past the image edge.
    pub exclude_border: bool,
}

impl Default for GiParams {
    fn default() -> Self {
        GiParams {
            epsilon: 1e-4,
            log_kernel_size: DEFAULT_LOG_SIZE,
            log_sigma: DEFAULT_LOG_SIGMA,
            smooth_window: 7,
            log_floor: DEFAULT_LOG_FLOOR,
            include_green: false,
            exclude_border: true,
        }
    }
}

impl GiParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.log_kernel_size < 3 || self.log_kernel_size % 2 == 0 {
            return bad(format!(
                "LoG kernel size must be odd and >= 3, got {}",
                self.log_kernel_size
            ));
        }
        if self.smooth_window < 3 || self.smooth_window % 2 == 0 {
            return bad(format!(
                "smoothing window must be odd and >= 3, got {}",
                self.smooth_window
            ));
        }
        if !(self.log_sigma > 0.0 && self.log_sigma.is_finite()) {
            return bad(format!("LoG sigma must be positive, got {}", self.log_sigma));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return bad(format!("log floor must be positive, got {}", self.log_floor));
        }
        Ok(())
    }
}

/// Per-pixel GI, with [`EXCLUDED`] marking pixels that are not candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayIndexMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GrayIndexMap {
    /// Wraps raw values; every entry must be finite and non-negative or
    /// [`EXCLUDED`].
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "GI map of {} values does not match {width}x{height}",
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !(*v == EXCLUDED || (v.is_finite() && *v >= 0.0)))
        {
            return Err(Error::InvalidArgument(
                "GI values must be non-negative or excluded".into(),
            ));
        }
        Ok(GrayIndexMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `None` for excluded pixels.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let v = self.values[y * self.width + x];
        (v != EXCLUDED).then_some(v)
    }

    pub fn is_excluded(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x] == EXCLUDED
    }

    pub fn count_candidates(&self) -> usize {
        self.values.iter().filter(|v| **v != EXCLUDED).count()
    }
}


/// Computes the smoothed GI map of `img`, honouring `mask`.
///
/// An image where nothing survives the exclusion rules yields an all-excluded
/// map rather than an error; [`rank_gray`] reports that case.
pub fn compute_gi(img: &LinearImage, mask: &PixelMask, params: &GiParams) -> Result<GrayIndexMap> {
    params.validate()?;
    if mask.dims() != img.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: mask.dims(),
        });
    }
    let (w, h) = img.dims();
    let kernel = kernels::log_kernel(params.log_kernel_size, params.log_sigma)?;

    let mut excluded: Vec<bool> = mask.flags().to_vec();
    let kr = params.log_kernel_size / 2;
    let wr = params.smooth_window / 2;
    if params.exclude_border {
        flag_border(&mut excluded, w, h, kr);
    }
    let mut scratch = vec![0.0; w * h];
    for channel in Channel::ALL {
        let plane = img.channel(channel);
        kernels::convolve_into(plane, w, h, &kernel, &mut scratch);
        for ((ex, c), v) in excluded.iter_mut().zip(&scratch).zip(plane) {
            *ex |= *v >= 1.0 || c.abs() <= params.epsilon;
        }
    }

    let mut residual_channels = vec![Channel::R, Channel::B];
    if params.include_green {
        residual_channels.push(Channel::G);
    }
    let mut residual = vec![0.0; w * h];
    let mut sq = vec![0.0; w * h];
    for channel in residual_channels {
        kernels::log_residual_into(img, channel, params.log_floor, &mut residual);
        kernels::convolve_into(&residual, w, h, &kernel, &mut scratch);
        for (s, d) in sq.iter_mut().zip(&scratch) {
            *s += d * d;
        }
    }
    drop((scratch, residual));
    for (s, ex) in sq.iter_mut().zip(&excluded) {
        *s = if *ex { EXCLUDED } else { s.sqrt() };
    }

    let mut values = kernels::box_mean(&ScalarPlane::from_raw(w, h, sq), params.smooth_window)?.into_values();
    if params.exclude_border {
        let band = kr + wr;
        for y in 0..h {
            let row = &mut values[y * w..(y + 1) * w];
            if y < band || y + band >= h {
                row.fill(EXCLUDED);
            } else {
                let edge = band.min(w);
                row[..edge].fill(EXCLUDED);
                row[w - edge..].fill(EXCLUDED);
            }
        }
    }
    Ok(GrayIndexMap {
        width: w,
        height: h,
        values,
    })
}

fn flag_border(flags: &mut [bool], w: usize, h: usize, band: usize) {
    for y in 0..h {
        for x in 0..w {
            if x < band || y < band || x + band >= w || y + band >= h {
                flags[y * w + x] = true;
            }
        }
    }
}

/// Number of pixels selected from `candidates` at `top_percent`.
pub fn selection_size(candidates: usize, top_percent: f64) -> usize {
    let n = (top_percent / 100.0 * candidates as f64).round() as usize;
    n.clamp(1, candidates.max(1))
}

/// The `top_percent` percent of candidates with the smallest GI, in rank
/// order. Ties are broken by row-major pixel index.
pub fn rank_gray(gimap: &GrayIndexMap, top_percent: f64) -> Result<Vec<Pixel>> {
    if !(top_percent > 0.0 && top_percent <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "top percent must lie in (0, 100], got {top_percent}"
        )));
    }
    let mut candidates: Vec<(f64, usize)> = gimap
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != EXCLUDED)
        .map(|(i, v)| (*v, i))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoGrayCandidates);
    }
    let n = selection_size(candidates.len(), top_percent);
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if n < candidates.len() {
        candidates.select_nth_unstable_by(n, order);
        candidates.truncate(n);
    }
    candidates.sort_unstable_by(order);
    Ok(candidates
        .into_iter()
        .map(|(_, i)| Pixel::new(i % gimap.width, i / gimap.width))
        .collect())
}
