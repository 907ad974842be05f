//! Classical statistical illuminant estimators: Gray World, White Patch,
//! Shades-of-Gray and first/second order Gray Edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ChromaVector, LinearImage, PixelMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    /// Minkowski norm for Shades-of-Gray; `inf` gives White Patch.
    pub sog_p: f64,
    /// Minkowski norm for Gray Edge.
    pub edge_p: f64,
    /// Gaussian pre-smoothing for Gray Edge.
    pub edge_sigma: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            sog_p: 4.0,
            edge_p: 6.0,
            edge_sigma: 2.0,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("sog_p", self.sog_p), ("edge_p", self.edge_p)] {
            if !(p >= 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 1, got {p}")));
            }
        }
        if !(self.edge_sigma >= 0.0 && self.edge_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "edge_sigma must be non-negative, got {}",
                self.edge_sigma
            )));
        }
        Ok(())
    }
}

fn check_mask(img: &LinearImage, mask: &PixelMask) -> Result<()> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: mask.dims(),
        });
    }
    Ok(())
}

fn to_chroma(v: [f64; 3]) -> Result<ChromaVector> {
    ChromaVector::from_array(v).map_err(|_| Error::DegenerateEstimate)
}

/// Per-channel arithmetic mean over unmasked pixels, normalized.
pub fn gray_world(img: &LinearImage, mask: &PixelMask) -> Result<ChromaVector> {
    check_mask(img, mask)?;
    let n = mask.flags().iter().filter(|f| !**f).count();
    if n == 0 {
        return Err(Error::NoValidPixels);
    }
    let means = img.planes().map(|p| {
        p.iter()
            .zip(mask.flags())
            .filter(|(_, m)| !**m)
            .map(|(v, _)| *v)
            .sum::<f64>()
            / n as f64
    });
    to_chroma(means)
}

/// Per-channel maximum over unmasked pixels, normalized.
pub fn white_patch(img: &LinearImage, mask: &PixelMask) -> Result<ChromaVector> {
    check_mask(img, mask)?;
    if mask.flags().iter().all(|f| *f) {
        return Err(Error::NoValidPixels);
    }
    let maxima = img.planes().map(|p| {
        p.iter()
            .zip(mask.flags())
            .filter(|(_, m)| !**m)
            .map(|(v, _)| *v)
            .fold(0.0, f64::max)
    });
    to_chroma(maxima)
}

/// `(mean v^p)^(1/p)`, evaluated relative to the maximum to avoid underflow.
fn minkowski_mean(values: &[f64], p: f64) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return max;
    }
    let mean = values.iter().map(|v| (v / max).powf(p)).sum::<f64>() / values.len() as f64;
    max * mean.powf(1.0 / p)
}

/// Minkowski p-norm mean per channel over unmasked pixels. `p = 1` is Gray
/// World and `p = inf` White Patch.
pub fn shades_of_gray(img: &LinearImage, mask: &PixelMask, p: f64) -> Result<ChromaVector> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("Minkowski p must be >= 1, got {p}")));
    }
    if p == 1.0 {
        return gray_world(img, mask);
    }
    if p.is_infinite() {
        return white_patch(img, mask);
    }
    check_mask(img, mask)?;
    let stats = img.planes().map(|plane| {
        let vals: Vec<f64> = plane
            .iter()
            .zip(mask.flags())
            .filter(|(_, m)| !**m)
            .map(|(v, _)| *v)
            .collect();
        (vals.len(), minkowski_mean(&vals, p))
    });
    if stats[0].0 == 0 {
        return Err(Error::NoValidPixels);
    }
    to_chroma(stats.map(|s| s.1))
}

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

fn smooth(plane: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return plane.to_vec();
    }
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                acc += t * plane[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                acc += t * tmp[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn derivative_magnitude(f: &[f64], w: usize, h: usize, order: u8) -> Vec<f64> {
    let at = |x: isize, y: isize| {
        f[(y.clamp(0, h as isize - 1) as usize) * w + x.clamp(0, w as isize - 1) as usize]
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            out[y as usize * w + x as usize] = if order == 1 {
                let dx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
                let dy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
                (dx * dx + dy * dy).sqrt()
            } else {
                (at(x + 1, y) + at(x - 1, y) + at(x, y + 1) + at(x, y - 1) - 4.0 * at(x, y)).abs()
            };
        }
    }
    out
}

/// Pixels whose derivative support (radius `r`) contains no masked pixel.
fn eroded_valid(mask: &PixelMask, r: usize) -> Vec<bool> {
    let (w, h) = mask.dims();
    let flags = mask.flags();
    let mut rows = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            rows[y * w + x] = flags[y * w + x0..=y * w + x1].iter().any(|f| *f);
        }
    }
    let mut valid = vec![false; w * h];
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        for x in 0..w {
            valid[y * w + x] = !(y0..=y1).any(|yy| rows[yy * w + x]);
        }
    }
    valid
}

/// Minkowski-p mean of the first (gradient magnitude) or second (Laplacian
/// magnitude) derivative of each Gaussian-smoothed channel.
///
/// Only pixels whose whole filter support is unmasked are used, so masked
/// content never leaks into the estimate.
pub fn gray_edge(
    img: &LinearImage,
    mask: &PixelMask,
    order: u8,
    p: f64,
    sigma: f64,
) -> Result<ChromaVector> {
    check_mask(img, mask)?;
    if order != 1 && order != 2 {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("Minkowski p must be >= 1, got {p}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be non-negative, got {sigma}")));
    }
    let (w, h) = img.dims();
    let support = if sigma > 0.0 { (3.0 * sigma).ceil() as usize } else { 0 } + 1;
    let valid = eroded_valid(mask, support);
    if !valid.iter().any(|v| *v) {
        return Err(Error::NoValidPixels);
    }
    let stats = img.planes().map(|plane| {
        let d = derivative_magnitude(&smooth(plane, w, h, sigma), w, h, order);
        let vals: Vec<f64> = d
            .iter()
            .zip(&valid)
            .filter(|(_, v)| **v)
            .map(|(d, _)| *d)
            .collect();
        if p == 1.0 {
            vals.iter().sum::<f64>() / vals.len() as f64
        } else {
            minkowski_mean(&vals, p)
        }
    });
    to_chroma(stats)
}
