//! Illuminant estimates from ranked gray pixels, and von Kries correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grayness::{rank_gray, GrayIndexMap};
use crate::image::{ChromaVector, LinearImage, Pixel};
use crate::kmeans::kmeans;

/// Normalized component-wise mean of the pixels at `coords`.
pub fn estimate_global(img: &LinearImage, coords: &[Pixel]) -> Result<ChromaVector> {
    if coords.is_empty() {
        return Err(Error::InvalidArgument(
            "global estimate needs at least one pixel".into(),
        ));
    }
    let mut sum = [0.0f64; 3];
    for p in coords {
        if p.x >= img.width() || p.y >= img.height() {
            return Err(Error::InvalidArgument(format!(
                "pixel ({}, {}) outside {}x{} image",
                p.x,
                p.y,
                img.width(),
                img.height()
            )));
        }
        let v = img.pixel(p.x, p.y);
        for c in 0..3 {
            sum[c] += v[c];
        }
    }
    let n = coords.len() as f64;
    ChromaVector::from_rgb(sum[0] / n, sum[1] / n, sum[2] / n)
        .map_err(|_| Error::DegenerateEstimate)
}

/// How pixel-to-centroid distance becomes a blending logit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKernel {
    /// `exp(-D^2 / (2 sigma^2))`.
    #[default]
    Gaussian,
    /// `exp(-D / (2 sigma^2))`.
    Linear,
}

impl DistanceKernel {
    fn logit(self, dist: f64, sigma: f64) -> f64 {
        match self {
            DistanceKernel::Gaussian => -(dist * dist) / (2.0 * sigma * sigma),
            DistanceKernel::Linear => -dist / (2.0 * sigma * sigma),
        }
    }
}

/// Parameters of the multi-illuminant pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiParams {
    /// Percent of lowest-GI pixels that are clustered.
    pub top_percent: f64,
    /// Number of illuminant clusters.
    pub clusters: usize,
    /// Blending bandwidth as a fraction of the image diagonal.
    pub sigma_fraction: f64,
    /// Absolute bandwidth in pixels; overrides `sigma_fraction`.
    pub sigma_pixels: Option<f64>,
    pub kernel: DistanceKernel,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for MultiParams {
    fn default() -> Self {
        MultiParams {
            top_percent: 10.0,
            clusters: 2,
            sigma_fraction: 0.05,
            sigma_pixels: None,
            kernel: DistanceKernel::Gaussian,
            seed: 0,
            max_iters: 100,
        }
    }
}

impl MultiParams {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::InvalidArgument("cluster count must be >= 1".into()));
        }
        if !(self.top_percent > 0.0 && self.top_percent <= 100.0) {
            return Err(Error::InvalidArgument(format!(
                "top percent must lie in (0, 100], got {}",
                self.top_percent
            )));
        }
        let sigma_ok = match self.sigma_pixels {
            Some(s) => s > 0.0 && s.is_finite(),
            None => self.sigma_fraction > 0.0 && self.sigma_fraction.is_finite(),
        };
        if !sigma_ok {
            return Err(Error::InvalidArgument("sigma must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        Ok(())
    }

    /// Bandwidth in pixels for a `width x height` image.
    pub fn sigma_for(&self, width: usize, height: usize) -> f64 {
        self.sigma_pixels.unwrap_or_else(|| {
            self.sigma_fraction * ((width * width + height * height) as f64).sqrt()
        })
    }
}

/// Per-pixel illuminant chroma.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminantField {
    width: usize,
    height: usize,
    planes: [Vec<f64>; 3],
}

impl IlluminantField {
    pub fn constant(width: usize, height: usize, chroma: ChromaVector) -> Self {
        let n = width * height;
        IlluminantField {
            width,
            height,
            planes: chroma.to_array().map(|v| vec![v; n]),
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> ChromaVector,
    ) -> Self {
        let n = width * height;
        let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for y in 0..height {
            for x in 0..width {
                let c = f(x, y).to_array();
                for k in 0..3 {
                    planes[k][y * width + x] = c[k];
                }
            }
        }
        IlluminantField {
            width,
            height,
            planes,
        }
    }

    /// Builds a field from three planes, each pixel normalized to unit norm.
    pub fn from_planes(width: usize, height: usize, planes: [Vec<f64>; 3]) -> Result<Self> {
        if planes.iter().any(|p| p.len() != width * height) || width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "field planes do not match dimensions".into(),
            ));
        }
        let mut out = [vec![0.0; width * height], vec![0.0; width * height], vec![0.0; width * height]];
        for i in 0..width * height {
            let c = ChromaVector::from_rgb(planes[0][i], planes[1][i], planes[2][i]).map_err(|_| {
                Error::InvalidArgument(format!("invalid chroma at ({}, {})", i % width, i / width))
            })?;
            for (k, v) in c.to_array().into_iter().enumerate() {
                out[k][i] = v;
            }
        }
        Ok(IlluminantField {
            width,
            height,
            planes: out,
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

    pub fn get(&self, x: usize, y: usize) -> ChromaVector {
        let i = y * self.width + x;
        ChromaVector::from_rgb(self.planes[0][i], self.planes[1][i], self.planes[2][i])
            .expect("field stores unit vectors")
    }

    pub fn planes(&self) -> [&[f64]; 3] {
        [&self.planes[0], &self.planes[1], &self.planes[2]]
    }
}

/// One cluster of gray pixels and its illuminant.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEstimate {
    pub centroid: [f64; 2],
    pub illuminant: ChromaVector,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialEstimate {
    pub field: IlluminantField,
    pub clusters: Vec<ClusterEstimate>,
    pub sigma: f64,
}

/// Softmax blending weights of `clusters` at pixel `(x, y)`.
pub fn blend_weights(
    x: f64,
    y: f64,
    centroids: &[[f64; 2]],
    sigma: f64,
    kernel: DistanceKernel,
) -> Vec<f64> {
    let logits: Vec<f64> = centroids
        .iter()
        .map(|c| kernel.logit(((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt(), sigma))
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Spatially varying estimate: k-means on the positions of the top gray
/// pixels, one illuminant per cluster, softmax blending by centroid distance.
pub fn estimate_spatial(
    img: &LinearImage,
    gimap: &GrayIndexMap,
    params: &MultiParams,
) -> Result<IlluminantField> {
    estimate_spatial_detailed(img, gimap, params).map(|s| s.field)
}

pub fn estimate_spatial_detailed(
    img: &LinearImage,
    gimap: &GrayIndexMap,
    params: &MultiParams,
) -> Result<SpatialEstimate> {
    params.validate()?;
    if gimap.dims() != img.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: gimap.dims(),
        });
    }
    let coords = rank_gray(gimap, params.top_percent)?;
    let points: Vec<[f64; 2]> = coords.iter().map(|p| [p.x as f64, p.y as f64]).collect();
    let km = kmeans(&points, params.clusters, params.seed, params.max_iters)?;

    let mut members: Vec<Vec<Pixel>> = vec![Vec::new(); km.centroids.len()];
    for (p, a) in coords.iter().zip(&km.assignments) {
        members[*a].push(*p);
    }
    let mut clusters = Vec::with_capacity(members.len());
    for (centroid, m) in km.centroids.iter().zip(&members) {
        clusters.push(ClusterEstimate {
            centroid: *centroid,
            illuminant: estimate_global(img, m)?,
            members: m.len(),
        });
    }

    let (w, h) = img.dims();
    let sigma = params.sigma_for(w, h);
    let centroids: Vec<[f64; 2]> = clusters.iter().map(|c| c.centroid).collect();
    let mut planes = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for y in 0..h {
        for x in 0..w {
            let weights = blend_weights(x as f64, y as f64, &centroids, sigma, params.kernel);
            let mut acc = [0.0; 3];
            for (wt, c) in weights.iter().zip(&clusters) {
                let l = c.illuminant.to_array();
                for k in 0..3 {
                    acc[k] += wt * l[k];
                }
            }
            let chroma = ChromaVector::from_array(acc)?;
            let v = chroma.to_array();
            for k in 0..3 {
                planes[k][y * w + x] = v[k];
            }
        }
    }
    Ok(SpatialEstimate {
        field: IlluminantField {
            width: w,
            height: h,
            planes,
        },
        clusters,
        sigma,
    })
}

/// A global or per-pixel illuminant to correct for.
#[derive(Debug, Clone, Copy)]
pub enum Illumination<'a> {
    Global(ChromaVector),
    Field(&'a IlluminantField),
}

fn gains(l: [f64; 3]) -> Result<[f64; 3]> {
    if l.iter().any(|v| *v <= 0.0) {
        return Err(Error::DegenerateIlluminant);
    }
    Ok([l[1] / l[0], 1.0, l[1] / l[2]])
}

/// Diagonal (von Kries) correction anchored on green: `I'_c = I_c L_g / L_c`,
/// clipped to `[0, 1]`.
pub fn correct_image(img: &LinearImage, illumination: Illumination<'_>) -> Result<LinearImage> {
    let (w, h) = img.dims();
    match illumination {
        Illumination::Global(l) => {
            let g = gains(l.to_array())?;
            LinearImage::from_fn(w, h, |x, y| {
                let p = img.pixel(x, y);
                [0, 1, 2].map(|c| (p[c] * g[c]).min(1.0))
            })
        }
        Illumination::Field(field) => {
            if field.dims() != img.dims() {
                return Err(Error::DimensionMismatch {
                    expected: img.dims(),
                    actual: field.dims(),
                });
            }
            let [fr, fg, fb] = field.planes();
            if fr.iter().chain(fg).chain(fb).any(|v| *v <= 0.0) {
                return Err(Error::DegenerateIlluminant);
            }
            LinearImage::from_fn(w, h, |x, y| {
                let i = y * w + x;
                let g = [fg[i] / fr[i], 1.0, fg[i] / fb[i]];
                let p = img.pixel(x, y);
                [0, 1, 2].map(|c| (p[c] * g[c]).min(1.0))
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grayness::EXCLUDED;

    #[test]
    fn global_examples() {
        let img = LinearImage::new(2, 1, vec![0.2, 0.4], vec![0.2, 0.4], vec![0.2, 0.4]).unwrap();
        let c = estimate_global(&img, &[Pixel::new(0, 0), Pixel::new(1, 0)]).unwrap();
        let n = ChromaVector::neutral();
        assert!((c.dot(&n) - 1.0).abs() < 1e-15);

        let img = LinearImage::filled(1, 1, [0.6, 0.3, 0.2]).unwrap();
        let c = estimate_global(&img, &[Pixel::new(0, 0)]).unwrap();
        assert!((c.r() - 0.6 / 0.7).abs() < 1e-15);
        assert!((c.g() - 0.3 / 0.7).abs() < 1e-15);
        assert!((c.b() - 0.2 / 0.7).abs() < 1e-15);
    }

    #[test]
    fn global_errors() {
        let black = LinearImage::filled(2, 2, [0.0; 3]).unwrap();
        assert!(matches!(
            estimate_global(&black, &[Pixel::new(0, 0)]),
            Err(Error::DegenerateEstimate)
        ));
        assert!(estimate_global(&black, &[]).is_err());
        assert!(estimate_global(&black, &[Pixel::new(2, 0)]).is_err());
    }

    #[test]
    fn weights_sum_to_one() {
        let cents = [[0.0, 0.0], [100.0, 0.0], [50.0, 80.0]];
        for kernel in [DistanceKernel::Gaussian, DistanceKernel::Linear] {
            for (x, y) in [(0.0, 0.0), (50.0, 10.0), (500.0, 500.0)] {
                let w = blend_weights(x, y, &cents, 20.0, kernel);
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
        assert_eq!(blend_weights(3.0, 4.0, &[[1.0, 1.0]], 5.0, DistanceKernel::Linear), vec![1.0]);
    }

    #[test]
    fn equidistant_pixel_with_identical_illuminants() {
        let w = blend_weights(50.0, 0.0, &[[0.0, 0.0], [100.0, 0.0]], 10.0, DistanceKernel::Gaussian);
        assert_eq!(w[0], w[1]);
        let l = ChromaVector::from_rgb(0.3, 0.6, 0.74).unwrap().to_array();
        let mixed = ChromaVector::from_array([0, 1, 2].map(|k| w[0] * l[k] + w[1] * l[k])).unwrap();
        for k in 0..3 {
            assert!((mixed.to_array()[k] - l[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn single_cluster_field_equals_global() {
        let img = LinearImage::from_fn(20, 10, |x, y| {
            let s = 0.2 + 0.02 * x as f64 + 0.01 * y as f64;
            [0.3 * s, 0.6 * s, 0.5 * s]
        })
        .unwrap();
        let values: Vec<f64> = (0..200)
            .map(|i| if i % 3 == 0 { EXCLUDED } else { (i % 17) as f64 })
            .collect();
        let map = GrayIndexMap::new(20, 10, values).unwrap();
        let params = MultiParams {
            clusters: 1,
            top_percent: 30.0,
            ..MultiParams::default()
        };
        let field = estimate_spatial(&img, &map, &params).unwrap();
        let coords = rank_gray(&map, 30.0).unwrap();
        let global = estimate_global(&img, &coords).unwrap();
        for y in 0..10 {
            for x in 0..20 {
                let f = field.get(x, y);
                for k in 0..3 {
                    assert!((f.to_array()[k] - global.to_array()[k]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn multi_params_validation() {
        let p = MultiParams {
            clusters: 0,
            ..MultiParams::default()
        };
        assert!(p.validate().is_err());
        let p = MultiParams {
            sigma_pixels: Some(-1.0),
            ..MultiParams::default()
        };
        assert!(p.validate().is_err());
        let p = MultiParams::default();
        assert!((p.sigma_for(30, 40) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn correction_examples() {
        let img = LinearImage::filled(1, 1, [0.3, 0.6, 0.74]).unwrap();
        let same = correct_image(&img, Illumination::Global(ChromaVector::neutral())).unwrap();
        assert_eq!(same, img);

        let l = ChromaVector::from_rgb(0.3, 0.6, 0.74).unwrap();
        let out = correct_image(&img, Illumination::Global(l)).unwrap();
        for v in out.pixel(0, 0) {
            assert!((v - 0.6).abs() < 1e-12);
        }

        let img = LinearImage::filled(1, 1, [0.9, 0.5, 0.5]).unwrap();
        let l = ChromaVector::from_rgb(0.3, 0.6, 0.6).unwrap();
        let out = correct_image(&img, Illumination::Global(l)).unwrap();
        assert_eq!(out.pixel(0, 0)[0], 1.0);
        assert!((out.pixel(0, 0)[2] - 0.5).abs() < 1e-12);

        let zero_b = ChromaVector::from_rgb(0.5, 0.5, 0.0).unwrap();
        assert!(matches!(
            correct_image(&img, Illumination::Global(zero_b)),
            Err(Error::DegenerateIlluminant)
        ));
    }

    #[test]
    fn field_correction_matches_global_on_constant_field() {
        let img = LinearImage::from_fn(5, 4, |x, y| [0.1 * x as f64 / 5.0 + 0.2, 0.3, 0.05 * y as f64 + 0.1])
            .unwrap();
        let l = ChromaVector::from_rgb(0.4, 0.5, 0.3).unwrap();
        let field = IlluminantField::constant(5, 4, l);
        let a = correct_image(&img, Illumination::Global(l)).unwrap();
        let b = correct_image(&img, Illumination::Field(&field)).unwrap();
        assert_eq!(a, b);
        let wrong = IlluminantField::constant(4, 4, l);
        assert!(correct_image(&img, Illumination::Field(&wrong)).is_err());
    }
}
