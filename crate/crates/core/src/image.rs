//! Pixel containers shared by every stage of the pipeline.
//!
//! All containers store row-major `f64` planes. Coordinates are `(x, y)` with
//! `x` the column and `y` the row.

use crate::error::{Error, Result};

/// A pixel coordinate, `x` is the column and `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pixel {
    pub x: usize,
    pub y: usize,
}

impl Pixel {
    pub fn new(x: usize, y: usize) -> Self {
        Pixel { x, y }
    }
}

/// Axis-aligned rectangle in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Rect {
            x,
            y,
            width,
            height,
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.width && y < self.y + self.height
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.width as f64 / 2.0,
            self.y as f64 + self.height as f64 / 2.0,
        )
    }

    /// Intersection with `[0, width) x [0, height)`.
    pub fn clip(&self, width: usize, height: usize) -> Option<Rect> {
        let x1 = (self.x + self.width).min(width);
        let y1 = (self.y + self.height).min(height);
        if self.x >= x1 || self.y >= y1 {
            return None;
        }
        Some(Rect::new(self.x, self.y, x1 - self.x, y1 - self.y))
    }

    /// The rectangle expressed in the coordinates of a crop whose origin is
    /// `origin`, clipped to the crop.
    pub fn relative_to(&self, origin: &Rect) -> Option<Rect> {
        let x0 = self.x.max(origin.x);
        let y0 = self.y.max(origin.y);
        let x1 = (self.x + self.width).min(origin.x + origin.width);
        let y1 = (self.y + self.height).min(origin.y + origin.height);
        if x0 >= x1 || y0 >= y1 {
            return None;
        }
        Some(Rect::new(x0 - origin.x, y0 - origin.y, x1 - x0, y1 - y0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    pub fn index(self) -> usize {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Linear RGB raster with every value finite and inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    planes: [Vec<f64>; 3],
}

impl LinearImage {
    pub fn new(width: usize, height: usize, r: Vec<f64>, g: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        let n = width * height;
        for (name, plane) in [("R", &r), ("G", &g), ("B", &b)] {
            if plane.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "{name} plane has {} values, expected {n}",
                    plane.len()
                )));
            }
            if let Some(i) = plane.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidArgument(format!(
                    "{name} value {} at ({}, {}) outside [0, 1]",
                    plane[i],
                    i % width,
                    i / width
                )));
            }
        }
        Ok(LinearImage {
            width,
            height,
            planes: [r, g, b],
        })
    }

    /// Builds an image from interleaved RGB samples.
    pub fn from_interleaved(width: usize, height: usize, rgb: &[f64]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::InvalidArgument(format!(
                "expected {} interleaved samples, got {}",
                width * height * 3,
                rgb.len()
            )));
        }
        let mut planes = [
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
        ];
        for px in rgb.chunks_exact(3) {
            for c in 0..3 {
                planes[c].push(px[c]);
            }
        }
        let [r, g, b] = planes;
        LinearImage::new(width, height, r, g, b)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let n = width * height;
        let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                for c in 0..3 {
                    planes[c][y * width + x] = v[c];
                }
            }
        }
        let [r, g, b] = planes;
        LinearImage::new(width, height, r, g, b)
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        LinearImage::from_fn(width, height, |_, _| rgb)
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

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel(&self, channel: Channel) -> &[f64] {
        &self.planes[channel.index()]
    }

    pub fn planes(&self) -> [&[f64]; 3] {
        [&self.planes[0], &self.planes[1], &self.planes[2]]
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = y * self.width + x;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    pub fn pixel_at(&self, index: usize) -> [f64; 3] {
        [
            self.planes[0][index],
            self.planes[1][index],
            self.planes[2][index],
        ]
    }

    /// Multiplies every value by `s`; fails if a value leaves `[0, 1]`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let [r, g, b] = self
            .planes
            .clone()
            .map(|p| p.into_iter().map(|v| v * s).collect::<Vec<_>>());
        LinearImage::new(self.width, self.height, r, g, b)
    }

    pub fn crop(&self, rect: &Rect) -> Result<Self> {
        if rect.width == 0
            || rect.height == 0
            || rect.x + rect.width > self.width
            || rect.y + rect.height > self.height
        {
            return Err(Error::InvalidArgument(format!(
                "crop {rect:?} outside {}x{} image",
                self.width, self.height
            )));
        }
        let planes = self.planes.each_ref().map(|p| {
            let mut out = Vec::with_capacity(rect.width * rect.height);
            for y in rect.y..rect.y + rect.height {
                let row = y * self.width;
                out.extend_from_slice(&p[row + rect.x..row + rect.x + rect.width]);
            }
            out
        });
        Ok(LinearImage {
            width: rect.width,
            height: rect.height,
            planes,
        })
    }

    /// `|I| = I_R + I_G + I_B` per pixel.
    pub fn channel_sum(&self) -> ScalarPlane {
        let [r, g, b] = self.planes();
        let values = r
            .iter()
            .zip(g)
            .zip(b)
            .map(|((r, g), b)| r + g + b)
            .collect();
        ScalarPlane {
            width: self.width,
            height: self.height,
            values,
        }
    }

    pub fn into_planes(self) -> [Vec<f64>; 3] {
        self.planes
    }
}

/// A real-valued plane, e.g. a log residual or a contrast response.
///
/// Values are finite, except that [`crate::grayness::EXCLUDED`] (`+inf`) may
/// mark excluded pixels in planes that feed [`crate::kernels::box_mean`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPlane {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarPlane {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "plane has {} values, expected {}",
                values.len(),
                width * height
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("plane contains NaN".into()));
        }
        Ok(ScalarPlane {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dims(width, height)?;
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        ScalarPlane::new(width, height, values)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        ScalarPlane::new(width, height, vec![value; width * height])
    }

    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        ScalarPlane {
            width,
            height,
            values,
        }
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

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Per-pixel exclusion flags; `true` removes the pixel from gray candidacy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if flags.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "mask has {} flags, expected {}",
                flags.len(),
                width * height
            )));
        }
        Ok(PixelMask {
            width,
            height,
            flags,
        })
    }

    /// A mask with no pixel flagged.
    pub fn clear(width: usize, height: usize) -> Self {
        PixelMask {
            width,
            height,
            flags: vec![false; width * height],
        }
    }

    pub fn from_rect(width: usize, height: usize, rect: &Rect) -> Self {
        let mut mask = PixelMask::clear(width, height);
        mask.flag_rect(rect);
        mask
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

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn is_flagged(&self, x: usize, y: usize) -> bool {
        self.flags[y * self.width + x]
    }

    pub fn flag(&mut self, x: usize, y: usize) {
        self.flags[y * self.width + x] = true;
    }

    pub fn flag_rect(&mut self, rect: &Rect) {
        if let Some(r) = rect.clip(self.width, self.height) {
            for y in r.y..r.y + r.height {
                self.flags[y * self.width + r.x..y * self.width + r.x + r.width].fill(true);
            }
        }
    }

    pub fn count_flagged(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub fn union(&self, other: &PixelMask) -> Result<PixelMask> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        let flags = self
            .flags
            .iter()
            .zip(&other.flags)
            .map(|(a, b)| *a || *b)
            .collect();
        Ok(PixelMask {
            width: self.width,
            height: self.height,
            flags,
        })
    }

    pub fn crop(&self, rect: &Rect) -> Result<PixelMask> {
        if rect.width == 0
            || rect.height == 0
            || rect.x + rect.width > self.width
            || rect.y + rect.height > self.height
        {
            return Err(Error::InvalidArgument(format!(
                "crop {rect:?} outside {}x{} mask",
                self.width, self.height
            )));
        }
        let mut flags = Vec::with_capacity(rect.width * rect.height);
        for y in rect.y..rect.y + rect.height {
            let row = y * self.width;
            flags.extend_from_slice(&self.flags[row + rect.x..row + rect.x + rect.width]);
        }
        Ok(PixelMask {
            width: rect.width,
            height: rect.height,
            flags,
        })
    }
}

/// Unit-norm, non-negative RGB illuminant chroma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChromaVector {
    r: f64,
    g: f64,
    b: f64,
}

impl ChromaVector {
    /// Normalizes `(r, g, b)`. Fails on negative, non-finite or all-zero input.
    pub fn from_rgb(r: f64, g: f64, b: f64) -> Result<Self> {
        if ![r, g, b].iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "chroma components must be finite and non-negative, got ({r}, {g}, {b})"
            )));
        }
        let norm = (r * r + g * g + b * b).sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateEstimate);
        }
        Ok(ChromaVector {
            r: r / norm,
            g: g / norm,
            b: b / norm,
        })
    }

    pub fn from_array(rgb: [f64; 3]) -> Result<Self> {
        ChromaVector::from_rgb(rgb[0], rgb[1], rgb[2])
    }

    /// `(1, 1, 1) / sqrt(3)`.
    pub fn neutral() -> Self {
        let v = 1.0 / 3f64.sqrt();
        ChromaVector { r: v, g: v, b: v }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn dot(&self, other: &ChromaVector) -> f64 {
        self.r * other.r + self.g * other.g + self.b * other.b
    }
}
