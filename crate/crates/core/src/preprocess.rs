//! Black level / saturation correction and the dark and saturated pixel
//! masks applied before gray pixel search.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{LinearImage, PixelMask};

/// Fraction of the brightest channel sum below which a pixel counts as dark.
pub const DARK_FRACTION: f64 = 0.0315;

const BUILTIN_LEVELS: &str = include_str!("../../../cameras.conf");

/// Black and saturation levels of one camera, in raw counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CameraLevels {
    camera_id: String,
    black: u32,
    saturation: u32,
}

impl CameraLevels {
    pub fn new(camera_id: impl Into<String>, black: u32, saturation: u32) -> Result<Self> {
        let camera_id = camera_id.into();
        if saturation <= black {
            return Err(Error::InvalidArgument(format!(
                "camera {camera_id}: saturation {saturation} must exceed black level {black}"
            )));
        }
        // 0.95 S - B > 0, in integers
        if 95 * u64::from(saturation) <= 100 * u64::from(black) {
            return Err(Error::InvalidArgument(format!(
                "camera {camera_id}: 0.95 * {saturation} - {black} is not positive"
            )));
        }
        Ok(CameraLevels {
            camera_id,
            black,
            saturation,
        })
    }

    pub fn camera_id(&self) -> &str {
        &self.camera_id
    }

    pub fn black(&self) -> u32 {
        self.black
    }

    pub fn saturation(&self) -> u32 {
        self.saturation
    }

    /// `100 * (0.95 S - B)`, exact in integers.
    fn scaled_range(&self) -> f64 {
        (95 * u64::from(self.saturation) - 100 * u64::from(self.black)) as f64
    }

    /// Maps one raw count to `[0, 1]`, correctly rounded.
    pub fn normalize(&self, raw: f64) -> f64 {
        // exact for raw >= black
        let shifted = (raw - f64::from(self.black)).max(0.0);
        let d = self.scaled_range();
        let p = 100.0 * shifted;
        let p_err = 100f64.mul_add(shifted, -p);
        let q = p / d;
        let rem = (-q).mul_add(d, p);
        (q + (rem + p_err) / d).min(1.0)
    }

    /// Inverse of [`normalize`](Self::normalize) on `[0, 1]`.
    pub fn to_raw(&self, value: f64) -> f64 {
        value * self.scaled_range() / 100.0 + f64::from(self.black)
    }
}

impl fmt::Display for CameraLevels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.camera_id, self.black, self.saturation)
    }
}

/// Per-camera levels, parsed from `<camera_id> <black> <saturation>` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LevelsTable {
    cameras: Vec<CameraLevels>,
}

impl LevelsTable {
    /// The ten cameras of the Gehler-Shi and NUS 8-camera datasets.
    pub fn builtin() -> Self {
        LevelsTable::parse(BUILTIN_LEVELS).expect("bundled cameras.conf is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cameras: Vec<CameraLevels> = Vec::new();
        let mut problems = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [id, black, sat] => match (black.parse::<u32>(), sat.parse::<u32>()) {
                    (Ok(b), Ok(s)) => CameraLevels::new(*id, b, s).map_err(|e| e.to_string()),
                    _ => Err(format!("non-integer levels in `{line}`")),
                },
                _ => Err(format!("expected `<camera_id> <black> <saturation>`, got `{line}`")),
            };
            match parsed {
                Ok(levels) => {
                    if cameras.iter().any(|c| c.camera_id == levels.camera_id) {
                        problems.push(format!(
                            "line {}: duplicate camera `{}`",
                            lineno + 1,
                            levels.camera_id
                        ));
                    } else {
                        cameras.push(levels);
                    }
                }
                Err(msg) => problems.push(format!("line {}: {msg}", lineno + 1)),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("\n")));
        }
        Ok(LevelsTable { cameras })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LevelsTable::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn get(&self, camera_id: &str) -> Option<&CameraLevels> {
        self.cameras.iter().find(|c| c.camera_id == camera_id)
    }

    pub fn cameras(&self) -> &[CameraLevels] {
        &self.cameras
    }
}

/// Un-normalized sensor counts, three planes.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    width: usize,
    height: usize,
    planes: [Vec<f64>; 3],
}

impl RawImage {
    pub fn new(width: usize, height: usize, planes: [Vec<f64>; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "raw image dimensions must be positive, got {width}x{height}"
            )));
        }
        for p in &planes {
            if p.len() != width * height {
                return Err(Error::InvalidArgument(format!(
                    "raw plane has {} values, expected {}",
                    p.len(),
                    width * height
                )));
            }
            if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidArgument(
                    "raw counts must be finite and non-negative".into(),
                ));
            }
        }
        Ok(RawImage {
            width,
            height,
            planes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> &[Vec<f64>; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [Vec<f64>; 3] {
        self.planes
    }
}

/// Subtracts the black level and divides by `0.95 S - B`, clipping at 1.
pub fn correct_levels(raw: &RawImage, levels: &CameraLevels) -> Result<LinearImage> {
    let [r, g, b] = raw
        .planes
        .each_ref()
        .map(|p| p.iter().map(|v| levels.normalize(*v)).collect::<Vec<_>>());
    LinearImage::new(raw.width, raw.height, r, g, b)
}

/// What `max(I)` in the dark-pixel rule refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DarkReference {
    /// Largest `I_R + I_G + I_B` over the image.
    #[default]
    ChannelSum,
    /// Largest single channel value over the image.
    MaxChannel,
}

/// Flags pixels with `I_R + I_G + I_B <= 0.0315 * max(|I|)`.
pub fn dark_mask(img: &LinearImage) -> PixelMask {
    dark_mask_with(img, DarkReference::ChannelSum)
}

pub fn dark_mask_with(img: &LinearImage, reference: DarkReference) -> PixelMask {
    let threshold = dark_threshold(img, reference);
    let [r, g, b] = img.planes();
    let flags = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((r, g), b)| r + g + b <= threshold)
        .collect();
    PixelMask::new(img.width(), img.height(), flags).expect("dimensions come from the image")
}

fn dark_threshold(img: &LinearImage, reference: DarkReference) -> f64 {
    let [r, g, b] = img.planes();
    let peak = match reference {
        DarkReference::ChannelSum => r
            .iter()
            .zip(g)
            .zip(b)
            .map(|((r, g), b)| r + g + b)
            .fold(0.0, f64::max),
        DarkReference::MaxChannel => [r, g, b]
            .iter()
            .flat_map(|p| p.iter())
            .cloned()
            .fold(0.0, f64::max),
    };
    DARK_FRACTION * peak
}

/// Union of [`dark_mask_with`] and [`saturation_mask`], in one pass.
pub fn dark_or_saturated(img: &LinearImage, reference: DarkReference) -> PixelMask {
    let threshold = dark_threshold(img, reference);
    let [r, g, b] = img.planes();
    let flags = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((r, g), b)| r + g + b <= threshold || *r >= 1.0 || *g >= 1.0 || *b >= 1.0)
        .collect();
    PixelMask::new(img.width(), img.height(), flags).expect("dimensions come from the image")
}

/// Flags pixels with any channel at the clip value 1.0.
pub fn saturation_mask(img: &LinearImage) -> PixelMask {
    let [r, g, b] = img.planes();
    let flags = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((r, g), b)| *r >= 1.0 || *g >= 1.0 || *b >= 1.0)
        .collect();
    PixelMask::new(img.width(), img.height(), flags).expect("dimensions come from the image")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw1(v: f64) -> RawImage {
        RawImage::new(1, 1, [vec![v], vec![v], vec![v]]).unwrap()
    }

    #[test]
    fn canon5d_examples() {
        let table = LevelsTable::builtin();
        let c = table.get("Canon5D").unwrap();
        assert_eq!((c.black(), c.saturation()), (129, 4095));
        let img = correct_levels(&raw1(129.0), c).unwrap();
        assert_eq!(img.pixel(0, 0), [0.0; 3]);
        let img = correct_levels(&raw1(4095.0), c).unwrap();
        assert_eq!(img.pixel(0, 0), [1.0; 3]);
        assert_eq!(c.normalize(0.0), 0.0);
    }

    #[test]
    fn zero_black_anchor_maps_to_one() {
        let c = CameraLevels::new("x", 0, 4000).unwrap();
        assert_eq!(c.normalize(3800.0), 1.0);
        assert!(c.normalize(3799.0) < 1.0);
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(CameraLevels::new("x", 100, 100).is_err());
        // 0.95 * 105 - 100 < 0
        assert!(CameraLevels::new("x", 100, 105).is_err());
        assert!(LevelsTable::parse("a 1").is_err());
        assert!(LevelsTable::parse("a 1 2\na 1 3").is_err());
        assert!(LevelsTable::parse("a x 2").is_err());
    }

    #[test]
    fn builtin_table_has_ten_cameras() {
        let t = LevelsTable::builtin();
        assert_eq!(t.cameras().len(), 10);
        assert_eq!(t.get("Canon600D").unwrap().black(), 2048);
        assert_eq!(t.get("SonyA57").unwrap().saturation(), 4093);
        let reparsed = LevelsTable::parse(
            &t.cameras()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("\n"),
        )
        .unwrap();
        assert_eq!(reparsed, t);
    }

    #[test]
    fn to_raw_inverts_normalize() {
        let t = LevelsTable::builtin();
        for c in t.cameras() {
            for v in [0.0, 0.25, 0.5, 0.9] {
                assert!((c.normalize(c.to_raw(v)) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dark_mask_examples() {
        let img = LinearImage::new(
            3,
            1,
            vec![0.4, 0.01, 0.2],
            vec![0.3, 0.01, 0.2],
            vec![0.3, 0.01, 0.1],
        )
        .unwrap();
        let m = dark_mask(&img);
        assert_eq!(m.flags(), &[false, true, false]);

        let black = LinearImage::filled(2, 2, [0.0; 3]).unwrap();
        assert_eq!(dark_mask(&black).count_flagged(), 4);

        let mc = dark_mask_with(&img, DarkReference::MaxChannel);
        // threshold 0.0315 * 0.4
        assert_eq!(mc.flags(), &[false, false, false]);
    }

    #[test]
    fn saturation_mask_examples() {
        let img = LinearImage::new(2, 1, vec![1.0, 0.999], vec![0.3, 0.3], vec![0.3, 0.3]).unwrap();
        assert_eq!(saturation_mask(&img).flags(), &[true, false]);
        let clipped = LinearImage::filled(3, 2, [1.0; 3]).unwrap();
        assert_eq!(saturation_mask(&clipped).count_flagged(), 6);
    }

    #[test]
    fn fused_mask_is_the_union() {
        let img = LinearImage::new(
            4,
            1,
            vec![0.4, 0.01, 1.0, 0.2],
            vec![0.3, 0.01, 0.3, 0.2],
            vec![0.3, 0.01, 0.3, 0.1],
        )
        .unwrap();
        for reference in [DarkReference::ChannelSum, DarkReference::MaxChannel] {
            let expected = dark_mask_with(&img, reference).union(&saturation_mask(&img)).unwrap();
            assert_eq!(dark_or_saturated(&img, reference), expected);
        }
    }
}
