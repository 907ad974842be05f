//! Image readers and writers.
//!
//! * PNG / TIFF, 8 or 16 bit, via the `image` crate.
//! * PFM (portable float map), 32-bit float, read and written here.
//! * Float rasters: little-endian `u32 width`, `u32 height`, then `f32`
//!   values plane after plane, row-major. One plane for GI maps (excluded
//!   pixels stored as `+inf`), three for illuminant fields.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Rgb};

use crate::error::{Error, Result};
use crate::grayness::{GrayIndexMap, EXCLUDED};
use crate::image::LinearImage;
use crate::preprocess::RawImage;

/// Decoded samples before any normalization.
#[derive(Debug, Clone)]
pub struct DecodedImage {
    pub width: usize,
    pub height: usize,
    pub planes: [Vec<f64>; 3],
    /// Largest representable sample for integer formats, `None` for floats.
    pub type_max: Option<f64>,
}

impl DecodedImage {
    /// Samples as raw sensor counts.
    pub fn into_raw(self) -> Result<RawImage> {
        RawImage::new(self.width, self.height, self.planes)
    }

    /// Samples divided by the type maximum (integer formats) or taken as-is
    /// (float formats, which must already lie in `[0, 1]`).
    pub fn into_linear(self) -> Result<LinearImage> {
        let scale = self.type_max.map_or(1.0, |m| 1.0 / m);
        let [r, g, b] = self
            .planes
            .map(|p| p.into_iter().map(|v| v * scale).collect::<Vec<_>>());
        LinearImage::new(self.width, self.height, r, g, b)
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Reads a PNG, TIFF or PFM file without normalizing it.
pub fn read_image(path: &Path) -> Result<DecodedImage> {
    if extension(path) == "pfm" {
        return read_pfm(path);
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = image::ImageReader::new(BufReader::new(file))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let (samples, type_max): (Vec<f64>, Option<f64>) = match &decoded {
        DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageLumaA8(_)
        | DynamicImage::ImageRgb8(_)
        | DynamicImage::ImageRgba8(_) => (
            decoded.to_rgb8().into_raw().into_iter().map(f64::from).collect(),
            Some(255.0),
        ),
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => (
            decoded.to_rgb16().into_raw().into_iter().map(f64::from).collect(),
            Some(65535.0),
        ),
        _ => (
            decoded.to_rgb32f().into_raw().into_iter().map(f64::from).collect(),
            None,
        ),
    };
    Ok(DecodedImage {
        width,
        height,
        planes: deinterleave(&samples, width * height),
        type_max,
    })
}

fn deinterleave(samples: &[f64], n: usize) -> [Vec<f64>; 3] {
    let mut planes = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for px in samples.chunks_exact(3) {
        for c in 0..3 {
            planes[c].push(px[c]);
        }
    }
    planes
}

/// Reads a file as a normalized linear image.
pub fn load_linear(path: &Path) -> Result<LinearImage> {
    read_image(path)?
        .into_linear()
        .map_err(|e| Error::format(path, e.to_string()))
}

fn read_token(reader: &mut impl BufRead, path: &Path) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = reader.read(&mut byte).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        if byte[0].is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(byte[0]);
    }
    String::from_utf8(token).map_err(|_| Error::format(path, "malformed PFM header"))
}

/// Reads a colour (`PF`) or grayscale (`Pf`) PFM file.
pub fn read_pfm(path: &Path) -> Result<DecodedImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let magic = read_token(&mut reader, path)?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        _ => return Err(Error::format(path, "not a PFM file")),
    };
    let parse = |t: String| -> Result<f64> {
        t.parse::<f64>()
            .map_err(|_| Error::format(path, format!("bad PFM header field `{t}`")))
    };
    let width = parse(read_token(&mut reader, path)?)? as usize;
    let height = parse(read_token(&mut reader, path)?)? as usize;
    let scale = parse(read_token(&mut reader, path)?)?;
    if width == 0 || height == 0 || scale == 0.0 {
        return Err(Error::format(path, "bad PFM dimensions or scale"));
    }
    let little = scale < 0.0;
    let mut data = vec![0u8; width * height * channels * 4];
    reader
        .read_exact(&mut data)
        .map_err(|_| Error::format(path, "truncated PFM data"))?;
    let n = width * height;
    let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (k, chunk) in data.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = f64::from(if little {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        });
        let px = k / channels;
        // rows are stored bottom to top
        let (x, y) = (px % width, height - 1 - px / width);
        if channels == 3 {
            planes[k % 3][y * width + x] = v;
        } else {
            for p in planes.iter_mut() {
                p[y * width + x] = v;
            }
        }
    }
    Ok(DecodedImage {
        width,
        height,
        planes,
        type_max: None,
    })
}

/// Writes three planes as a little-endian colour PFM.
pub fn write_pfm(path: &Path, width: usize, height: usize, planes: [&[f64]; 3]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        write!(out, "PF\n{width} {height}\n-1.0\n")?;
        for y in (0..height).rev() {
            for x in 0..width {
                for p in planes {
                    out.write_all(&(p[y * width + x] as f32).to_le_bytes())?;
                }
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Writes a linear image; the format follows the extension (`pfm`, `png`
/// or `tif`/`tiff`, the latter two as 16-bit).
pub fn save_linear(path: &Path, img: &LinearImage) -> Result<()> {
    let ext = extension(path);
    if ext == "pfm" {
        return write_pfm(path, img.width(), img.height(), img.planes());
    }
    if !matches!(ext.as_str(), "png" | "tif" | "tiff") {
        return Err(Error::InvalidArgument(format!(
            "unsupported output format `{}`",
            path.display()
        )));
    }
    let (w, h) = img.dims();
    let mut buf: ImageBuffer<Rgb<u16>, Vec<u16>> = ImageBuffer::new(w as u32, h as u32);
    for (x, y, px) in buf.enumerate_pixels_mut() {
        let v = img.pixel(x as usize, y as usize);
        *px = Rgb(v.map(|c| (c * 65535.0).round() as u16));
    }
    buf.save(path).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes planes as a float raster.
pub fn write_raster(path: &Path, width: usize, height: usize, planes: &[&[f64]]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        out.write_all(&(width as u32).to_le_bytes())?;
        out.write_all(&(height as u32).to_le_bytes())?;
        for p in planes {
            for v in p.iter() {
                out.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Reads a float raster back; the plane count follows from the file size.
pub fn read_raster(path: &Path) -> Result<(usize, usize, Vec<Vec<f64>>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(Error::format(path, "raster header truncated"));
    }
    let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n = width * height;
    let body = &bytes[8..];
    if n == 0 || body.len() % (4 * n) != 0 {
        return Err(Error::format(path, "raster size does not match header"));
    }
    let values: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    Ok((width, height, values.chunks(n).map(|c| c.to_vec()).collect()))
}

pub fn write_gi_raster(path: &Path, map: &GrayIndexMap) -> Result<()> {
    write_raster(path, map.width(), map.height(), &[map.values()])
}

/// Dark blue through cyan and yellow to dark red.
fn jet(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let ramp = |c: f64| (1.5 - (4.0 * t - c).abs()).clamp(0.0, 1.0);
    [ramp(3.0), ramp(2.0), ramp(1.0)].map(|v| (v * 255.0).round() as u8)
}

/// 8-bit pseudocolour rendering of a GI map: low GI (gray) is dark blue,
/// high GI red, excluded pixels mid gray. Values are mapped on a log scale.
pub fn write_gi_png(path: &Path, map: &GrayIndexMap) -> Result<()> {
    let logs: Vec<f64> = map
        .values()
        .iter()
        .filter(|v| **v != EXCLUDED)
        .map(|v| v.max(1e-12).log10())
        .collect();
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, h) = map.dims();
    let mut buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::new(w as u32, h as u32);
    for (x, y, px) in buf.enumerate_pixels_mut() {
        *px = Rgb(match map.get(x as usize, y as usize) {
            None => [128, 128, 128],
            Some(v) => jet((v.max(1e-12).log10() - lo) / span),
        });
    }
    buf.save(path).map_err(|e| Error::format(path, e.to_string()))
}
