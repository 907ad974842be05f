//! Shared numerical kernels: log residual planes, LoG contrast and
//! exclusion-aware box averaging. Borders are replicate-padded throughout.

use crate::error::{Error, Result};
use crate::grayness::EXCLUDED;
use crate::image::{Channel, LinearImage, ScalarPlane};

/// Clamp applied before every logarithm.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-6;
/// Side length of the LoG contrast kernel.
pub const DEFAULT_LOG_SIZE: usize = 5;
/// Standard deviation of the LoG contrast kernel.
pub const DEFAULT_LOG_SIGMA: f64 = 0.5;

/// `log(max(I_c, floor)) - log(max(I_R + I_G + I_B, floor))` per pixel.
///
/// Evaluated as the logarithm of the clamped ratio, which makes the result
/// bit-exactly invariant to power-of-two intensity scaling.
pub fn log_residual(img: &LinearImage, channel: Channel, floor: f64) -> Result<ScalarPlane> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "log floor must be positive, got {floor}"
        )));
    }
    let mut values = vec![0.0; img.len()];
    log_residual_into(img, channel, floor, &mut values);
    Ok(ScalarPlane::from_raw(img.width(), img.height(), values))
}

pub(crate) fn log_residual_into(img: &LinearImage, channel: Channel, floor: f64, out: &mut [f64]) {
    let [r, g, b] = img.planes();
    let c = img.channel(channel);
    for (o, (&v, ((&r, &g), &b))) in out.iter_mut().zip(c.iter().zip(r.iter().zip(g).zip(b))) {
        *o = (v.max(floor) / (r + g + b).max(floor)).ln();
    }
}

/// Laplacian-of-Gaussian kernel of odd side `size`, row-major.
///
/// Gaussian weights are normalized to unit sum, multiplied by
/// `(r^2 - 2 sigma^2) / sigma^4`, and the result is mean-subtracted so the
/// entries sum to zero.
pub fn log_kernel(size: usize, sigma: f64) -> Result<Vec<f64>> {
    if size % 2 == 0 || size < 3 {
        return Err(Error::InvalidArgument(format!(
            "LoG kernel size must be odd and >= 3, got {size}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "LoG sigma must be positive, got {sigma}"
        )));
    }
    let half = (size / 2) as i64;
    let var = sigma * sigma;
    let r2: Vec<f64> = (-half..=half)
        .flat_map(|y| (-half..=half).map(move |x| (x * x + y * y) as f64))
        .collect();
    let mut g: Vec<f64> = r2.iter().map(|r2| (-r2 / (2.0 * var)).exp()).collect();
    let gmax = g.iter().cloned().fold(0.0, f64::max);
    for v in g.iter_mut() {
        if *v < f64::EPSILON * gmax {
            *v = 0.0;
        }
    }
    let gsum: f64 = g.iter().sum();
    let lap: Vec<f64> = g
        .iter()
        .zip(&r2)
        .map(|(g, r2)| g / gsum * (r2 - 2.0 * var) / (var * var))
        .collect();
    let mean = lap.iter().sum::<f64>() / lap.len() as f64;
    Ok(lap.into_iter().map(|v| v - mean).collect())
}

/// Copies row `y` into `buf` with `pad` replicated samples on each side.
fn padded_row(buf: &mut [f64], values: &[f64], width: usize, y: usize, pad: usize) {
    let row = &values[y * width..(y + 1) * width];
    buf[pad..pad + width].copy_from_slice(row);
    buf[..pad].fill(row[0]);
    buf[pad + width..].fill(row[width - 1]);
}

fn is_symmetric(kernel: &[f64], size: usize) -> bool {
    (0..size).all(|y| {
        (0..size).all(|x| {
            let k = kernel[y * size + x];
            k == kernel[(size - 1 - y) * size + x] && k == kernel[y * size + size - 1 - x]
        })
    })
}

/// Correlation of a `width x height` plane with a square odd kernel under
/// replicate padding, written into `out`.
pub(crate) fn convolve_into(values: &[f64], width: usize, height: usize, kernel: &[f64], out: &mut [f64]) {
    let size = (kernel.len() as f64).sqrt() as usize;
    let r = size / 2;
    let pw = width + 2 * r;
    let clamp = |y: isize| y.clamp(0, height as isize - 1) as usize;
    let mut buf = vec![0.0; pw];
    let mut other = vec![0.0; pw];
    out.fill(0.0);

    if is_symmetric(kernel, size) {
        // fold mirrored rows, then mirrored taps
        for (y, out_row) in out.chunks_exact_mut(width).enumerate() {
            for ky in 0..=r {
                let d = (r - ky) as isize;
                padded_row(&mut buf, values, width, clamp(y as isize - d), r);
                if d > 0 {
                    padded_row(&mut other, values, width, clamp(y as isize + d), r);
                    for (b, o) in buf.iter_mut().zip(&other) {
                        *b += o;
                    }
                }
                let krow = &kernel[ky * size..(ky + 1) * size];
                for (o, c) in out_row.iter_mut().zip(&buf[r..r + width]) {
                    *o += krow[r] * c;
                }
                for dx in 1..=r {
                    let k = krow[r - dx];
                    let left = &buf[r - dx..r - dx + width];
                    let right = &buf[r + dx..r + dx + width];
                    for ((o, a), b) in out_row.iter_mut().zip(left).zip(right) {
                        *o += k * (a + b);
                    }
                }
            }
        }
    } else {
        for (y, out_row) in out.chunks_exact_mut(width).enumerate() {
            for ky in 0..size {
                padded_row(&mut buf, values, width, clamp(y as isize + ky as isize - r as isize), r);
                for kx in 0..size {
                    let k = kernel[ky * size + kx];
                    for (o, s) in out_row.iter_mut().zip(&buf[kx..kx + width]) {
                        *o += k * s;
                    }
                }
            }
        }
    }
}

/// Correlates a plane with a square odd-sized kernel under replicate padding.
pub fn convolve(plane: &ScalarPlane, kernel: &[f64]) -> Result<ScalarPlane> {
    let size = (kernel.len() as f64).sqrt() as usize;
    if size * size != kernel.len() || size % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "kernel with {} entries is not odd-square",
            kernel.len()
        )));
    }
    let (w, h) = plane.dims();
    let mut out = vec![0.0; w * h];
    convolve_into(plane.values(), w, h, kernel, &mut out);
    Ok(ScalarPlane::from_raw(w, h, out))
}

/// Local contrast `C{.}`: the default 5x5, sigma 0.5 LoG response.
pub fn log_contrast(plane: &ScalarPlane) -> ScalarPlane {
    log_contrast_with(plane, DEFAULT_LOG_SIZE, DEFAULT_LOG_SIGMA)
        .expect("default LoG parameters are valid")
}

pub fn log_contrast_with(plane: &ScalarPlane, size: usize, sigma: f64) -> Result<ScalarPlane> {
    let kernel = log_kernel(size, sigma)?;
    convolve(plane, &kernel)
}

/// Mean over a `window x window` neighbourhood, ignoring excluded pixels.
///
/// Non-finite inputs (the [`EXCLUDED`] sentinel) neither contribute to their
/// neighbours nor get filled in: they stay excluded in the output.
pub fn box_mean(plane: &ScalarPlane, window: usize) -> Result<ScalarPlane> {
    if window % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "box window must be odd, got {window}"
        )));
    }
    let (w, h) = plane.dims();
    let r = window / 2;
    let src = plane.values();
    if r == 0 {
        return Ok(plane.clone());
    }
    let pw = w + 2 * r;

    // horizontal window sums of values; validity counts as exact integers
    let mut hsum = vec![0.0; w * h];
    let mut hcount = vec![0u32; w * h];
    let mut vals = vec![0.0; pw];
    let mut valid = vec![0u32; pw];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for (x, v) in row.iter().enumerate() {
            let ok = v.is_finite();
            vals[x + r] = if ok { *v } else { 0.0 };
            valid[x + r] = u32::from(ok);
        }
        let (v0, c0) = (vals[r], valid[r]);
        let (v1, c1) = (vals[r + w - 1], valid[r + w - 1]);
        vals[..r].fill(v0);
        valid[..r].fill(c0);
        vals[r + w..].fill(v1);
        valid[r + w..].fill(c1);
        let out_s = &mut hsum[y * w..(y + 1) * w];
        for k in 0..window {
            for (o, v) in out_s.iter_mut().zip(&vals[k..k + w]) {
                *o += v;
            }
        }
        let out_c = &mut hcount[y * w..(y + 1) * w];
        let mut run: u32 = valid[..window].iter().sum();
        out_c[0] = run;
        for x in 1..w {
            run = run + valid[x + window - 1] - valid[x - 1];
            out_c[x] = run;
        }
    }

    let mut out = vec![0.0; w * h];
    let mut n: Vec<u32> = vec![0; w];
    for y in 0..h {
        let row = &mut out[y * w..(y + 1) * w];
        if y == 0 {
            for k in 0..window {
                let sy = k.saturating_sub(r).min(h - 1);
                for (o, c) in n.iter_mut().zip(&hcount[sy * w..(sy + 1) * w]) {
                    *o += c;
                }
            }
        } else {
            let add = (y + r).min(h - 1);
            let drop = (y - 1).saturating_sub(r);
            for ((o, a), d) in n
                .iter_mut()
                .zip(&hcount[add * w..(add + 1) * w])
                .zip(&hcount[drop * w..(drop + 1) * w])
            {
                *o = *o + a - d;
            }
        }
        for k in 0..window {
            let sy = (y + k).saturating_sub(r).min(h - 1);
            for (o, s) in row.iter_mut().zip(&hsum[sy * w..(sy + 1) * w]) {
                *o += s;
            }
        }
        for ((o, c), v) in row.iter_mut().zip(&n).zip(&src[y * w..(y + 1) * w]) {
            *o = if v.is_finite() { *o / f64::from(*c) } else { EXCLUDED };
        }
    }
    Ok(ScalarPlane::from_raw(w, h, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_convolve(plane: &ScalarPlane, kernel: &[f64], size: usize) -> Vec<f64> {
        let (w, h) = plane.dims();
        let half = (size / 2) as isize;
        let mut out = vec![0.0; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = 0.0;
                for dy in -half..=half {
                    for dx in -half..=half {
                        let sx = (x + dx).clamp(0, w as isize - 1) as usize;
                        let sy = (y + dy).clamp(0, h as isize - 1) as usize;
                        let k = kernel[((dy + half) as usize) * size + (dx + half) as usize];
                        acc += k * plane.get(sx, sy);
                    }
                }
                out[y as usize * w + x as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn uniform_gray_residual_is_minus_log_three() {
        let img = LinearImage::filled(4, 3, [0.5, 0.5, 0.5]).unwrap();
        let p = log_residual(&img, Channel::R, DEFAULT_LOG_FLOOR).unwrap();
        for v in p.values() {
            assert!((v + 3f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn black_pixel_residual_is_zero() {
        let img = LinearImage::filled(1, 1, [0.0, 0.0, 0.0]).unwrap();
        let p = log_residual(&img, Channel::B, 1e-6).unwrap();
        assert_eq!(p.values(), &[0.0]);
    }

    #[test]
    fn residual_scalar_value() {
        let img = LinearImage::filled(1, 1, [0.2, 0.4, 0.4]).unwrap();
        let p = log_residual(&img, Channel::R, 1e-6).unwrap();
        // ln(0.2) - ln(1.0)
        assert!((p.values()[0] - (-1.6094379124341003)).abs() < 1e-12);
        assert!(log_residual(&img, Channel::R, 0.0).is_err());
    }

    #[test]
    fn kernel_is_zero_sum_and_symmetric() {
        let k = log_kernel(5, 0.5).unwrap();
        assert!(k.iter().sum::<f64>().abs() < 1e-12);
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(k[y * 5 + x], k[x * 5 + y]);
                assert_eq!(k[y * 5 + x], k[(4 - y) * 5 + x]);
            }
        }
        assert!(k[12] < 0.0);
        assert!(log_kernel(4, 0.5).is_err());
        assert!(log_kernel(5, 0.0).is_err());
    }

    #[test]
    fn constant_plane_has_zero_contrast() {
        let p = ScalarPlane::filled(9, 7, 3.25).unwrap();
        let c = log_contrast(&p);
        assert!(c.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn impulse_reproduces_kernel() {
        let mut v = vec![0.0; 11 * 11];
        v[5 * 11 + 5] = 1.0;
        let p = ScalarPlane::new(11, 11, v).unwrap();
        let c = log_contrast(&p);
        let k = log_kernel(5, 0.5).unwrap();
        for ky in 0..5 {
            for kx in 0..5 {
                assert_eq!(c.get(3 + kx, 3 + ky), k[ky * 5 + kx]);
            }
        }
        assert_eq!(c.get(0, 0), 0.0);
    }

    #[test]
    fn ramp_matches_brute_force_and_vanishes_inside() {
        let p = ScalarPlane::from_fn(9, 9, |x, _| x as f64).unwrap();
        let k = log_kernel(5, 0.5).unwrap();
        let expected = brute_force_convolve(&p, &k, 5);
        let c = log_contrast(&p);
        for (a, b) in c.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        for y in 0..9 {
            for x in 2..7 {
                assert!(c.get(x, y).abs() < 1e-12, "interior ({x},{y}) = {}", c.get(x, y));
            }
        }
        // replicate padding makes the border columns nonzero
        assert!(c.get(0, 4).abs() > 1e-3);
    }

    #[test]
    fn asymmetric_kernels_match_brute_force() {
        let p = ScalarPlane::from_fn(13, 7, |x, y| ((x * 7 + y * 3) % 11) as f64 * 0.1).unwrap();
        for size in [1usize, 3, 5] {
            let k: Vec<f64> = (0..size * size).map(|i| (i as f64 * 0.37).sin()).collect();
            let expected = brute_force_convolve(&p, &k, size);
            let c = convolve(&p, &k).unwrap();
            for (a, b) in c.values().iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // symmetric but not zero-sum, wider than the plane
        let k = vec![1.0; 9 * 9];
        let c = convolve(&p, &k).unwrap();
        let expected = brute_force_convolve(&p, &k, 9);
        for (a, b) in c.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(convolve(&p, &[1.0; 4]).is_err());
    }

    #[test]
    fn box_mean_examples() {
        let p = ScalarPlane::from_fn(5, 4, |x, y| (x * 3 + y) as f64).unwrap();
        assert_eq!(box_mean(&p, 1).unwrap(), p);

        let twos = ScalarPlane::filled(3, 3, 2.0).unwrap();
        assert!(box_mean(&twos, 3).unwrap().values().iter().all(|v| *v == 2.0));

        let spike = ScalarPlane::new(3, 3, vec![0., 0., 0., 0., 9., 0., 0., 0., 0.]).unwrap();
        assert_eq!(box_mean(&spike, 3).unwrap().get(1, 1), 1.0);
        assert!(box_mean(&spike, 4).is_err());
    }

    #[test]
    fn box_mean_skips_and_preserves_exclusions() {
        let p = ScalarPlane::new(3, 1, vec![1.0, EXCLUDED, 3.0]).unwrap();
        let m = box_mean(&p, 3).unwrap();
        // left: window {1 (replicated), 1, excluded} -> 1
        assert_eq!(m.values()[0], 1.0);
        assert_eq!(m.values()[1], EXCLUDED);
        assert_eq!(m.values()[2], 3.0);
    }
}
