//! C ABI over the `grayindex` library.
//!
//! Every fallible function returns a [`GiStatus`]; on failure the message is
//! available from [`gi_last_error_message`] on the same thread. Objects are
//! opaque handles owned by the caller and released with the matching
//! `*_free` function. Images are passed as interleaved RGB `double`s in
//! row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use grayindex::benchmark::{angular_error, load_for_camera, standard_mask};
use grayindex::estimation::DistanceKernel;
use grayindex::io::load_linear;
use grayindex::preprocess::{DarkReference, LevelsTable};
use grayindex::{
    compute_gi, correct_image, estimate_global, estimate_spatial, rank_gray, ChromaVector, Error,
    GrayIndexMap, IlluminantField, Illumination, LinearImage, MultiParams, PixelMask,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GiStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Io = 3,
    /// No gray candidates, a degenerate estimate or illuminant.
    Degenerate = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(text).expect("no interior nul")));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> GiStatus {
    if err.is_degenerate() {
        return GiStatus::Degenerate;
    }
    match err {
        Error::Io { .. } | Error::Format { .. } => GiStatus::Io,
        _ => GiStatus::InvalidArgument,
    }
}

struct Failure(GiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(GiStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `f`, records its error and turns panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GiStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GiStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {msg}"));
            GiStatus::Internal
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn as_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(GiStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn rgb_out(out: *mut f64, rgb: [f64; 3]) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out_rgb"));
    }
    unsafe { ptr::copy_nonoverlapping(rgb.as_ptr(), out, 3) };
    Ok(())
}

unsafe fn rgb_in(p: *const f64, name: &str) -> Result<ChromaVector, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    let v = std::slice::from_raw_parts(p, 3);
    Ok(ChromaVector::from_rgb(v[0], v[1], v[2])?)
}

/// Linear RGB image.
pub struct GiImage(LinearImage);

/// Grayness Index map; excluded pixels hold `+inf`.
pub struct GiMap(GrayIndexMap);

/// Per-pixel illuminant chroma.
pub struct GiField(IlluminantField);

/// GI computation parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GiParams {
    pub epsilon: f64,
    pub log_kernel_size: usize,
    pub log_sigma: f64,
    pub smooth_window: usize,
    pub log_floor: f64,
    pub include_green: bool,
    pub exclude_border: bool,
}

impl From<grayindex::GiParams> for GiParams {
    fn from(p: grayindex::GiParams) -> Self {
        GiParams {
            epsilon: p.epsilon,
            log_kernel_size: p.log_kernel_size,
            log_sigma: p.log_sigma,
            smooth_window: p.smooth_window,
            log_floor: p.log_floor,
            include_green: p.include_green,
            exclude_border: p.exclude_border,
        }
    }
}

impl From<GiParams> for grayindex::GiParams {
    fn from(p: GiParams) -> Self {
        grayindex::GiParams {
            epsilon: p.epsilon,
            log_kernel_size: p.log_kernel_size,
            log_sigma: p.log_sigma,
            smooth_window: p.smooth_window,
            log_floor: p.log_floor,
            include_green: p.include_green,
            exclude_border: p.exclude_border,
        }
    }
}

/// Multi-illuminant parameters. `sigma_pixels <= 0` means "use
/// `sigma_fraction` of the diagonal".
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GiMultiParams {
    pub top_percent: f64,
    pub clusters: usize,
    pub sigma_fraction: f64,
    pub sigma_pixels: f64,
    /// Gaussian `exp(-D^2/2s^2)` when true, `exp(-D/2s^2)` otherwise.
    pub gaussian_kernel: bool,
    pub seed: u64,
    pub max_iters: usize,
}

impl From<MultiParams> for GiMultiParams {
    fn from(p: MultiParams) -> Self {
        GiMultiParams {
            top_percent: p.top_percent,
            clusters: p.clusters,
            sigma_fraction: p.sigma_fraction,
            sigma_pixels: p.sigma_pixels.unwrap_or(0.0),
            gaussian_kernel: p.kernel == DistanceKernel::Gaussian,
            seed: p.seed,
            max_iters: p.max_iters,
        }
    }
}

impl From<GiMultiParams> for MultiParams {
    fn from(p: GiMultiParams) -> Self {
        MultiParams {
            top_percent: p.top_percent,
            clusters: p.clusters,
            sigma_fraction: p.sigma_fraction,
            sigma_pixels: (p.sigma_pixels > 0.0).then_some(p.sigma_pixels),
            kernel: if p.gaussian_kernel {
                DistanceKernel::Gaussian
            } else {
                DistanceKernel::Linear
            },
            seed: p.seed,
            max_iters: p.max_iters,
        }
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn gi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn gi_params_default() -> GiParams {
    grayindex::GiParams::default().into()
}

#[no_mangle]
pub extern "C" fn gi_multi_params_default() -> GiMultiParams {
    MultiParams::default().into()
}

/// Copies `width * height * 3` interleaved values into a new image.
///
/// # Safety
/// `rgb` must point to `width * height * 3` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn gi_image_from_rgb(
    width: usize,
    height: usize,
    rgb: *const f64,
    out: *mut *mut GiImage,
) -> GiStatus {
    guard(|| {
        if rgb.is_null() {
            return Err(null("rgb"));
        }
        let n = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Failure(GiStatus::InvalidArgument, "image size overflows".into()))?;
        let data = std::slice::from_raw_parts(rgb, n);
        let img = LinearImage::from_interleaved(width, height, data)?;
        write_out(out, GiImage(img))
    })
}

/// Loads a PNG, TIFF or PFM file. With a non-NULL `camera` the samples are
/// raw counts corrected with that camera's levels from the built-in table;
/// otherwise they are divided by their type maximum.
///
/// # Safety
/// `path` and `camera` (when non-NULL) must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn gi_image_load(
    path: *const c_char,
    camera: *const c_char,
    out: *mut *mut GiImage,
) -> GiStatus {
    guard(|| {
        let path = Path::new(as_str(path, "path")?);
        let img = if camera.is_null() {
            load_linear(path)?
        } else {
            let camera = as_str(camera, "camera")?;
            let levels = LevelsTable::builtin();
            if levels.get(camera).is_none() {
                return Err(Error::UnknownCamera(camera.to_string()).into());
            }
            load_for_camera(path, camera, &levels)?
        };
        write_out(out, GiImage(img))
    })
}

/// # Safety
/// `image` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gi_image_free(image: *mut GiImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gi_image_width(image: *const GiImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `image` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gi_image_height(image: *const GiImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// Copies the pixels, interleaved, into `out` (`len` doubles, at least
/// `width * height * 3`).
///
/// # Safety
/// `image` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gi_image_copy_rgb(image: *const GiImage, out: *mut f64, len: usize) -> GiStatus {
    guard(|| {
        let img = &as_ref(image, "image")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = img.len() * 3;
        if len < n {
            return Err(Failure(
                GiStatus::InvalidArgument,
                format!("buffer holds {len} values, {n} needed"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, n);
        for (i, px) in dst.chunks_exact_mut(3).enumerate() {
            px.copy_from_slice(&img.pixel_at(i));
        }
        Ok(())
    })
}

/// Computes the GI map. Dark and saturated pixels are always excluded; a
/// non-NULL `mask` (`width * height` bytes, nonzero = exclude) adds to them.
/// A NULL `params` means the defaults.
///
/// # Safety
/// `image` must be a live handle; `mask` and `params` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn gi_compute(
    image: *const GiImage,
    mask: *const u8,
    params: *const GiParams,
    out: *mut *mut GiMap,
) -> GiStatus {
    guard(|| {
        let img = &as_ref(image, "image")?.0;
        let params: grayindex::GiParams = params
            .as_ref()
            .map_or_else(grayindex::GiParams::default, |p| (*p).into());
        let mut full = standard_mask(img, None, DarkReference::default());
        if !mask.is_null() {
            let flags = std::slice::from_raw_parts(mask, img.len())
                .iter()
                .map(|m| *m != 0)
                .collect();
            let extra = PixelMask::new(img.width(), img.height(), flags)?;
            full = full.union(&extra)?;
        }
        write_out(out, GiMap(compute_gi(img, &full, &params)?))
    })
}

/// # Safety
/// `map` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gi_map_free(map: *mut GiMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Borrows the row-major GI values; valid while `map` lives.
///
/// # Safety
/// `map` must be a live handle; `values` and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn gi_map_values(
    map: *const GiMap,
    values: *mut *const f64,
    len: *mut usize,
) -> GiStatus {
    guard(|| {
        let map = &as_ref(map, "map")?.0;
        if values.is_null() || len.is_null() {
            return Err(null("values/len"));
        }
        *values = map.values().as_ptr();
        *len = map.values().len();
        Ok(())
    })
}

/// # Safety
/// `map` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gi_map_candidates(map: *const GiMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.count_candidates())
}

/// Global illuminant: mean chroma of the `top_percent` percent of pixels
/// with the smallest GI.
///
/// # Safety
/// Handles must be live; `out_rgb` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn gi_estimate_global(
    image: *const GiImage,
    map: *const GiMap,
    top_percent: f64,
    out_rgb: *mut f64,
) -> GiStatus {
    guard(|| {
        let img = &as_ref(image, "image")?.0;
        let map = &as_ref(map, "map")?.0;
        if map.dims() != img.dims() {
            return Err(Error::DimensionMismatch {
                expected: img.dims(),
                actual: map.dims(),
            }
            .into());
        }
        let coords = rank_gray(map, top_percent)?;
        rgb_out(out_rgb, estimate_global(img, &coords)?.to_array())
    })
}

/// Per-pixel illuminant from clustered gray pixels. A NULL `params` means
/// the defaults.
///
/// # Safety
/// Handles must be live; `params` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn gi_estimate_spatial(
    image: *const GiImage,
    map: *const GiMap,
    params: *const GiMultiParams,
    out: *mut *mut GiField,
) -> GiStatus {
    guard(|| {
        let img = &as_ref(image, "image")?.0;
        let map = &as_ref(map, "map")?.0;
        let params: MultiParams = params.as_ref().map_or_else(MultiParams::default, |p| (*p).into());
        write_out(out, GiField(estimate_spatial(img, map, &params)?))
    })
}

/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gi_field_free(field: *mut GiField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Chroma at `(x, y)`.
///
/// # Safety
/// `field` must be a live handle; `out_rgb` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn gi_field_get(field: *const GiField, x: usize, y: usize, out_rgb: *mut f64) -> GiStatus {
    guard(|| {
        let field = &as_ref(field, "field")?.0;
        if x >= field.width() || y >= field.height() {
            return Err(Failure(
                GiStatus::InvalidArgument,
                format!("({x}, {y}) outside {}x{}", field.width(), field.height()),
            ));
        }
        rgb_out(out_rgb, field.get(x, y).to_array())
    })
}

/// Von Kries correction for one global illuminant `rgb` (3 doubles).
///
/// # Safety
/// `image` must be a live handle and `rgb` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn gi_correct_global(
    image: *const GiImage,
    rgb: *const f64,
    out: *mut *mut GiImage,
) -> GiStatus {
    guard(|| {
        let img = &as_ref(image, "image")?.0;
        let l = rgb_in(rgb, "rgb")?;
        write_out(out, GiImage(correct_image(img, Illumination::Global(l))?))
    })
}

/// Von Kries correction with a per-pixel field.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn gi_correct_field(
    image: *const GiImage,
    field: *const GiField,
    out: *mut *mut GiImage,
) -> GiStatus {
    guard(|| {
        let img = &as_ref(image, "image")?.0;
        let field = &as_ref(field, "field")?.0;
        write_out(out, GiImage(correct_image(img, Illumination::Field(field))?))
    })
}

/// Angle in degrees between two RGB vectors (normalized first).
///
/// # Safety
/// `a` and `b` must hold 3 doubles; `out_degrees` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gi_angular_error(a: *const f64, b: *const f64, out_degrees: *mut f64) -> GiStatus {
    guard(|| {
        let a = rgb_in(a, "a")?;
        let b = rgb_in(b, "b")?;
        if out_degrees.is_null() {
            return Err(null("out_degrees"));
        }
        *out_degrees = angular_error(&a, &b);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::NoGrayCandidates), GiStatus::Degenerate);
        assert_eq!(status_of(&Error::InvalidArgument("x".into())), GiStatus::InvalidArgument);
    }

    #[test]
    fn params_round_trip() {
        let p = gi_params_default();
        assert_eq!(grayindex::GiParams::from(p), grayindex::GiParams::default());
        let m = gi_multi_params_default();
        assert_eq!(MultiParams::from(m), MultiParams::default());
    }

    #[test]
    fn panics_become_internal() {
        assert_eq!(guard(|| panic!("boom")), GiStatus::Internal);
        let msg = unsafe { CStr::from_ptr(gi_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
        assert_eq!(guard(|| Ok(())), GiStatus::Ok);
        assert!(gi_last_error_message().is_null());
    }
}
