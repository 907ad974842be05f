#ifndef GRAYINDEX_H
#define GRAYINDEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum GiStatus {
  GI_STATUS_OK = 0,
  GI_STATUS_INVALID_ARGUMENT = 1,
  GI_STATUS_NULL_POINTER = 2,
  GI_STATUS_IO = 3,
  // No gray candidates, a degenerate estimate or illuminant.
  GI_STATUS_DEGENERATE = 4,
  // A Rust panic was caught at the boundary.
  GI_STATUS_INTERNAL = 5,
} GiStatus;

// Per-pixel illuminant chroma.
typedef struct GiField GiField;

// Linear RGB image.
typedef struct GiImage GiImage;

// Grayness Index map; excluded pixels hold `+inf`.
typedef struct GiMap GiMap;

// GI computation parameters.
typedef struct GiParams {
  double epsilon;
  size_t log_kernel_size;
  double log_sigma;
  size_t smooth_window;
  double log_floor;
  bool include_green;
  bool exclude_border;
} GiParams;

// Multi-illuminant parameters. `sigma_pixels <= 0` means "use
// `sigma_fraction` of the diagonal".
typedef struct GiMultiParams {
  double top_percent;
  size_t clusters;
  double sigma_fraction;
  double sigma_pixels;
  // Gaussian `exp(-D^2/2s^2)` when true, `exp(-D/2s^2)` otherwise.
  bool gaussian_kernel;
  uint64_t seed;
  size_t max_iters;
} GiMultiParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next library call on the same thread.
const char *gi_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *gi_version(void);

struct GiParams gi_params_default(void);

struct GiMultiParams gi_multi_params_default(void);

// Copies `width * height * 3` interleaved values into a new image.
//
// # Safety
// `rgb` must point to `width * height * 3` readable doubles.
enum GiStatus gi_image_from_rgb(size_t width,
                                size_t height,
                                const double *rgb,
                                struct GiImage **out);

// Loads a PNG, TIFF or PFM file. With a non-NULL `camera` the samples are
// raw counts corrected with that camera's levels from the built-in table;
// otherwise they are divided by their type maximum.
//
// # Safety
// `path` and `camera` (when non-NULL) must be NUL-terminated strings.
enum GiStatus gi_image_load(const char *path, const char *camera, struct GiImage **out);

// # Safety
// `image` must be NULL or a handle from this library, not yet freed.
void gi_image_free(struct GiImage *image);

// # Safety
// `image` must be a live handle.
size_t gi_image_width(const struct GiImage *image);

// # Safety
// `image` must be a live handle.
size_t gi_image_height(const struct GiImage *image);

// Copies the pixels, interleaved, into `out` (`len` doubles, at least
// `width * height * 3`).
//
// # Safety
// `image` must be a live handle and `out` must hold `len` doubles.
enum GiStatus gi_image_copy_rgb(const struct GiImage *image, double *out, size_t len);

// Computes the GI map. Dark and saturated pixels are always excluded; a
// non-NULL `mask` (`width * height` bytes, nonzero = exclude) adds to them.
// A NULL `params` means the defaults.
//
// # Safety
// `image` must be a live handle; `mask` and `params` NULL or valid.
enum GiStatus gi_compute(const struct GiImage *image,
                         const uint8_t *mask,
                         const struct GiParams *params,
                         struct GiMap **out);

// # Safety
// `map` must be NULL or a live handle.
void gi_map_free(struct GiMap *map);

// Borrows the row-major GI values; valid while `map` lives.
//
// # Safety
// `map` must be a live handle; `values` and `len` writable.
enum GiStatus gi_map_values(const struct GiMap *map, const double **values, size_t *len);

// # Safety
// `map` must be a live handle.
size_t gi_map_candidates(const struct GiMap *map);

// Global illuminant: mean chroma of the `top_percent` percent of pixels
// with the smallest GI.
//
// # Safety
// Handles must be live; `out_rgb` must hold 3 doubles.
enum GiStatus gi_estimate_global(const struct GiImage *image,
                                 const struct GiMap *map,
                                 double top_percent,
                                 double *out_rgb);

// Per-pixel illuminant from clustered gray pixels. A NULL `params` means
// the defaults.
//
// # Safety
// Handles must be live; `params` NULL or valid.
enum GiStatus gi_estimate_spatial(const struct GiImage *image,
                                  const struct GiMap *map,
                                  const struct GiMultiParams *params,
                                  struct GiField **out);

// # Safety
// `field` must be NULL or a live handle.
void gi_field_free(struct GiField *field);

// Chroma at `(x, y)`.
//
// # Safety
// `field` must be a live handle; `out_rgb` must hold 3 doubles.
enum GiStatus gi_field_get(const struct GiField *field, size_t x, size_t y, double *out_rgb);

// Von Kries correction for one global illuminant `rgb` (3 doubles).
//
// # Safety
// `image` must be a live handle and `rgb` must hold 3 doubles.
enum GiStatus gi_correct_global(const struct GiImage *image,
                                const double *rgb,
                                struct GiImage **out);

// Von Kries correction with a per-pixel field.
//
// # Safety
// Handles must be live.
enum GiStatus gi_correct_field(const struct GiImage *image,
                               const struct GiField *field,
                               struct GiImage **out);

// Angle in degrees between two RGB vectors (normalized first).
//
// # Safety
// `a` and `b` must hold 3 doubles; `out_degrees` must be writable.
enum GiStatus gi_angular_error(const double *a, const double *b, double *out_degrees);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAYINDEX_H */
