#ifndef FPAUTH_H
#define FPAUTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FpaScanMode {
  FPA_SCAN_MODE_CAUSAL_FORWARD = 0,
  FPA_SCAN_MODE_CAUSAL_BACKWARD = 1,
} FpaScanMode;

typedef enum FpaStatus {
  FPA_STATUS_OK = 0,
  FPA_STATUS_NULL_POINTER = 1,
  FPA_STATUS_INVALID_ARGUMENT = 2,
  FPA_STATUS_PARSE = 3,
  FPA_STATUS_IO = 4,
  FPA_STATUS_NO_FIXED_POINT = 5,
  FPA_STATUS_DIMENSION_MISMATCH = 6,
  FPA_STATUS_BUFFER_TOO_SMALL = 7,
  FPA_STATUS_PANIC = 8,
} FpaStatus;

/**
 * 8-bit grayscale image, row-major.
 */
typedef struct FpaImage FpaImage;

/**
 * Secret authentication key.
 */
typedef struct FpaKey FpaKey;

/**
 * Per-pixel verification verdicts.
 */
typedef struct FpaMask FpaMask;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated)
 * and returns the buffer size it needs; 0 when there is no error. Nothing is
 * written when `len` is too small.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fpa_last_error_message(char *buf, size_t len);

/**
 * Parses an FPAKEY1 key from NUL-terminated text.
 *
 * # Safety
 * `text` must be a valid C string; `out` must be writable.
 */
enum FpaStatus fpa_key_parse(const char *text, struct FpaKey **out);

/**
 * Draws a key deterministically from `seed` with integers in `[lo, hi]`.
 * `mode` takes an [`FpaScanMode`] value.
 *
 * # Safety
 * `out` must be writable.
 */
enum FpaStatus fpa_key_random(uint64_t seed,
                              uint32_t mode,
                              double ub_h,
                              uint64_t lo,
                              uint64_t hi,
                              struct FpaKey **out);

/**
 * Serializes `key` as FPAKEY1 text into `buf`. `*needed` receives the size
 * required including the NUL; `BufferTooSmall` when `len` is short.
 *
 * # Safety
 * `key` must be a live handle; `buf` null or `len` writable bytes; `needed`
 * null or writable.
 */
enum FpaStatus fpa_key_write(const struct FpaKey *key, char *buf, size_t len, size_t *needed);

/**
 * # Safety
 * `key` must be null or a handle not yet freed.
 */
void fpa_key_free(struct FpaKey *key);

/**
 * Creates a `rows` x `cols` image, copying `rows * cols` bytes from `pixels`
 * or zero-filled when `pixels` is null.
 *
 * # Safety
 * `pixels` must be null or point to `rows * cols` readable bytes.
 */
enum FpaStatus fpa_image_new(size_t rows,
                             size_t cols,
                             const uint8_t *pixels,
                             struct FpaImage **out);

/**
 * # Safety
 * `img` must be null or a live handle.
 */
size_t fpa_image_rows(const struct FpaImage *img);

/**
 * # Safety
 * `img` must be null or a live handle.
 */
size_t fpa_image_cols(const struct FpaImage *img);

/**
 * Row-major pixel buffer of `rows * cols` bytes, valid until the image is
 * freed or modified. Null for a null handle.
 *
 * # Safety
 * `img` must be null or a live handle.
 */
const uint8_t *fpa_image_pixels(const struct FpaImage *img);

/**
 * Sets one pixel at zero-based `(row, col)`.
 *
 * # Safety
 * `img` must be a live handle.
 */
enum FpaStatus fpa_image_set(struct FpaImage *img, size_t row, size_t col, uint8_t value);

/**
 * Reads a PGM (P5) or 8-bit grayscale PNG file.
 *
 * # Safety
 * `path` must be a valid C string; `out` writable.
 */
enum FpaStatus fpa_image_read(const char *path, struct FpaImage **out);

/**
 * Writes PNG when `path` ends in `.png`, PGM otherwise.
 *
 * # Safety
 * `img` must be a live handle; `path` a valid C string.
 */
enum FpaStatus fpa_image_write(const struct FpaImage *img, const char *path);

/**
 * # Safety
 * `img` must be null or a handle not yet freed.
 */
void fpa_image_free(struct FpaImage *img);

/**
 * Signs `img` under `key` into a new fixed point image.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum FpaStatus fpa_generate(const struct FpaImage *img,
                            const struct FpaKey *key,
                            struct FpaImage **out);

/**
 * Verifies `img` under `key` into a new tamper mask.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum FpaStatus fpa_verify(const struct FpaImage *img,
                          const struct FpaKey *key,
                          struct FpaMask **out);

/**
 * Number of suspicious pixels; 0 for a null handle.
 *
 * # Safety
 * `mask` must be null or a live handle.
 */
size_t fpa_mask_count(const struct FpaMask *mask);

/**
 * Whether zero-based `(row, col)` is suspicious; false when out of range.
 *
 * # Safety
 * `mask` must be null or a live handle.
 */
bool fpa_mask_get(const struct FpaMask *mask, size_t row, size_t col);

/**
 * Copies the mask row-major into `buf` as 255 (suspicious) or 0.
 *
 * # Safety
 * `mask` must be a live handle; `buf` null or `len` writable bytes.
 */
enum FpaStatus fpa_mask_copy(const struct FpaMask *mask, uint8_t *buf, size_t len);

/**
 * # Safety
 * `mask` must be null or a handle not yet freed.
 */
void fpa_mask_free(struct FpaMask *mask);

/**
 * PSNR in dB between two equally sized images; infinity when identical.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum FpaStatus fpa_psnr(const struct FpaImage *a, const struct FpaImage *b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPAUTH_H */
