#ifndef ATTLOC_H
#define ATTLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AttlocStatus {
  ATTLOC_STATUS_OK = 0,
  ATTLOC_STATUS_NULL_POINTER = 1,
  ATTLOC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Unreadable or malformed input file.
   */
  ATTLOC_STATUS_DATA = 3,
  ATTLOC_STATUS_CHECKPOINT = 4,
  /**
   * Shape mismatch or non-finite value during computation.
   */
  ATTLOC_STATUS_NUMERIC = 5,
  /**
   * Output buffer too small; the required size was written back.
   */
  ATTLOC_STATUS_BUFFER_TOO_SMALL = 6,
  ATTLOC_STATUS_PANIC = 7,
} AttlocStatus;

/**
 * Opaque model handle.
 */
typedef struct AttlocModel AttlocModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *attloc_version(void);

/**
 * Number of tags per output vector (7).
 */
size_t attloc_num_tags(void);

/**
 * Mel bands per input frame (40).
 */
size_t attloc_num_mels(void);

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *attloc_last_error(void);

/**
 * Loads a checkpoint file into a new handle stored in `*out_model`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_model` a valid pointer.
 */
enum AttlocStatus attloc_model_load(const char *path, struct AttlocModel **out_model);

/**
 * Releases a handle from [`attloc_model_load`]. NULL is ignored.
 *
 * # Safety
 * `model` must be NULL or a live handle; it must not be used afterwards.
 */
void attloc_model_free(struct AttlocModel *model);

/**
 * Writes 1 for an attention/localization model and 0 for the baseline.
 *
 * # Safety
 * `model` must be a live handle and `out_is_attloc` a valid pointer.
 */
enum AttlocStatus attloc_model_is_attloc(const struct AttlocModel *model, int32_t *out_is_attloc);

/**
 * Log-mel features of a WAV file. Writes the frame count to `*out_frames`;
 * when `capacity_frames` is smaller, returns `BUFFER_TOO_SMALL` without
 * touching `out_mel` (which may then be NULL).
 *
 * # Safety
 * `path` must be NUL-terminated, `out_frames` valid, and `out_mel` valid for
 * `capacity_frames × 40` doubles unless it is NULL.
 */
enum AttlocStatus attloc_wav_log_mel(const struct AttlocModel *model,
                                     const char *path,
                                     double *out_mel,
                                     size_t capacity_frames,
                                     size_t *out_frames);

/**
 * Chunk-level tag posteriors (7 values) for a log-mel chunk.
 *
 * # Safety
 * `mel` must hold `n_frames × 40` doubles and `out_probs` room for 7.
 */
enum AttlocStatus attloc_predict(const struct AttlocModel *model,
                                 const double *mel,
                                 size_t n_frames,
                                 double *out_probs);

/**
 * Per-frame attention (`n_frames`), localization and tag posteriors
 * (`n_frames × 7` each, row-major). Any output pointer may be NULL.
 *
 * # Safety
 * `mel` must hold `n_frames × 40` doubles; each non-NULL output must have
 * room for its documented size.
 */
enum AttlocStatus attloc_localize(const struct AttlocModel *model,
                                  const double *mel,
                                  size_t n_frames,
                                  double *out_z_att,
                                  double *out_z_loc,
                                  double *out_frame_probs);

/**
 * Equal error rate of `n` scores against binary labels (nonzero = positive).
 * Fails with `INVALID_ARGUMENT` when only one class is present.
 *
 * # Safety
 * `scores` and `labels` must hold `n` elements; `out_eer` must be valid.
 */
enum AttlocStatus attloc_eer(const double *scores,
                             const uint8_t *labels,
                             size_t n,
                             double *out_eer);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATTLOC_H */
