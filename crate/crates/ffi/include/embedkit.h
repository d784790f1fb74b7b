#ifndef EMBEDKIT_H
#define EMBEDKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EkStatus {
  EK_STATUS_OK = 0,
  EK_STATUS_NULL_ARGUMENT = 1,
  EK_STATUS_INVALID_UTF8 = 2,
  EK_STATUS_IO = 3,
  EK_STATUS_PARSE = 4,
  EK_STATUS_NOT_FOUND = 5,
  EK_STATUS_UNDEFINED = 6,
  EK_STATUS_INVALID_INPUT = 7,
  EK_STATUS_BUFFER_TOO_SMALL = 8,
  EK_STATUS_OUT_OF_RANGE = 9,
  EK_STATUS_PANIC = 10,
  EK_STATUS_OTHER = 11,
} EkStatus;

/**
 * Loaded embeddings. Opaque to C.
 */
typedef struct EkEmbeddings EkEmbeddings;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads embeddings from `path` (the `.emb1` sidecar when present) into
 * `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum EkStatus ek_embeddings_load(const char *path, struct EkEmbeddings **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `h` must come from [`ek_embeddings_load`] and not be used afterwards.
 */
void ek_embeddings_free(struct EkEmbeddings *h);

/**
 * Vector dimension, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t ek_embeddings_dim(const struct EkEmbeddings *h);

/**
 * Vocabulary size, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t ek_embeddings_len(const struct EkEmbeddings *h);

/**
 * Copies the word with vocabulary id `index` into `buf` as a
 * NUL-terminated string. `*needed` receives the size including the NUL,
 * also when `buf` is too small.
 *
 * # Safety
 * `buf` must be writable for `buf_len` bytes; `needed` may be null.
 */
enum EkStatus ek_embeddings_word_at(const struct EkEmbeddings *h,
                                    size_t index,
                                    char *buf,
                                    size_t buf_len,
                                    size_t *needed);

/**
 * Writes the vector of `word` (n-gram composition for unknown words when
 * the model has subwords) into `out`, which holds `out_len` floats.
 *
 * # Safety
 * `word` must be NUL-terminated; `out` writable for `out_len` floats.
 */
enum EkStatus ek_embeddings_word_vector(const struct EkEmbeddings *h,
                                        const char *word,
                                        float *out,
                                        size_t out_len);

/**
 * Cosine similarity of two words.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated; `out` writable.
 */
enum EkStatus ek_embeddings_cosine(const struct EkEmbeddings *h,
                                   const char *a,
                                   const char *b,
                                   double *out);

/**
 * Up to `k` nearest vocabulary words to `word`, best first. Ids go to
 * `out_ids`, cosines to `out_scores` (either may be null) and the number
 * written to `*out_count`.
 *
 * # Safety
 * `out_ids` and `out_scores` must be null or writable for `k` elements.
 */
enum EkStatus ek_embeddings_nearest(const struct EkEmbeddings *h,
                                    const char *word,
                                    size_t k,
                                    uint32_t *out_ids,
                                    double *out_scores,
                                    size_t *out_count);

/**
 * Spearman rank correlation of two series of length `n`.
 *
 * # Safety
 * `gold` and `predicted` must be readable for `n` doubles; `out` writable.
 */
enum EkStatus ek_spearman(const double *gold, const double *predicted, size_t n, double *out);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next `ek_` call on the same thread.
 */
const char *ek_last_error(void);

/**
 * Static name of a status code.
 */
const char *ek_status_name(enum EkStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMBEDKIT_H */
