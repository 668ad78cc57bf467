#ifndef VERISCRIBE_H
#define VERISCRIBE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of features; `per_feature` buffers hold this many doubles.
 */
#define VS_NUM_FEATURES 15

typedef enum VsStatus {
  VS_STATUS_OK = 0,
  VS_STATUS_NULL_POINTER = 1,
  VS_STATUS_INVALID_UTF8 = 2,
  VS_STATUS_IO = 3,
  VS_STATUS_PARSE = 4,
  VS_STATUS_VALIDATION = 5,
  VS_STATUS_OUT_OF_RANGE = 6,
  VS_STATUS_MISSING_SOFT = 7,
  VS_STATUS_NOT_FOUND = 8,
  VS_STATUS_SCHEMA_MISMATCH = 9,
  VS_STATUS_INTERNAL = 99,
} VsStatus;

/**
 * Loaded records.
 */
typedef struct VsDataset VsDataset;

/**
 * Trained same/different network pair.
 */
typedef struct VsLaamModel VsLaamModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length plus one, so a
 * caller can size the buffer with a first call passing `len = 0`.
 */
size_t vs_last_error_message(char *buf, size_t len);

/**
 * Read a labels CSV (`.csv`) or soft-record file (anything else).
 */
enum VsStatus vs_dataset_read(const char *path, struct VsDataset **out_dataset);

void vs_dataset_free(struct VsDataset *dataset);

/**
 * Number of records; 0 for a null handle.
 */
size_t vs_dataset_len(const struct VsDataset *dataset);

/**
 * Index of the record `writer_id/sample_id`.
 */
enum VsStatus vs_dataset_find(const struct VsDataset *dataset,
                              const char *writer_id,
                              const char *sample_id,
                              size_t *out_index);

/**
 * Cosine similarity of two non-negative vectors of length `len`.
 */
enum VsStatus vs_cosine_sim(const double *q, const double *k, size_t len, double *out_sim);

/**
 * DAAM score of records `q` and `k`. `per_feature` may be null; otherwise
 * it receives `VS_NUM_FEATURES` similarities.
 */
enum VsStatus vs_daam_score(const struct VsDataset *dataset,
                            size_t q,
                            size_t k,
                            double *out_overall,
                            double *per_feature);

/**
 * Distance code of classes `q` and `k` on zero-based feature `feature`.
 */
enum VsStatus vs_encode_distance(size_t feature, size_t q, size_t k, size_t *out_code);

/**
 * Load a model written by `veriscribe train-laam`.
 */
enum VsStatus vs_laam_model_load(const char *path, struct VsLaamModel **out_model);

void vs_laam_model_free(struct VsLaamModel *model);

/**
 * Decision threshold stored with the model.
 */
enum VsStatus vs_laam_model_tau(const struct VsLaamModel *model, double *out_tau);

/**
 * Log-likelihood ratio of records `q` and `k` (hard labels, or argmax of
 * soft vectors when present).
 */
enum VsStatus vs_laam_llr(const struct VsLaamModel *model,
                          const struct VsDataset *dataset,
                          size_t q,
                          size_t k,
                          double *out_llr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VERISCRIBE_H */
