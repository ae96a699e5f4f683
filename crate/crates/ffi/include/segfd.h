#ifndef SEGFD_H
#define SEGFD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. Values other than `Ok`, `NullPointer`, `InvalidUtf8`
 * and `Panic` mirror the library's error kinds one to one.
 */
typedef enum SegfdStatus {
  SEGFD_STATUS_OK = 0,
  SEGFD_STATUS_NULL_POINTER = 1,
  SEGFD_STATUS_INVALID_UTF8 = 2,
  SEGFD_STATUS_PANIC = 3,
  SEGFD_STATUS_DIM_MISMATCH = 10,
  SEGFD_STATUS_MODE_MISMATCH = 11,
  SEGFD_STATUS_CLASS_SET_MISMATCH = 12,
  SEGFD_STATUS_INVALID_VALUE = 13,
  SEGFD_STATUS_BAD_WIDTH = 14,
  SEGFD_STATUS_BAD_PATCH = 15,
  SEGFD_STATUS_BAD_TOLERANCE = 16,
  SEGFD_STATUS_EMPTY_MAP = 17,
  SEGFD_STATUS_EMPTY_INPUT = 18,
  SEGFD_STATUS_LENGTH_MISMATCH = 19,
  SEGFD_STATUS_RISK_OUT_OF_RANGE = 20,
  SEGFD_STATUS_NONFINITE_INPUT = 21,
  SEGFD_STATUS_TOO_FEW_SAMPLES = 22,
  SEGFD_STATUS_TOO_FEW_ROWS = 23,
  SEGFD_STATUS_SINGULAR_AFTER_RIDGE = 24,
  SEGFD_STATUS_SCHEMA_MISMATCH = 25,
  SEGFD_STATUS_NORMALIZATION_DEGENERATE = 26,
  SEGFD_STATUS_CONSTANT_INPUT = 27,
  SEGFD_STATUS_SINGLE_CLASS = 28,
  SEGFD_STATUS_MISALIGNED_CASES = 29,
  SEGFD_STATUS_EMPTY_FOLD = 30,
  SEGFD_STATUS_BAD_MAGIC = 40,
  SEGFD_STATUS_UNSUPPORTED_DTYPE = 41,
  SEGFD_STATUS_FORTRAN_ORDER_UNSUPPORTED = 42,
  SEGFD_STATUS_VALUE_OUT_OF_RANGE = 43,
  SEGFD_STATUS_MISSING_COLUMN = 44,
  SEGFD_STATUS_DUPLICATE_CASE = 45,
  SEGFD_STATUS_UNRESOLVED_PATH = 46,
  SEGFD_STATUS_BAD_ROW = 47,
  SEGFD_STATUS_CONFIG = 48,
  SEGFD_STATUS_IO = 49,
  SEGFD_STATUS_JSON = 50,
  SEGFD_STATUS_CSV = 51,
} SegfdStatus;

/**
 * Segmentation metric behind a risk.
 */
typedef enum SegfdRiskMetric {
  SEGFD_RISK_METRIC_DSC = 0,
  SEGFD_RISK_METRIC_GENERALIZED_DSC = 1,
  SEGFD_RISK_METRIC_NSD = 2,
} SegfdRiskMetric;

/**
 * Confidence map handle.
 */
typedef struct SegfdConfidenceMap SegfdConfidenceMap;

/**
 * Risk-coverage curve handle.
 */
typedef struct SegfdCurve SegfdCurve;

/**
 * Fitted regression forest handle.
 */
typedef struct SegfdForest SegfdForest;

/**
 * Fitted Gaussian handle for Mahalanobis confidence.
 */
typedef struct SegfdGaussian SegfdGaussian;

/**
 * Label map handle.
 */
typedef struct SegfdLabelMap SegfdLabelMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *segfd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *segfd_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void segfd_string_free(char *s);

/**
 * DSC of two binary masks of `n` voxels (nonzero is inside).
 *
 * # Safety
 * `pred` and `gt` must point to `n` bytes; `out` must be writable.
 */
enum SegfdStatus segfd_dsc_binary(const uint8_t *pred, const uint8_t *gt, size_t n, double *out);

/**
 * Normalized surface distance of two binary masks on a `ndim`-axis grid.
 *
 * # Safety
 * `dims` and `spacing` must hold `ndim` entries, masks `prod(dims)` bytes.
 */
enum SegfdStatus segfd_nsd_binary(const uint8_t *pred,
                                  const uint8_t *gt,
                                  const size_t *dims,
                                  size_t ndim,
                                  const double *spacing,
                                  double tolerance,
                                  double *out);

/**
 * Creates an exclusive label map; voxel values are 0 or one of `class_ids`.
 *
 * # Safety
 * Arrays must hold the stated number of entries; `out` must be writable.
 */
enum SegfdStatus segfd_label_map_new_exclusive(const size_t *dims,
                                               size_t ndim,
                                               const double *spacing,
                                               const uint32_t *class_ids,
                                               size_t n_classes,
                                               const uint32_t *labels,
                                               struct SegfdLabelMap **out);

/**
 * Creates a region label map from `n_classes` stacked masks (nonzero is inside).
 *
 * # Safety
 * `masks` must hold `n_classes * prod(dims)` bytes, channel-major.
 */
enum SegfdStatus segfd_label_map_new_regions(const size_t *dims,
                                             size_t ndim,
                                             const double *spacing,
                                             const uint32_t *class_ids,
                                             size_t n_classes,
                                             const uint8_t *masks,
                                             struct SegfdLabelMap **out);

/**
 * # Safety
 * `map` must be null or a handle from this library, freed once.
 */
void segfd_label_map_free(struct SegfdLabelMap *map);

/**
 * # Safety
 * `values` must hold `prod(dims)` entries in [0, 1].
 */
enum SegfdStatus segfd_confidence_map_new(const size_t *dims,
                                          size_t ndim,
                                          const double *values,
                                          struct SegfdConfidenceMap **out);

/**
 * # Safety
 * `map` must be null or a handle from this library, freed once.
 */
void segfd_confidence_map_free(struct SegfdConfidenceMap *map);

/**
 * Mean DSC over the foreground classes.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_mean_dsc(const struct SegfdLabelMap *pred,
                                const struct SegfdLabelMap *gt,
                                double *out);

/**
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_generalized_dsc(const struct SegfdLabelMap *pred,
                                       const struct SegfdLabelMap *gt,
                                       double *out);

/**
 * Risk `1 - metric` over all classes; `nsd_tolerance` is used only for NSD.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_compute_risk(const struct SegfdLabelMap *pred,
                                    const struct SegfdLabelMap *gt,
                                    enum SegfdRiskMetric metric,
                                    double nsd_tolerance,
                                    double *out);

/**
 * # Safety
 * `conf` must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_agg_mean(const struct SegfdConfidenceMap *conf, double *out);

/**
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_agg_non_boundary(const struct SegfdConfidenceMap *conf,
                                        const struct SegfdLabelMap *pred,
                                        size_t width,
                                        double *out);

/**
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_agg_mean_foreground(const struct SegfdConfidenceMap *conf,
                                           const struct SegfdLabelMap *pred,
                                           size_t width,
                                           double *out);

/**
 * # Safety
 * `conf` must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_agg_patch_min(const struct SegfdConfidenceMap *conf,
                                     size_t patch_size,
                                     double *out);

/**
 * Writes the five simple features into `out[0..5]`.
 *
 * # Safety
 * Handles must be valid; `out` must hold 5 doubles.
 */
enum SegfdStatus segfd_simple_features(const struct SegfdConfidenceMap *conf,
                                       const struct SegfdLabelMap *pred,
                                       size_t width,
                                       double *out);

/**
 * Mean DSC over all unordered pairs of `m` sample predictions.
 *
 * # Safety
 * `samples` must hold `m` valid handles.
 */
enum SegfdStatus segfd_pairwise_dsc(const struct SegfdLabelMap *const *samples,
                                    size_t m,
                                    double *out);

/**
 * # Safety
 * `risks` and `confidences` must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_rc_curve_new(const double *risks,
                                    const double *confidences,
                                    size_t n,
                                    struct SegfdCurve **out);

/**
 * Number of working points (tie groups) of the curve.
 *
 * # Safety
 * `curve` must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_rc_curve_len(const struct SegfdCurve *curve, size_t *out);

/**
 * # Safety
 * `curve` must be valid; out pointers must be writable.
 */
enum SegfdStatus segfd_rc_curve_point(const struct SegfdCurve *curve,
                                      size_t index,
                                      double *coverage,
                                      double *selective_risk);

/**
 * # Safety
 * `curve` must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_rc_curve_aurc(const struct SegfdCurve *curve, double *out);

/**
 * Largest coverage whose selective risk is at most `max_selective_risk`.
 *
 * # Safety
 * `curve` must be valid; `out` must be writable.
 */
enum SegfdStatus segfd_rc_curve_operating_point(const struct SegfdCurve *curve,
                                                double max_selective_risk,
                                                double *out);

/**
 * # Safety
 * `curve` must be null or a handle from this library, freed once.
 */
void segfd_rc_curve_free(struct SegfdCurve *curve);

/**
 * AURC of the curve built from `risks` and `confidences`.
 *
 * # Safety
 * Arrays must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_aurc(const double *risks, const double *confidences, size_t n, double *out);

/**
 * # Safety
 * `risks` must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_aurc_random(const double *risks, size_t n, double *out);

/**
 * # Safety
 * `risks` must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_aurc_optimal(const double *risks, size_t n, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SegfdStatus segfd_naurc(double aurc, double aurc_random, double aurc_optimal, double *out);

/**
 * # Safety
 * `x` and `y` must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_spearman(const double *x, const double *y, size_t n, double *out);

/**
 * # Safety
 * `x` and `y` must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_pearson(const double *x, const double *y, size_t n, double *out);

/**
 * AUROC of `scores` for the positive (nonzero) `labels`.
 *
 * # Safety
 * Arrays must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_auroc(const uint8_t *labels, const double *scores, size_t n, double *out);

/**
 * Failure AUROC: failures are `risk > failure_threshold`, scored by negated confidence.
 *
 * # Safety
 * Arrays must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_f_auroc(const double *risks,
                               const double *confidences,
                               size_t n,
                               double failure_threshold,
                               double *out);

/**
 * # Safety
 * Arrays must hold `n` entries; `out` must be writable.
 */
enum SegfdStatus segfd_mae(const double *estimates, const double *truths, size_t n, double *out);

/**
 * Fits a Gaussian on `n` row-major feature vectors of length `d`.
 *
 * # Safety
 * `rows` must hold `n * d` entries; `out` must be writable.
 */
enum SegfdStatus segfd_gaussian_fit(const double *data,
                                    size_t n,
                                    size_t d,
                                    double ridge_epsilon,
                                    struct SegfdGaussian **out);

/**
 * Negated Mahalanobis distance of `x` (length `d`).
 *
 * # Safety
 * `model` must be valid, `x` must hold `d` entries.
 */
enum SegfdStatus segfd_gaussian_confidence(const struct SegfdGaussian *model,
                                           const double *x,
                                           size_t d,
                                           double *out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SegfdStatus segfd_gaussian_from_json(const char *json, struct SegfdGaussian **out);

/**
 * # Safety
 * `model` must be valid; release `*out` with `segfd_string_free`.
 */
enum SegfdStatus segfd_gaussian_to_json(const struct SegfdGaussian *model, char **out);

/**
 * # Safety
 * `model` must be null or a handle from this library, freed once.
 */
void segfd_gaussian_free(struct SegfdGaussian *model);

/**
 * Fits a multi-output forest on `n` rows of `d` features and `t` targets.
 * Features are named `f0..`, targets `t0..`; the confidence averages all targets.
 *
 * # Safety
 * `features` must hold `n * d` and `targets` `n * t` entries.
 */
enum SegfdStatus segfd_forest_fit(const double *features,
                                  const double *targets,
                                  size_t n,
                                  size_t d,
                                  size_t t,
                                  size_t n_trees,
                                  uint64_t seed,
                                  struct SegfdForest **out);

/**
 * Writes the `t` predicted targets for feature row `x` into `out`.
 *
 * # Safety
 * `x` must hold `d` entries and `out` room for `t` doubles.
 */
enum SegfdStatus segfd_forest_predict(const struct SegfdForest *model,
                                      const double *x,
                                      size_t d,
                                      double *out,
                                      size_t t);

/**
 * Mean predicted per-class DSC for feature row `x`.
 *
 * # Safety
 * `model` must be valid, `x` must hold `d` entries.
 */
enum SegfdStatus segfd_forest_confidence(const struct SegfdForest *model,
                                         const double *x,
                                         size_t d,
                                         double *out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SegfdStatus segfd_forest_from_json(const char *json, struct SegfdForest **out);

/**
 * # Safety
 * `model` must be valid; release `*out` with `segfd_string_free`.
 */
enum SegfdStatus segfd_forest_to_json(const struct SegfdForest *model, char **out);

/**
 * # Safety
 * `model` must be null or a handle from this library, freed once.
 */
void segfd_forest_free(struct SegfdForest *model);

/**
 * Runs a full evaluation and writes the report files into `out_dir`.
 * `n_errors` receives the size of the error ledger.
 *
 * # Safety
 * Paths must be NUL-terminated UTF-8; `n_errors` must be writable.
 */
enum SegfdStatus segfd_evaluate(const char *manifest_path,
                                const char *config_path,
                                const char *out_dir,
                                size_t *n_errors);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEGFD_H */
