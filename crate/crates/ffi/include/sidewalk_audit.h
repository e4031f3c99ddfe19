#ifndef SIDEWALK_AUDIT_H
#define SIDEWALK_AUDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SWA_STATUS_OK = 0,
  SWA_STATUS_NULL_POINTER = 1,
  SWA_STATUS_INVALID_UTF8 = 2,
  SWA_STATUS_INVALID_ARGUMENT = 3,
  SWA_STATUS_PARSE = 4,
  SWA_STATUS_NOT_FOUND = 5,
  /**
   * The statistic is not defined for the input (constant ratings, a
   * category without POIs). Not an error; no message is set.
   */
  SWA_STATUS_UNDEFINED = 6,
  SWA_STATUS_BUFFER_TOO_SMALL = 7,
  SWA_STATUS_INTERNAL = 8,
  SWA_STATUS_PANIC = 9,
} SwaStatus;

/**
 * Opaque road network.
 */
typedef struct SwaNetwork SwaNetwork;

/**
 * Opaque label taxonomy.
 */
typedef struct SwaTaxonomy SwaTaxonomy;

/**
 * Opaque set of edges reached from one node.
 */
typedef struct SwaTrace SwaTrace;

/**
 * Descriptive statistics of a rating sample.
 */
typedef struct {
  double mean;
  double sd;
  double min;
  double max;
  size_t n;
} SwaDescriptive;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *swa_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void swa_string_free(char *s);

/**
 * Great-circle distance in meters.
 *
 * # Safety
 * `out` must be valid for writes.
 */
SwaStatus swa_haversine(double lat1, double lon1, double lat2, double lon2, double *out_m);

/**
 * Weight of a severity level: 1 → 0.2, 2 → 0.6, 3 → 1.0.
 *
 * # Safety
 * `out_weight` must be valid for writes.
 */
SwaStatus swa_severity_weight(int64_t severity, double *out_weight);

/**
 * Normalizes `n` raw segment scores into (0, 1), writing `n` values.
 *
 * # Safety
 * `raw` must hold `n` readable values and `out_scores` room for `n`.
 */
SwaStatus swa_normalize_scores(const double *raw, size_t n, double *out_scores);

/**
 * Length-weighted mean of segment scores.
 *
 * # Safety
 * `scores` and `lengths_m` must hold `n` values; `out_score` must be
 * valid for writes.
 */
SwaStatus swa_poi_sec_score(const double *scores,
                            const double *lengths_m,
                            size_t n,
                            double *out_score);

/**
 * POI-count-weighted mean of POI scores. Returns `Undefined` when the
 * counts sum to zero.
 *
 * # Safety
 * `scores` and `counts` must hold `n` values; `out_score` must be valid
 * for writes.
 */
SwaStatus swa_poi_across_sector_score(const double *scores,
                                      const uint64_t *counts,
                                      size_t n,
                                      double *out_score);

/**
 * Sample mean, standard deviation and range of `n` ratings.
 *
 * # Safety
 * `values` must hold `n` values; `out_stats` must be valid for writes.
 */
SwaStatus swa_descriptive_stats(const double *values, size_t n, SwaDescriptive *out_stats);

/**
 * Spearman's rho and its two-sided p value. Returns `Undefined` when
 * either vector is constant.
 *
 * # Safety
 * `a` and `b` must hold `n` values; the outputs must be valid for writes.
 */
SwaStatus swa_spearman(const double *a, const double *b, size_t n, double *out_rho, double *out_p);

/**
 * Quadratic-weighted Cohen's kappa over ratings in `1..=k`.
 *
 * # Safety
 * `a` and `b` must hold `n` values; `out_kappa` must be valid for writes.
 */
SwaStatus swa_weighted_kappa(const uint8_t *a,
                             const uint8_t *b,
                             size_t n,
                             uint8_t k,
                             double *out_kappa);

/**
 * Parses a GeoJSON FeatureCollection of LineStrings into a network.
 *
 * # Safety
 * `geojson` must be a NUL-terminated string; `out_network` must be valid
 * for writes.
 */
SwaStatus swa_network_load(const char *geojson, SwaNetwork **out_network);

/**
 * # Safety
 * `network` must come from [`swa_network_load`] and not be freed twice.
 */
void swa_network_free(SwaNetwork *network);

/**
 * # Safety
 * `network` must be a live handle or null (which yields 0).
 */
size_t swa_network_node_count(const SwaNetwork *network);

/**
 * # Safety
 * `network` must be a live handle or null (which yields 0).
 */
size_t swa_network_edge_count(const SwaNetwork *network);

/**
 * Node nearest to a coordinate.
 *
 * # Safety
 * `network` must be a live handle; `out_node` must be valid for writes.
 */
SwaStatus swa_network_nearest_node(const SwaNetwork *network,
                                   double lat,
                                   double lon,
                                   uint32_t *out_node);

/**
 * Edges reachable within `budget_m` of node `origin`.
 *
 * # Safety
 * `network` must be a live handle; `out_trace` must be valid for writes.
 */
SwaStatus swa_trace_paths(const SwaNetwork *network,
                          uint32_t origin,
                          double budget_m,
                          SwaTrace **out_trace);

/**
 * # Safety
 * `trace` must be a live handle or null (which yields 0).
 */
size_t swa_trace_edge_count(const SwaTrace *trace);

/**
 * Copies the traced edge ids in ascending order. Fails with
 * `BufferTooSmall` when `capacity` is below [`swa_trace_edge_count`].
 *
 * # Safety
 * `trace` must be a live handle and `out_edges` must have room for
 * `capacity` values.
 */
SwaStatus swa_trace_edges(const SwaTrace *trace, uint32_t *out_edges, size_t capacity);

/**
 * # Safety
 * `trace` must come from [`swa_trace_paths`] and not be freed twice.
 */
void swa_trace_free(SwaTrace *trace);

/**
 * The bundled label taxonomy. Never null.
 */
SwaTaxonomy *swa_taxonomy_builtin(void);

/**
 * Parses and validates a taxonomy JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_taxonomy` must be valid for
 * writes.
 */
SwaStatus swa_taxonomy_load(const char *json, SwaTaxonomy **out_taxonomy);

/**
 * # Safety
 * `taxonomy` must come from this library and not be freed twice.
 */
void swa_taxonomy_free(SwaTaxonomy *taxonomy);

/**
 * Guidance prompt for a road type such as `"residential"` or
 * `"secondary"`. Release the result with [`swa_string_free`].
 *
 * # Safety
 * `taxonomy` must be a live handle, `road_type` a NUL-terminated string
 * and `out_prompt` valid for writes.
 */
SwaStatus swa_build_prompt(const SwaTaxonomy *taxonomy, const char *road_type, char **out_prompt);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIDEWALK_AUDIT_H */
