#ifndef DYNGRAPH_H
#define DYNGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DgStatistic {
  DG_STATISTIC_GED = 0,
  DG_STATISTIC_DD = 1,
  DG_STATISTIC_CB = 2,
  DG_STATISTIC_MS = 3,
  DG_STATISTIC_MSC = 4,
  DG_STATISTIC_DS = 5,
  DG_STATISTIC_DSC = 6,
  DG_STATISTIC_TP = 7,
} DgStatistic;

// Result codes. Values 2 to 4 match the command-line exit codes.
typedef enum DgStatus {
  DG_STATUS_OK = 0,
  // Null pointer or non-UTF-8 string argument.
  DG_STATUS_INVALID_ARGUMENT = 1,
  DG_STATUS_CONFIG = 2,
  DG_STATUS_DATA = 3,
  DG_STATUS_DEGENERATE = 4,
  // An internal panic was caught at the boundary.
  DG_STATUS_INTERNAL = 5,
} DgStatus;

// Opaque network handle.
typedef struct DgNetwork DgNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a `timestamp src dst [count]` edge list and windows it.
// `n_nodes` of 0 means "number of distinct labels".
//
// # Safety
// `text` must be a nul-terminated string; `out` a writable pointer.
enum DgStatus dg_network_from_edge_list(const char *text,
                                        int64_t window,
                                        size_t n_nodes,
                                        struct DgNetwork **out);

// # Safety
// `network` must come from [`dg_network_from_edge_list`] and not be used
// afterwards. Null is ignored.
void dg_network_free(struct DgNetwork *network);

// # Safety
// `network` must be a live handle or null (returns 0).
size_t dg_network_num_nodes(const struct DgNetwork *network);

// # Safety
// `network` must be a live handle or null (returns 0).
size_t dg_network_num_snapshots(const struct DgNetwork *network);

// # Safety
// `network` must be a live handle or null (returns 0).
int64_t dg_network_first_t(const struct DgNetwork *network);

// Accepts GED, DD, CB, MS, MSC, DS, DSC, TP (case-insensitive).
//
// # Safety
// `name` must be a nul-terminated string; `out` a writable pointer.
enum DgStatus dg_statistic_from_name(const char *name, enum DgStatistic *out);

// Value of `statistic` at time step `t`.
//
// # Safety
// `network` must be a live handle; `out` a writable pointer.
enum DgStatus dg_compute(const struct DgNetwork *network,
                         enum DgStatistic statistic,
                         int64_t t,
                         double *out);

// Runs detection and returns the report as JSON. `config` holds flat
// `key = value` lines (alpha, statistics, null, detrend, empty_snapshots);
// null or empty selects the defaults. Release the result with
// [`dg_string_free`].
//
// # Safety
// `network` must be a live handle; `config` null or a nul-terminated
// string; `out_json` a writable pointer.
enum DgStatus dg_detect_json(const struct DgNetwork *network, const char *config, char **out_json);

// Message for the last failed call on this thread, or null. Valid until
// the next call on this thread.
const char *dg_last_error_message(void);

// # Safety
// `s` must come from this library and not be used afterwards. Null is
// ignored.
void dg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNGRAPH_H */
