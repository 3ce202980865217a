#ifndef NETPLAN_H
#define NETPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NetplanStatus {
  NETPLAN_STATUS_OK = 0,
  NETPLAN_STATUS_NULL_POINTER = 1,
  NETPLAN_STATUS_INVALID_ARGUMENT = 2,
  NETPLAN_STATUS_INFEASIBLE = 3,
  NETPLAN_STATUS_PARSE_ERROR = 4,
  NETPLAN_STATUS_BUFFER_TOO_SMALL = 5,
  NETPLAN_STATUS_SIMULATION_MISMATCH = 6,
  NETPLAN_STATUS_BUDGET_EXCEEDED = 7,
  NETPLAN_STATUS_IO = 8,
  NETPLAN_STATUS_INTERNAL = 99,
} NetplanStatus;

typedef enum NetplanMethod {
  NETPLAN_METHOD_IM2COL = 0,
  NETPLAN_METHOD_SDK = 1,
  NETPLAN_METHOD_VW_SDK = 2,
} NetplanMethod;

/*
 Opaque parsed network.
 */
typedef struct NetplanNetwork NetplanNetwork;

/*
 One convolutional layer, stride 1.
 */
typedef struct NetplanLayer {
  uint32_t ifm_w;
  uint32_t ifm_h;
  uint32_t k_w;
  uint32_t k_h;
  uint32_t in_ch;
  uint32_t out_ch;
} NetplanLayer;

typedef struct NetplanArray {
  uint32_t rows;
  uint32_t cols;
} NetplanArray;

typedef struct NetplanPlan {
  enum NetplanMethod method;
  uint32_t pw_w;
  uint32_t pw_h;
  uint32_t ic_tile;
  uint32_t oc_tile;
  uint32_t windows_per_pw;
  uint64_t num_pw;
  uint64_t ar_cycles;
  uint64_t ac_cycles;
  uint64_t total_cycles;
} NetplanPlan;

typedef struct NetplanUtilization {
  /*
   AR x AC cycles per parallel-window position.
   */
  uint64_t cycles;
  double mean_pct;
  double peak_pct;
} NetplanUtilization;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Last error message on this thread, or an empty string. Valid until the
 next netplan call on the same thread.
 */
const char *netplan_last_error(void);

/*
 Static description of a status code.
 */
const char *netplan_status_str(enum NetplanStatus status);

/*
 Plans one layer with `method`.

 # Safety
 `layer` and `array` must point to valid structs; `out` must be writable.
 */
enum NetplanStatus netplan_plan_layer(const struct NetplanLayer *layer,
                                      const struct NetplanArray *array,
                                      enum NetplanMethod method,
                                      struct NetplanPlan *out);

/*
 Exhaustive reference search; fails with `BudgetExceeded` above `budget` candidates.

 # Safety
 Same as [`netplan_plan_layer`].
 */
enum NetplanStatus netplan_plan_oracle(const struct NetplanLayer *layer,
                                       const struct NetplanArray *array,
                                       uint64_t budget,
                                       struct NetplanPlan *out);

/*
 Mean and peak used-cell percentage of the `method` plan.

 # Safety
 Same as [`netplan_plan_layer`].
 */
enum NetplanStatus netplan_layer_utilization(const struct NetplanLayer *layer,
                                             const struct NetplanArray *array,
                                             enum NetplanMethod method,
                                             struct NetplanUtilization *out);

/*
 Simulates the `method` plan on seeded random operands and compares it
 with a direct convolution. Returns `SimulationMismatch` on any difference.

 # Safety
 `layer`, `array` must be valid; `measured_cycles` may be null.
 */
enum NetplanStatus netplan_verify_layer(const struct NetplanLayer *layer,
                                        const struct NetplanArray *array,
                                        enum NetplanMethod method,
                                        uint64_t seed,
                                        uint64_t *measured_cycles);

/*
 Parses network-file text into a new handle.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum NetplanStatus netplan_network_parse(const char *text, struct NetplanNetwork **out);

/*
 Loads a network file into a new handle.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum NetplanStatus netplan_network_load(const char *path, struct NetplanNetwork **out);

/*
 Releases a handle. Null is ignored.

 # Safety
 `net` must come from this library and not be used afterwards.
 */
void netplan_network_free(struct NetplanNetwork *net);

/*
 Number of layers, or 0 for a null handle.

 # Safety
 `net` must be null or a live handle.
 */
size_t netplan_network_layer_count(const struct NetplanNetwork *net);

/*
 Plans every layer into `plans[0..layer_count]` and writes the summed
 cycles to `total_cycles`. Fails with `BufferTooSmall` (writing nothing to
 `plans`) when `capacity` is short; `total_cycles` is still set.

 # Safety
 `net` must be a live handle, `array` valid, `plans` writable for
 `capacity` elements, `total_cycles` writable or null.
 */
enum NetplanStatus netplan_network_plan(const struct NetplanNetwork *net,
                                        const struct NetplanArray *array,
                                        enum NetplanMethod method,
                                        struct NetplanPlan *plans,
                                        size_t capacity,
                                        uint64_t *total_cycles);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETPLAN_H */
