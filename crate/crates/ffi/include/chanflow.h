#ifndef CHANFLOW_H
#define CHANFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum ChanflowStatus {
  CHANFLOW_STATUS_OK = 0,
  CHANFLOW_STATUS_NULL_POINTER = 1,
  CHANFLOW_STATUS_INVALID_UTF8 = 2,
  CHANFLOW_STATUS_INVALID_INPUT = 3,
  CHANFLOW_STATUS_SOLVER_FAILURE = 4,
  CHANFLOW_STATUS_OUT_OF_RANGE = 5,
  CHANFLOW_STATUS_PANIC = 6,
} ChanflowStatus;

/**
 * Opaque simulation handle.
 */
typedef struct ChanflowSimulation ChanflowSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a simulation from scenario JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChanflowStatus chanflow_simulation_from_json(const char *json,
                                                  struct ChanflowSimulation **out);

/**
 * Build one of the built-in scenarios. `cells` of 0 keeps its default grid.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChanflowStatus chanflow_simulation_from_preset(const char *name,
                                                    size_t cells,
                                                    struct ChanflowSimulation **out);

/**
 * Release a simulation. Null is ignored.
 *
 * # Safety
 * `sim` must come from a constructor above and not be used afterwards.
 */
void chanflow_simulation_free(struct ChanflowSimulation *sim);

/**
 * Take one time step; the step length is written to `dt` when non-null.
 *
 * # Safety
 * `sim` must be a live handle; `dt` null or valid.
 */
enum ChanflowStatus chanflow_simulation_step(struct ChanflowSimulation *sim, double *dt);

/**
 * Step until `time` is reached exactly. Earlier times are a no-op.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum ChanflowStatus chanflow_simulation_run_until(struct ChanflowSimulation *sim, double time);

/**
 * Current simulation time.
 *
 * # Safety
 * `sim` must be a live handle and `time` valid.
 */
enum ChanflowStatus chanflow_simulation_time(const struct ChanflowSimulation *sim, double *time);

/**
 * Total stored volume in links and junctions.
 *
 * # Safety
 * `sim` must be a live handle and `volume` valid.
 */
enum ChanflowStatus chanflow_simulation_volume(const struct ChanflowSimulation *sim,
                                               double *volume);

/**
 * Number of links.
 *
 * # Safety
 * `sim` must be a live handle and `count` valid.
 */
enum ChanflowStatus chanflow_simulation_link_count(const struct ChanflowSimulation *sim,
                                                   size_t *count);

/**
 * Number of cells on `link`.
 *
 * # Safety
 * `sim` must be a live handle and `count` valid.
 */
enum ChanflowStatus chanflow_simulation_cell_count(const struct ChanflowSimulation *sim,
                                                   size_t link,
                                                   size_t *count);

/**
 * Copy cell-average wetted areas and discharges of `link` into caller buffers
 * of length `len`, which must equal the cell count. Either buffer may be null.
 *
 * # Safety
 * Non-null buffers must hold `len` doubles.
 */
enum ChanflowStatus chanflow_simulation_link_state(const struct ChanflowSimulation *sim,
                                                   size_t link,
                                                   double *area,
                                                   double *discharge,
                                                   size_t len);

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into the library on the same thread.
 */
const char *chanflow_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *chanflow_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHANFLOW_H */
