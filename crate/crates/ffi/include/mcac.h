#ifndef MCAC_H
#define MCAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum McacStatus {
  MCAC_STATUS_OK = 0,
  MCAC_STATUS_NULL_POINTER = 1,
  MCAC_STATUS_INVALID_ARGUMENT = 2,
  MCAC_STATUS_INVALID_GRID = 3,
  MCAC_STATUS_INVALID_CURVE = 4,
  MCAC_STATUS_TIME_STEP_TOO_LARGE = 5,
  MCAC_STATUS_OVERSHOOT = 6,
  MCAC_STATUS_DEGENERATE_PHASE = 7,
  MCAC_STATUS_SOLVER_DIVERGENCE = 8,
  MCAC_STATUS_SELF_INTERSECTION = 9,
  MCAC_STATUS_CURVE_TOUCHES_BOUNDARY = 10,
  MCAC_STATUS_EIG_SOLVER_STALL = 11,
  MCAC_STATUS_SOLVABILITY = 12,
  MCAC_STATUS_CONFIG = 13,
  MCAC_STATUS_FORMAT = 14,
  MCAC_STATUS_IO = 15,
  MCAC_STATUS_PANIC = 16,
} McacStatus;

// Constraint applied by the phase-field stepper.
typedef enum McacMultiplier {
  MCAC_MULTIPLIER_BB = 0,
  MCAC_MULTIPLIER_RS = 1,
  MCAC_MULTIPLIER_NONE = 2,
} McacMultiplier;

// Closed polygon.
typedef struct McacCurve McacCurve;

// Cell-centred field on a rectangular grid.
typedef struct McacField McacField;

// Area-preserving curve shortening flow.
typedef struct McacFlow McacFlow;

// Phase-field simulation state with its implicit solver.
typedef struct McacSim McacSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t mcac_last_error(char *buf, size_t len);

// Creates an `nx × ny` field on `[0, lx] × [0, ly]` from row-major values
// (`x` fastest), `len == nx·ny`.
//
// # Safety
// `values` must point to `len` doubles; `out` must be writable.
enum McacStatus mcac_field_new(size_t nx,
                               size_t ny,
                               double lx,
                               double ly,
                               const double *values,
                               size_t len,
                               struct McacField **out);

// # Safety
// `field` must be null or come from this library and not be freed twice.
void mcac_field_free(struct McacField *field);

// Number of cells, or 0 for a null field.
//
// # Safety
// `field` must be null or a live field.
size_t mcac_field_len(const struct McacField *field);

// Copies the values into `out`, which must hold at least `mcac_field_len`.
//
// # Safety
// `field` must be a live field and `out` must point to `len` doubles.
enum McacStatus mcac_field_values(const struct McacField *field, double *out, size_t len);

// Midpoint-rule integral over the domain.
//
// # Safety
// `field` must be a live field and `out` writable.
enum McacStatus mcac_field_integral(const struct McacField *field, double *out);

// Creates a closed polygon from `n` interleaved `x, y` pairs.
//
// # Safety
// `xy` must point to `2·n` doubles; `out` must be writable.
enum McacStatus mcac_curve_new(const double *xy, size_t n, struct McacCurve **out);

// Regular `n`-gon inscribed in the circle of radius `r` about `(cx, cy)`.
//
// # Safety
// `out` must be writable.
enum McacStatus mcac_curve_circle(double cx, double cy, double r, size_t n, struct McacCurve **out);

// # Safety
// `curve` must be null or come from this library and not be freed twice.
void mcac_curve_free(struct McacCurve *curve);

// Number of vertices, or 0 for a null curve.
//
// # Safety
// `curve` must be null or a live curve.
size_t mcac_curve_len(const struct McacCurve *curve);

// Copies the vertices as interleaved `x, y` pairs; `len` counts doubles.
//
// # Safety
// `curve` must be a live curve and `out` must point to `len` doubles.
enum McacStatus mcac_curve_points(const struct McacCurve *curve, double *out, size_t len);

// Enclosed area (positive for counter-clockwise curves).
//
// # Safety
// `curve` must be a live curve and `out` writable.
enum McacStatus mcac_curve_area(const struct McacCurve *curve, double *out);

// Arclength-weighted mean curvature.
//
// # Safety
// `curve` must be a live curve and `out` writable.
enum McacStatus mcac_curve_mean_curvature(const struct McacCurve *curve, double *out);

// Starts a phase-field simulation from a copy of `u0`. `dt <= 0` picks
// `0.1·eps²`.
//
// # Safety
// `u0` must be a live field and `out` writable.
enum McacStatus mcac_sim_new(const struct McacField *u0,
                             double eps,
                             double dt,
                             enum McacMultiplier multiplier,
                             struct McacSim **out);

// # Safety
// `sim` must be null or come from this library and not be freed twice.
void mcac_sim_free(struct McacSim *sim);

// Advances `steps` time steps. On failure the state stays at the last
// successful step.
//
// # Safety
// `sim` must be a live simulation.
enum McacStatus mcac_sim_step(struct McacSim *sim, uint64_t steps);

// Current time, or NaN for a null simulation.
//
// # Safety
// `sim` must be null or a live simulation.
double mcac_sim_time(const struct McacSim *sim);

// Current discrete mass `Σu·h²`, or NaN for a null simulation.
//
// # Safety
// `sim` must be null or a live simulation.
double mcac_sim_mass(const struct McacSim *sim);

// Multiplier used by the most recent step, or NaN for a null simulation.
//
// # Safety
// `sim` must be null or a live simulation.
double mcac_sim_multiplier(const struct McacSim *sim);

// Copies the current field into a new handle owned by the caller.
//
// # Safety
// `sim` must be a live simulation and `out` writable.
enum McacStatus mcac_sim_field(const struct McacSim *sim, struct McacField **out);

// Starts an area-preserving flow from a copy of `curve`. `dt <= 0` picks
// half the stability limit of the curve.
//
// # Safety
// `curve` must be a live curve and `out` writable.
enum McacStatus mcac_flow_new(const struct McacCurve *curve,
                              double dt,
                              bool projection,
                              struct McacFlow **out);

// # Safety
// `flow` must be null or come from this library and not be freed twice.
void mcac_flow_free(struct McacFlow *flow);

// Advances the flow until its time reaches `t`, shortening the last step to
// land on it.
//
// # Safety
// `flow` must be a live flow.
enum McacStatus mcac_flow_advance(struct McacFlow *flow, double t);

// Current flow time, or NaN for a null flow.
//
// # Safety
// `flow` must be null or a live flow.
double mcac_flow_time(const struct McacFlow *flow);

// Copies the current curve into a new handle owned by the caller.
//
// # Safety
// `flow` must be a live flow and `out` writable.
enum McacStatus mcac_flow_curve(const struct McacFlow *flow, struct McacCurve **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCAC_H */
