/* C interface to the bubbleforce contact-force estimation library. */

#pragma once

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum BfStatus {
  BF_STATUS_OK = 0,
  BF_STATUS_INVALID_ARGUMENT = 1,
  BF_STATUS_IO = 2,
  BF_STATUS_MESH = 3,
  BF_STATUS_CONFIG = 4,
  BF_STATUS_OBSERVATION = 5,
  BF_STATUS_SOLVER = 6,
  BF_STATUS_INTERNAL = 7,
} BfStatus;

// Opaque per-mesh estimator holding the assembled model.
typedef struct BfEstimator BfEstimator;

// Opaque triangulated membrane mesh.
typedef struct BfMesh BfMesh;

// Opaque result of one frame estimation.
typedef struct BfResult BfResult;

// Message for the most recent error on this thread; valid until the next
// failing call on the same thread.
const char *bf_last_error_message(void);

// Library version as a static string.
const char *bf_version(void);

// Loads an ASCII OFF mesh.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid location to
// store the new handle.
enum BfStatus bf_mesh_load_off(const char *path, struct BfMesh **out);

// Generates a spherical-cap membrane mesh with exactly `vertices`
// vertices (`vertices >= 12`).
//
// # Safety
// `out` must be a valid location to store the new handle.
enum BfStatus bf_mesh_generate_cap(size_t vertices,
                                   double base_radius,
                                   double height,
                                   struct BfMesh **out);

// # Safety
// `mesh` must be a handle from this library, or null (a no-op).
void bf_mesh_free(struct BfMesh *mesh);

// # Safety
// `mesh` must be a valid handle.
size_t bf_mesh_vertex_count(const struct BfMesh *mesh);

// # Safety
// `mesh` must be a valid handle.
size_t bf_mesh_face_count(const struct BfMesh *mesh);

// Number of rim vertices.
//
// # Safety
// `mesh` must be a valid handle.
size_t bf_mesh_boundary_count(const struct BfMesh *mesh);

// Builds an estimator for a mesh.
//
// `camera_json` is a camera description in the run-config schema (null
// for the built-in sensor camera); `params_json` is a parameter file
// payload (null for defaults).
//
// # Safety
// `mesh` must be a valid handle; the JSON pointers must be null or
// NUL-terminated; `out` must be valid.
enum BfStatus bf_estimator_new(const struct BfMesh *mesh,
                               double reference_pressure_pa,
                               const char *camera_json,
                               const char *params_json,
                               struct BfEstimator **out);

// # Safety
// `estimator` must be a handle from this library, or null (a no-op).
void bf_estimator_free(struct BfEstimator *estimator);

// Runs the full pipeline on an observation frame file.
//
// # Safety
// `estimator` must be valid, `path` NUL-terminated, `out` valid.
enum BfStatus bf_estimator_estimate_frame_file(struct BfEstimator *estimator,
                                               const char *path,
                                               struct BfResult **out);

// Runs the estimation tail on an already-computed displacement field
// (`stacked_u` has `3 * vertex_count` entries ordered x, y, z per
// vertex).
//
// # Safety
// `estimator` must be valid; `stacked_u` must point to `len` doubles;
// `out` must be valid.
enum BfStatus bf_estimator_estimate_displacements(struct BfEstimator *estimator,
                                                  const double *stacked_u,
                                                  size_t len,
                                                  double delta_p,
                                                  struct BfResult **out);

// # Safety
// `result` must be a handle from this library, or null (a no-op).
void bf_result_free(struct BfResult *result);

// # Safety
// `result` must be a valid handle.
size_t bf_result_vertex_count(const struct BfResult *result);

// Net interior contact force, N.
//
// # Safety
// `result` must be valid and `out` point to three doubles.
enum BfStatus bf_result_net_force(const struct BfResult *result, double *out);

// Per-vertex external forces (x, y, z per vertex), N.
//
// # Safety
// `result` must be valid; `out` must hold `len` doubles.
enum BfStatus bf_result_vertex_forces(const struct BfResult *result, double *out, size_t len);

// Per-vertex contact pressure vectors, Pa.
//
// # Safety
// `result` must be valid; `out` must hold `len` doubles.
enum BfStatus bf_result_contact_pressures(const struct BfResult *result, double *out, size_t len);

// Inward normal contact pressure per vertex, Pa.
//
// # Safety
// `result` must be valid; `out` must hold `len` doubles.
enum BfStatus bf_result_inward_pressure(const struct BfResult *result, double *out, size_t len);

// Contact flags per vertex (1 = in contact).
//
// # Safety
// `result` must be valid; `out` must hold `len` bytes.
enum BfStatus bf_result_contact_mask(const struct BfResult *result, uint8_t *out, size_t len);

// Contact threshold used for the mask, Pa.
//
// # Safety
// `result` must be a valid handle.
double bf_result_contact_threshold(const struct BfResult *result);

// Objective value at the returned correction.
//
// # Safety
// `result` must be a valid handle.
double bf_result_objective(const struct BfResult *result);

// 1 when the solver met its tolerances, 0 otherwise.
//
// # Safety
// `result` must be a valid handle.
int bf_result_converged(const struct BfResult *result);

// Solver iteration count.
//
// # Safety
// `result` must be a valid handle.
size_t bf_result_iterations(const struct BfResult *result);
