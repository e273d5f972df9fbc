#ifndef ROBINOPT_H
#define ROBINOPT_H

/* Generated by cbindgen from the robinopt-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Success.
#define ROBINOPT_OK 0

// Invalid argument (null pointer, bad mesh size, unknown name, ...).
#define ROBINOPT_ERR_INVALID 1

// Solver failure (state solve or optimizer did not converge).
#define ROBINOPT_ERR_SOLVER 2

// Instance file could not be parsed or validated.
#define ROBINOPT_ERR_PARSE 3

// Assumption check failed on the instance.
#define ROBINOPT_ERR_ASSUMPTIONS 4

// Opaque problem-instance handle.
typedef struct RobinoptInstance RobinoptInstance;

// Opaque disk-mesh handle.
typedef struct RobinoptMesh RobinoptMesh;

// Opaque solution-set handle.
typedef struct RobinoptSolution RobinoptSolution;

// Copy the message of the most recent error on this thread into `buffer`
// (always NUL-terminated, truncated to `length` bytes). Returns the full
// message length in bytes, excluding the terminator.
//
// # Safety
// `buffer` must point to `length` writable bytes, or be null with
// `length == 0` to query the message length only.
size_t robinopt_last_error_message(char *buffer, size_t length);

// Create an instance from a builtin name (`quartic`, `unbounded`,
// `quadratic`) or a JSON file path.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be a valid pointer.
int32_t robinopt_instance_create(const char *spec, struct RobinoptInstance **out);

// Release an instance handle. Null is ignored.
//
// # Safety
// `handle` must come from `robinopt_instance_create` and not be used again.
void robinopt_instance_free(struct RobinoptInstance *handle);

// Check the standing assumptions on an instance. Returns `ROBINOPT_OK`
// when all pass and `ROBINOPT_ERR_ASSUMPTIONS` (with the first witness as
// the error message) otherwise.
//
// # Safety
// `handle` must be a live instance handle.
int32_t robinopt_check_assumptions(const struct RobinoptInstance *handle);

// Build the structured disk mesh with the given ring and sector counts.
//
// # Safety
// `out` must be a valid pointer.
int32_t robinopt_mesh_create(size_t rings, size_t sectors, struct RobinoptMesh **out);

// Release a mesh handle. Null is ignored.
//
// # Safety
// `handle` must come from `robinopt_mesh_create` and not be used again.
void robinopt_mesh_free(struct RobinoptMesh *handle);

// Number of boundary nodes (the control dimension) of a mesh.
//
// # Safety
// `handle` must be a live mesh handle.
size_t robinopt_mesh_boundary_count(const struct RobinoptMesh *handle);

// Solve the control problem at constant parameter overrides with the
// default deterministic multistart, producing a solution-set handle.
//
// # Safety
// `instance` and `mesh` must be live handles; `out` must be valid.
int32_t robinopt_solve(const struct RobinoptInstance *instance,
                       const struct RobinoptMesh *mesh,
                       double mu1,
                       double mu2,
                       double lambda1,
                       double lambda2,
                       struct RobinoptSolution **out);

// Release a solution handle. Null is ignored.
//
// # Safety
// `handle` must come from `robinopt_solve` and not be used again.
void robinopt_solution_free(struct RobinoptSolution *handle);

// Optimal value of a solution set.
//
// # Safety
// `handle` must be a live solution handle.
double robinopt_solution_value(const struct RobinoptSolution *handle);

// Number of deduplicated candidate minimizers.
//
// # Safety
// `handle` must be a live solution handle.
size_t robinopt_solution_cluster_count(const struct RobinoptSolution *handle);

// Cost of the given cluster.
//
// # Safety
// `handle` must be a live solution handle.
double robinopt_solution_cost(const struct RobinoptSolution *handle, size_t cluster);

// Largest optimality-system residual of the given cluster.
//
// # Safety
// `handle` must be a live solution handle.
double robinopt_solution_residual(const struct RobinoptSolution *handle, size_t cluster);

// Copy the boundary control of the given cluster into `buffer`. The
// required length is `robinopt_mesh_boundary_count`. Returns the number of
// values written.
//
// # Safety
// `handle` must be a live solution handle and `buffer` must point to
// `length` writable doubles.
size_t robinopt_solution_control(const struct RobinoptSolution *handle,
                                 size_t cluster,
                                 double *buffer,
                                 size_t length);

#endif  /* ROBINOPT_H */
