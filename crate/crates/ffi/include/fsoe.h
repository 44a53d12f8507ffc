#ifndef FSOE_H
#define FSOE_H

/* Generated by cbindgen from src/lib.rs. Do not edit by hand. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FsoeStatus {
  FSOE_STATUS_OK = 0,
  FSOE_STATUS_NULL_POINTER = 1,
  FSOE_STATUS_INVALID_ARGUMENT = 2,
  /*
   A closed-form condition has no admissible solution.
   */
  FSOE_STATUS_INFEASIBLE = 3,
  /*
   Integration or root finding failed.
   */
  FSOE_STATUS_NUMERIC_FAILURE = 4,
  /*
   The caller's buffer is too small; the required size was written.
   */
  FSOE_STATUS_BUFFER_TOO_SMALL = 5,
  /*
   Malformed JSON or UTF-8.
   */
  FSOE_STATUS_PARSE_ERROR = 6,
  /*
   A Rust panic was caught at the boundary.
   */
  FSOE_STATUS_INTERNAL_ERROR = 7,
} FsoeStatus;

typedef enum FsoeStability {
  FSOE_STABILITY_STABLE_NODE = 0,
  FSOE_STABILITY_STABLE_FOCUS = 1,
  FSOE_STABILITY_UNSTABLE_NODE = 2,
  FSOE_STABILITY_UNSTABLE_FOCUS = 3,
  FSOE_STABILITY_SADDLE = 4,
  FSOE_STABILITY_CENTER = 5,
  FSOE_STABILITY_DEGENERATE = 6,
} FsoeStability;

typedef enum FsoeCycleSide {
  FSOE_CYCLE_SIDE_BELOW_BETA_STAR = 0,
  FSOE_CYCLE_SIDE_ABOVE_BETA_STAR = 1,
  FSOE_CYCLE_SIDE_UNDETERMINED = 2,
} FsoeCycleSide;

/*
 Interaction graph.
 */
typedef struct FsoeGraph FsoeGraph;

/*
 Model parameters.
 */
typedef struct FsoeModel FsoeModel;

/*
 Recorded solution of an integration.
 */
typedef struct FsoeTrajectory FsoeTrajectory;

typedef struct FsoePitchforkInfo {
  double beta_star;
  double gamma_star;
  double v0;
  double v1;
  double c;
  double c_tau;
  bool degenerate;
} FsoePitchforkInfo;

typedef struct FsoeHopfInfo {
  double beta_star;
  double gamma_star;
  double omega0;
  double a;
  double h21_re;
  double h21_im;
  double c1_re;
  double c1_im;
  enum FsoeCycleSide side;
  bool near_double_zero;
} FsoeHopfInfo;

typedef struct FsoeCycle {
  /*
   False when the trajectory settled on an equilibrium.
   */
  bool found;
  double p_min;
  double p_max;
  double period;
} FsoeCycle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *fsoe_version(void);

/*
 Message for the last failing call on this thread, or an empty string.
 */
const char *fsoe_last_error(void);

/*
 Reference configuration (`tanh(3x)`, `tanh(-3x)`, `u = x + gamma * 0.5`, unit time constants).

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum FsoeStatus fsoe_model_new_canonical(double beta, double gamma, struct FsoeModel **out);

/*
 Parses a run configuration document. A missing `beta` defaults to 0.5.

 # Safety
 `json` must be a NUL-terminated string and `out` writable.
 */
enum FsoeStatus fsoe_model_from_json(const char *json, struct FsoeModel **out);

/*
 # Safety
 `model` must come from a `fsoe_model_*` constructor and not be used afterwards. Null is ignored.
 */
void fsoe_model_free(struct FsoeModel *model);

/*
 # Safety
 `model` must be a live handle.
 */
enum FsoeStatus fsoe_model_set_beta(struct FsoeModel *model, double beta);

/*
 # Safety
 `model` must be a live handle and `out` writable.
 */
enum FsoeStatus fsoe_model_get_beta(const struct FsoeModel *model, double *out);

/*
 Right-hand side of the synchronized planar system at `(p, e)`.

 # Safety
 `model` must be a live handle; `out_dp` and `out_de` writable.
 */
enum FsoeStatus fsoe_rhs(const struct FsoeModel *model,
                         double p,
                         double e,
                         double *out_dp,
                         double *out_de);

/*
 Equilibria of the planar system, sorted by `p`.

 `out_count` always receives the number of equilibria; when it exceeds
 `capacity` nothing else is written and `BufferTooSmall` is returned.

 # Safety
 `model` must be a live handle; each output array must hold `capacity` elements.
 */
enum FsoeStatus fsoe_equilibria(const struct FsoeModel *model,
                                double *out_p,
                                double *out_e,
                                enum FsoeStability *out_stability,
                                size_t capacity,
                                size_t *out_count);

/*
 `beta` at which the origin has a zero eigenvalue for the model's `gamma`.

 # Safety
 `model` must be a live handle and `out_beta` writable.
 */
enum FsoeStatus fsoe_pitchfork_beta(const struct FsoeModel *model, double *out_beta);

/*
 # Safety
 `model` must be a live handle and `out` writable.
 */
enum FsoeStatus fsoe_pitchfork_coefficient(const struct FsoeModel *model,
                                           double beta_star,
                                           double gamma_star,
                                           struct FsoePitchforkInfo *out);

/*
 Hopf point of the origin for the model's `gamma`.

 # Safety
 `model` must be a live handle; outputs writable.
 */
enum FsoeStatus fsoe_hopf_locus(const struct FsoeModel *model,
                                double *out_beta,
                                double *out_omega0);

/*
 # Safety
 `model` must be a live handle and `out` writable.
 */
enum FsoeStatus fsoe_hopf_coefficient(const struct FsoeModel *model,
                                      double beta_star,
                                      double gamma_star,
                                      struct FsoeHopfInfo *out);

/*
 Attracting periodic orbit reached from a small perturbation of the origin.
 Non-positive `t_transient`, `t_measure` or `tol_cycle` select the defaults (300, 200, 1e-3).

 # Safety
 `model` must be a live handle and `out` writable.
 */
enum FsoeStatus fsoe_limit_cycle(const struct FsoeModel *model,
                                 double beta,
                                 double t_transient,
                                 double t_measure,
                                 double tol_cycle,
                                 struct FsoeCycle *out);

/*
 Builds a graph from `edge_count` vertex pairs stored as `[i0, j0, i1, j1, ...]`.

 # Safety
 `edges` must point to `2 * edge_count` values (may be null when `edge_count` is 0); `out` writable.
 */
enum FsoeStatus fsoe_graph_new(size_t n,
                               const size_t *edges,
                               size_t edge_count,
                               struct FsoeGraph **out);

/*
 Parses `{"n": .., "edges": [[i, j], ..]}`.

 # Safety
 `json` must be a NUL-terminated string and `out` writable.
 */
enum FsoeStatus fsoe_graph_from_json(const char *json, struct FsoeGraph **out);

/*
 # Safety
 `graph` must be a live handle.
 */
enum FsoeStatus fsoe_graph_vertex_count(const struct FsoeGraph *graph, size_t *out);

/*
 # Safety
 `graph` must come from a `fsoe_graph_*` constructor and not be used afterwards. Null is ignored.
 */
void fsoe_graph_free(struct FsoeGraph *graph);

/*
 Integrates the planar system on `[0, t_end]` with the adaptive method.

 # Safety
 `model` must be a live handle and `out` writable.
 */
enum FsoeStatus fsoe_simulate(const struct FsoeModel *model,
                              double p0,
                              double e0,
                              double t_end,
                              double tol,
                              struct FsoeTrajectory **out);

/*
 Integrates the network model from opinions `x0` (length `n`) and environment `e0`.

 # Safety
 `model` and `graph` must be live handles, `x0` must hold `n` values, `out` writable.
 */
enum FsoeStatus fsoe_simulate_network(const struct FsoeModel *model,
                                      const struct FsoeGraph *graph,
                                      const double *x0,
                                      size_t n,
                                      double e0,
                                      double t_end,
                                      double tol,
                                      struct FsoeTrajectory **out);

/*
 Number of samples and state dimension.

 # Safety
 `traj` must be a live handle; outputs writable.
 */
enum FsoeStatus fsoe_trajectory_shape(const struct FsoeTrajectory *traj,
                                      size_t *out_len,
                                      size_t *out_dim);

/*
 Copies sample times (`len` values) and states (`len * dim` values, row-major).

 # Safety
 `traj` must be a live handle; `out_times` must hold `capacity` values and
 `out_states` `capacity * dim` values.
 */
enum FsoeStatus fsoe_trajectory_copy(const struct FsoeTrajectory *traj,
                                     double *out_times,
                                     double *out_states,
                                     size_t capacity);

/*
 # Safety
 `traj` must come from a simulation call and not be used afterwards. Null is ignored.
 */
void fsoe_trajectory_free(struct FsoeTrajectory *traj);

/*
 Largest spread between opinions along a trajectory started at consensus `(p0, e0)`.

 # Safety
 `model` and `graph` must be live handles; `out` writable.
 */
enum FsoeStatus fsoe_forward_invariance(const struct FsoeModel *model,
                                        const struct FsoeGraph *graph,
                                        double p0,
                                        double e0,
                                        double t_end,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSOE_H */
