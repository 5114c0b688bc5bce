#ifndef AAH_H
#define AAH_H

#include <stdbool.h>
#include <stddef.h>

typedef enum AahStatus {
  AAH_STATUS_OK = 0,
  AAH_STATUS_NULL_POINTER = 1,
  AAH_STATUS_INVALID_ARGUMENT = 2,
  AAH_STATUS_NUMERICAL = 3,
  AAH_STATUS_OUT_OF_RANGE = 4,
  AAH_STATUS_BUFFER_TOO_SMALL = 5,
  AAH_STATUS_PANIC = 6,
} AahStatus;

typedef enum AahBoundKind {
  AAH_BOUND_KIND_DBS_GROUND = 0,
  AAH_BOUND_KIND_DBS_GAP = 1,
  AAH_BOUND_KIND_BIC = 2,
  AAH_BOUND_KIND_DARK = 3,
} AahBoundKind;

typedef struct AahBoundStates AahBoundStates;

/**
 * Lattice, bath and the diagonalized chain.
 */
typedef struct AahSystem AahSystem;

typedef struct AahTrajectory AahTrajectory;

/**
 * Scalar description of one bound state.
 */
typedef struct AahBoundInfo {
  enum AahBoundKind kind;
  double energy;
  double ipr;
  /**
   * `(Σα)²·(−Σ')`; principal-valued for a BIC.
   */
  double emission;
  double sum_alpha;
  size_t loc_site;
} AahBoundInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `len - 1` bytes. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t aah_last_error_message(char *buf, size_t len);

/**
 * Builds and diagonalizes the chain. `periodic` selects the ring.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum AahStatus aah_system_new(size_t n_sites,
                              double delta,
                              double beta,
                              double phi,
                              bool periodic,
                              double eta,
                              double s,
                              double omega_c,
                              struct AahSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from [`aah_system_new`] not yet freed.
 */
void aah_system_free(struct AahSystem *sys);

/**
 * Number of sites, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t aah_system_len(const struct AahSystem *sys);

/**
 * Writes the ascending lattice energies into `out[0..len]`.
 *
 * # Safety
 * `sys` must be a live handle and `out` valid for `len` doubles.
 */
enum AahStatus aah_system_energies(const struct AahSystem *sys, double *out, size_t len);

/**
 * Self-energy `Σ(E)` of the system's bath.
 *
 * # Safety
 * `sys` must be a live handle and `out` valid for one double.
 */
enum AahStatus aah_system_self_energy(const struct AahSystem *sys, double energy, double *out);

/**
 * Searches for bound states below the spectrum and in every interior gap;
 * with `include_positive` the gaps above `E = 0` are scanned too.
 *
 * # Safety
 * `sys` must be a live handle and `out` valid for one pointer write.
 */
enum AahStatus aah_bound_states_find(const struct AahSystem *sys,
                                     bool include_positive,
                                     struct AahBoundStates **out);

/**
 * # Safety
 * `bs` must be null or a handle from [`aah_bound_states_find`] not yet freed.
 */
void aah_bound_states_free(struct AahBoundStates *bs);

/**
 * # Safety
 * `bs` must be null or a live handle.
 */
size_t aah_bound_states_count(const struct AahBoundStates *bs);

/**
 * # Safety
 * `bs` must be a live handle and `out` valid for one write.
 */
enum AahStatus aah_bound_states_get(const struct AahBoundStates *bs,
                                    size_t index,
                                    struct AahBoundInfo *out);

/**
 * Chain amplitudes of bound state `index`, normalized on the chain.
 *
 * # Safety
 * `bs` must be a live handle and `out` valid for `len` doubles.
 */
enum AahStatus aah_bound_states_amplitudes(const struct AahBoundStates *bs,
                                           size_t index,
                                           double *out,
                                           size_t len);

/**
 * Evolves a single excitation starting on `site`, recording every
 * `record_every`-th step.
 *
 * # Safety
 * `sys` must be a live handle and `out` valid for one pointer write.
 */
enum AahStatus aah_evolve_site(const struct AahSystem *sys,
                               size_t site,
                               double t_max,
                               double dt,
                               size_t record_every,
                               struct AahTrajectory **out);

/**
 * # Safety
 * `tr` must be null or a handle from [`aah_evolve_site`] not yet freed.
 */
void aah_trajectory_free(struct AahTrajectory *tr);

/**
 * Number of recorded times, or 0 for a null handle.
 *
 * # Safety
 * `tr` must be null or a live handle.
 */
size_t aah_trajectory_len(const struct AahTrajectory *tr);

/**
 * # Safety
 * `tr` must be a live handle and `out` valid for `len` doubles.
 */
enum AahStatus aah_trajectory_times(const struct AahTrajectory *tr, double *out, size_t len);

/**
 * Site populations `|α_n|²` at recorded time `index`.
 *
 * # Safety
 * `tr` must be a live handle and `out` valid for `len` doubles.
 */
enum AahStatus aah_trajectory_populations(const struct AahTrajectory *tr,
                                          size_t index,
                                          double *out,
                                          size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AAH_H */
