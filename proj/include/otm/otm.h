/* C interface to the optimal-transport meshfree advection-diffusion solver.
 *
 * All functions return otm_status; OTM_OK is zero. On failure the thread's
 * last error message is available through otm_last_error(). Handles are
 * opaque and must be released with their destroy function.
 */
#ifndef OTM_OTM_H
#define OTM_OTM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum otm_status {
  OTM_OK = 0,
  OTM_ERR_ARGUMENT = 1,
  OTM_ERR_CONFIG = 2,
  OTM_ERR_IO = 3,
  OTM_ERR_RESOLUTION = 4, /* under-resolved discretization, incl. spill over */
  OTM_ERR_INVERSION = 5,  /* non-positive transport-map Jacobian */
  OTM_ERR_NUMERICS = 6,   /* iteration or linear-solver failure */
  OTM_ERR_INVARIANT = 7   /* state invariant audit failed */
} otm_status;

/* 1 when the status names a usage/configuration problem (CLI exit 1),
 * 0 for runtime and invariant failures (CLI exit 2). */
int otm_status_is_usage(otm_status status);

/* Message describing the most recent failure on this thread. */
const char* otm_last_error(void);

typedef struct otm_sim otm_sim;

typedef struct otm_step_info {
  long long step;
  double time;
  double dt;
  double mass;
  double mean_density;
  double volume;
  double max_radius;
  double entropy;
  long long rebuilds;
  long long newton_iters;
  int projected_nodes;
  int frozen_nodes;
} otm_step_info;

/* Simulation construction: from config text, from a config file, or from a
 * built-in preset name. */
otm_status otm_sim_create(const char* config_text, otm_sim** out);
otm_status otm_sim_create_from_file(const char* path, otm_sim** out);
otm_status otm_sim_create_from_preset(const char* name, otm_sim** out);
void otm_sim_destroy(otm_sim* sim);

/* Overrides the configured output directory (highest precedence). */
otm_status otm_sim_set_output_dir(otm_sim* sim, const char* dir);

/* Runs from t = 0 to the configured end, writing history.csv and cadence
 * snapshots into the output directory. */
otm_status otm_sim_run(otm_sim* sim);

/* Advances a single step; info may be NULL. */
otm_status otm_sim_step(otm_sim* sim, otm_step_info* info);

/* Diagnostics of the current state; valid before the first step. */
otm_status otm_sim_info(otm_sim* sim, otm_step_info* info);

otm_status otm_sim_write_snapshot(otm_sim* sim, const char* path);

/* Snapshot-level invariant audit. Writes a human-readable report into the
 * caller's buffer (always NUL-terminated when capacity > 0) and fails with
 * OTM_ERR_INVARIANT when a violation is found. */
otm_status otm_check_snapshot(const char* path, char* report, size_t capacity);

/* Exact squared 2-Wasserstein distance between the particle measures of two
 * snapshots, deterministically subsampled to at most `subsample` points
 * (0 keeps every particle). */
otm_status otm_wasserstein(const char* snapshot_a, const char* snapshot_b,
                           long subsample, double* cost);

/* Built-in preset registry. otm_preset_name returns NULL past the end;
 * otm_preset_text returns NULL for unknown names. */
int otm_preset_count(void);
const char* otm_preset_name(int index);
const char* otm_preset_text(const char* name);

#ifdef __cplusplus
}
#endif

#endif /* OTM_OTM_H */
