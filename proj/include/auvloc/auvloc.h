/*
 * auvloc C API.
 *
 * Every function returning auvloc_status leaves a thread-local diagnostic
 * readable with auvloc_last_error() when it fails. Handles are opaque and
 * owned by the caller once returned; release them with the matching _free.
 */
#ifndef AUVLOC_AUVLOC_H
#define AUVLOC_AUVLOC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AUVLOC_API __declspec(dllexport)
#else
#define AUVLOC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum auvloc_status {
  AUVLOC_OK = 0,
  AUVLOC_E_RANK_DEFICIENT = 1,
  AUVLOC_E_NOT_SYMMETRIC = 2,
  AUVLOC_E_NO_REAL_ROOT = 3,
  AUVLOC_E_NO_POSITIVE_ROOT = 4,
  AUVLOC_E_SINGULAR_GRADIENT = 5,
  AUVLOC_E_PRECONDITION = 6,
  AUVLOC_E_INVALID_NOISE = 7,
  AUVLOC_E_INVALID_DT = 8,
  AUVLOC_E_SINGULAR_INNOVATION = 9,
  AUVLOC_E_PLAN_EXHAUSTED = 10,
  AUVLOC_E_Q_NOT_PSD = 11,
  AUVLOC_E_EMPTY_INPUT = 12,
  AUVLOC_E_PARSE = 13,
  AUVLOC_E_VALIDATION = 14,
  AUVLOC_E_IO = 15,
  AUVLOC_E_INVALID_ARGUMENT = 16,
  AUVLOC_E_INTERNAL = 17
} auvloc_status;

typedef enum auvloc_experiment {
  AUVLOC_EXPERIMENT_LOCALIZE = 0,
  AUVLOC_EXPERIMENT_TRACK = 1,
  AUVLOC_EXPERIMENT_SEARCH = 2
} auvloc_experiment;

typedef enum auvloc_format { AUVLOC_FORMAT_CSV = 0, AUVLOC_FORMAT_JSON = 1 } auvloc_format;

typedef struct auvloc_config auvloc_config;
typedef struct auvloc_record auvloc_record;
typedef struct auvloc_filter auvloc_filter;

AUVLOC_API const char* auvloc_version(void);
AUVLOC_API const char* auvloc_status_string(auvloc_status status);
/* Message of the last failed call on this thread; "" if none. */
AUVLOC_API const char* auvloc_last_error(void);

/* ---- configuration ---- */

AUVLOC_API auvloc_status auvloc_config_load(const char* path, auvloc_config** out);
AUVLOC_API auvloc_status auvloc_config_parse(const char* json_text, auvloc_config** out);
AUVLOC_API void auvloc_config_free(auvloc_config* cfg);
AUVLOC_API auvloc_status auvloc_config_set_seed(auvloc_config* cfg, uint64_t seed);
AUVLOC_API uint64_t auvloc_config_seed(const auvloc_config* cfg);
AUVLOC_API double auvloc_config_dt(const auvloc_config* cfg);
AUVLOC_API size_t auvloc_config_buoy_count(const auvloc_config* cfg);

/* Grid points as xyz triples. With out_xyz == NULL only *count is set. */
AUVLOC_API auvloc_status auvloc_config_grid(const auvloc_config* cfg, double* out_xyz,
                                            size_t capacity, size_t* count);

/* ---- experiments ---- */

AUVLOC_API auvloc_status auvloc_run(const auvloc_config* cfg, auvloc_experiment kind,
                                    auvloc_record** out);
AUVLOC_API void auvloc_record_free(auvloc_record* record);
AUVLOC_API double auvloc_record_mae(const auvloc_record* record);
AUVLOC_API int auvloc_record_failures(const auvloc_record* record);
AUVLOC_API size_t auvloc_record_step_count(const auvloc_record* record);

/* Writes trajectory, metrics and manifest.json into dir. `subcommand` is
 * recorded in the manifest. With paths != NULL, up to `capacity` written
 * paths are joined with '\n' into it (NUL-terminated). */
AUVLOC_API auvloc_status auvloc_record_write(const auvloc_record* record,
                                             const auvloc_config* cfg,
                                             const char* subcommand, const char* dir,
                                             auvloc_format format, char* paths,
                                             size_t capacity);

/* ---- single-shot solver ---- */

/* buoys_xyz: n_buoys xyz triples, reference first. deltas: n_buoys - 1
 * arrival-time differences in seconds. */
AUVLOC_API auvloc_status auvloc_solve_chan(const double* buoys_xyz, size_t n_buoys,
                                           const double* deltas, double sound_speed_mps,
                                           double out_xyz[3]);

/* ---- Kalman filter handle ---- */

/* q: 36 row-major, r: 9 row-major, mean0: 6, cov0: 36 row-major. */
AUVLOC_API auvloc_status auvloc_filter_new(double dt, const double* q, const double* r,
                                           const double* mean0, const double* cov0,
                                           auvloc_filter** out);
AUVLOC_API void auvloc_filter_free(auvloc_filter* filter);
AUVLOC_API auvloc_status auvloc_filter_predict(auvloc_filter* filter, const double accel[3]);
AUVLOC_API auvloc_status auvloc_filter_update(auvloc_filter* filter, const double z[3]);
/* mean: 6 values; cov: 36 row-major (may be NULL). */
AUVLOC_API auvloc_status auvloc_filter_state(const auvloc_filter* filter, double* mean,
                                             double* cov, double* time);

#ifdef __cplusplus
}
#endif

#endif /* AUVLOC_AUVLOC_H */
