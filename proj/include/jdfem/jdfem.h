/* C interface to the jdfem library: subordinated random fields,
 * jump-diffusion coefficients, P1 finite elements and strong-error studies.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a jdfem_status;
 * on failure jdfem_last_error() describes the problem for the calling
 * thread. */
#ifndef JDFEM_JDFEM_H
#define JDFEM_JDFEM_H

#include <stddef.h>
#include <stdint.h>

#if defined(JDFEM_BUILDING)
#define JDFEM_API __attribute__((visibility("default")))
#else
#define JDFEM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum jdfem_status {
  JDFEM_OK = 0,
  JDFEM_ERR_INVALID_ARGUMENT = 1,
  JDFEM_ERR_CONFIG = 2,
  JDFEM_ERR_NUMERICAL = 3,
  JDFEM_ERR_IO = 4,
  JDFEM_ERR_INTERNAL = 5
} jdfem_status;

typedef enum jdfem_mesh_mode { JDFEM_MESH_ADAPTED = 0, JDFEM_MESH_STANDARD = 1 } jdfem_mesh_mode;

typedef enum jdfem_format { JDFEM_FORMAT_BINARY = 0, JDFEM_FORMAT_CSV = 1 } jdfem_format;

typedef enum jdfem_plot_kind { JDFEM_PLOT_ERROR_VS_H = 0, JDFEM_PLOT_ERROR_VS_DOFS = 1 } jdfem_plot_kind;

typedef struct jdfem_config jdfem_config;
typedef struct jdfem_report jdfem_report;
typedef struct jdfem_string jdfem_string;

JDFEM_API const char* jdfem_version(void);
JDFEM_API const char* jdfem_status_name(jdfem_status status);
/* Message of the last failed call on this thread ("" when none). */
JDFEM_API const char* jdfem_last_error(void);
/* Offending configuration key of the last JDFEM_ERR_CONFIG ("" otherwise). */
JDFEM_API const char* jdfem_last_error_key(void);

/* Strings returned by the library. */
JDFEM_API const char* jdfem_string_data(const jdfem_string* s);
JDFEM_API size_t jdfem_string_size(const jdfem_string* s);
JDFEM_API void jdfem_string_free(jdfem_string* s);

/* Configuration */
JDFEM_API jdfem_status jdfem_config_default(jdfem_config** out);
JDFEM_API jdfem_status jdfem_config_load(const char* path, jdfem_config** out);
JDFEM_API jdfem_status jdfem_config_parse(const char* text, jdfem_config** out);
/* Dotted key, e.g. "fields.sigma1". Does not validate the whole config. */
JDFEM_API jdfem_status jdfem_config_set(jdfem_config* config, const char* key, const char* value);
JDFEM_API jdfem_status jdfem_config_get(const jdfem_config* config, const char* key,
                                        jdfem_string** out);
JDFEM_API jdfem_status jdfem_config_validate(const jdfem_config* config);
JDFEM_API jdfem_status jdfem_config_echo(const jdfem_config* config, jdfem_string** out);
JDFEM_API void jdfem_config_free(jdfem_config* config);

/* Selects one coupled sample: its index and the discretization it is
 * rendered at (level 0 is the reference discretization). */
typedef struct jdfem_sample_spec {
  uint64_t index;
  uint32_t level;
  jdfem_mesh_mode mesh;
} jdfem_sample_spec;

/* Gaussian field W1 (which = 1) or W2 (which = 2) at the sample's lattice. */
JDFEM_API jdfem_status jdfem_write_field(const jdfem_config* config, const jdfem_sample_spec* spec,
                                         int which, jdfem_format format, const char* path);
/* Subordinator paths l1 and l2 as CSV. */
JDFEM_API jdfem_status jdfem_write_paths(const jdfem_config* config, const jdfem_sample_spec* spec,
                                         const char* path_l1, const char* path_l2);
/* n x n cell-centre raster of the coefficient plus a JSON metadata file
 * (metadata_path may be NULL). */
JDFEM_API jdfem_status jdfem_write_coefficient(const jdfem_config* config,
                                               const jdfem_sample_spec* spec, jdfem_format format,
                                               uint32_t n, const char* path,
                                               const char* metadata_path);
/* Pathwise solve: n x n raster of the solution, optional mesh text and
 * metadata (NULL to skip). */
JDFEM_API jdfem_status jdfem_write_solution(const jdfem_config* config,
                                            const jdfem_sample_spec* spec, jdfem_format format,
                                            uint32_t n, const char* path, const char* mesh_path,
                                            const char* metadata_path);

/* Experiments */
typedef void (*jdfem_progress_fn)(const char* line, void* user);

JDFEM_API jdfem_status jdfem_run_experiment(const jdfem_config* config, uint32_t workers,
                                            jdfem_progress_fn progress, void* user,
                                            jdfem_report** out);
JDFEM_API jdfem_status jdfem_report_from_json(const char* text, jdfem_report** out);
JDFEM_API jdfem_status jdfem_report_json(const jdfem_report* report, jdfem_string** out);
JDFEM_API size_t jdfem_report_arm_count(const jdfem_report* report);
/* "adapted" or "standard"; NULL for an out-of-range arm. */
JDFEM_API const char* jdfem_report_arm_name(const jdfem_report* report, size_t arm);
JDFEM_API jdfem_status jdfem_report_level_csv(const jdfem_report* report, size_t arm,
                                              jdfem_string** out);
/* Fitted slope against h; JDFEM_ERR_NUMERICAL when the arm has no rate. */
JDFEM_API jdfem_status jdfem_report_rate(const jdfem_report* report, size_t arm, double* slope_h,
                                         double* slope_dofs);
/* Number of flags raised for the report (all arms). */
JDFEM_API size_t jdfem_report_flag_count(const jdfem_report* report);
JDFEM_API jdfem_status jdfem_report_render(const jdfem_report* report, jdfem_plot_kind kind,
                                           jdfem_string** out);
JDFEM_API void jdfem_report_free(jdfem_report* report);

/* Scalar helpers */
JDFEM_API jdfem_status jdfem_matern32(double variance, double correlation_length, double distance,
                                      double* out);
/* family 0: Poisson(p1); family 1: Gamma(p1 shape, p2 rate). P(l(horizon) > threshold). */
JDFEM_API jdfem_status jdfem_tail_probability(int family, double p1, double p2, double threshold,
                                              double horizon, double* out);
JDFEM_API jdfem_status jdfem_equilibrate(double h, double kappa, double gamma, double rc,
                                         double* eps_w, double* eps_l);

#ifdef __cplusplus
}
#endif

#endif
