/* C interface to the hybrid entanglement Bell-test library.
 *
 * Every call returns an hb_status; on failure hb_last_error() describes the
 * problem (thread-local, valid until the next call on the same thread).
 * Objects are opaque handles released with their *_destroy function.
 */
#ifndef HYBRID_BELL_H
#define HYBRID_BELL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(HB_BUILDING_LIBRARY)
#    define HB_API __declspec(dllexport)
#  else
#    define HB_API __declspec(dllimport)
#  endif
#else
#  define HB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hb_status {
  HB_OK = 0,
  HB_INVALID_ARGUMENT = 1,
  HB_CONFIG_ERROR = 2,
  HB_NUMERICAL_ERROR = 3,
  HB_TRUNCATION_TOO_SMALL = 4,
  HB_NO_BRACKET = 5,
  HB_REGIME_MISMATCH = 6,
  HB_IO_ERROR = 7,
  HB_INTERNAL_ERROR = 8
} hb_status;

typedef enum hb_scheme { HB_ONOFF = 0, HB_PARITY = 1 } hb_scheme;

typedef enum hb_regime {
  HB_REGIME_ONOFF_REAL = 0,
  HB_REGIME_PARITY_I = 1,
  HB_REGIME_PARITY_II = 2,
  HB_REGIME_GENERAL = 3,
  HB_REGIME_DEGENERATE = 4
} hb_regime;

typedef enum hb_threshold_mode {
  HB_SYMMETRIC_ETA = 0,
  HB_ETA_B_ONLY = 1,
  HB_FIXED_ETA_A = 2,
  HB_FIXED_ETA_B = 3
} hb_threshold_mode;

/* xi = -(theta/2) e^{-i phi} */
typedef struct hb_qubit_setting {
  double theta;
  double phi;
} hb_qubit_setting;

/* beta = magnitude e^{i phase} */
typedef struct hb_displacement {
  double magnitude;
  double phase;
} hb_displacement;

typedef struct hb_efficiency {
  double eta_A;
  double eta_B;
} hb_efficiency;

typedef struct hb_settings {
  hb_qubit_setting xi1, xi2;
  hb_displacement beta1, beta2;
  hb_scheme scheme;
} hb_settings;

typedef struct hb_optimum {
  double value;
  hb_settings settings;
  hb_regime regime;
  double parameters[4];
  int has_residual;
  double residual_norm;
  double alpha; /* alpha used; alpha_opt for hb_maximize_over_alpha */
} hb_optimum;

HB_API const char* hb_last_error(void);
HB_API const char* hb_version(void);

/* ---- closed forms ---------------------------------------------------- */

HB_API hb_status hb_expectation(hb_scheme scheme, double alpha, hb_qubit_setting xi,
                                hb_displacement beta, hb_efficiency effs, double* out);
HB_API hb_status hb_expectation_ideal(hb_scheme scheme, double alpha, hb_qubit_setting xi,
                                      hb_displacement beta, double* out);
HB_API hb_status hb_bell_value(double alpha, const hb_settings* settings, hb_efficiency effs,
                               double* out);

/* ---- optimization ---------------------------------------------------- */

HB_API hb_status hb_solve_beta(hb_scheme scheme, double alpha, double eta_B, double* out);
HB_API hb_status hb_bell_max_eta_b(hb_scheme scheme, double alpha, double eta_B, double* out);
HB_API hb_status hb_maximize_bell(hb_scheme scheme, double alpha, hb_efficiency effs,
                                  hb_optimum* out);
HB_API hb_status hb_maximize_over_alpha(hb_scheme scheme, hb_efficiency effs, double alpha_lo,
                                        double alpha_hi, hb_optimum* out);
HB_API hb_status hb_stationarity_residuals(hb_scheme scheme, hb_regime regime,
                                           const double params[4], double alpha,
                                           hb_efficiency effs, double residuals[4]);
HB_API hb_status hb_find_threshold(hb_scheme scheme, hb_threshold_mode mode, double fixed_value,
                                   double tol, double* eta_out);
HB_API hb_status hb_find_crossover(double lo, double hi, double tol, double* eta_out);

/* ---- truncated Fock-space oracle ------------------------------------- */

typedef struct hb_oracle hb_oracle;

/* dim <= 0 picks the truncation automatically per evaluation. */
HB_API hb_status hb_oracle_create(int dim, double tail_tol, hb_oracle** out);
HB_API void hb_oracle_destroy(hb_oracle* oracle);
HB_API hb_status hb_oracle_expectation(const hb_oracle* oracle, hb_scheme scheme, double alpha,
                                       hb_qubit_setting xi, hb_displacement beta,
                                       hb_efficiency effs, double* out);
HB_API hb_status hb_oracle_bell(const hb_oracle* oracle, double alpha, const hb_settings* settings,
                                hb_efficiency effs, double* out);

/* ---- sweep jobs ------------------------------------------------------ */

typedef struct hb_job hb_job;

HB_API hb_status hb_job_from_command(const char* command, hb_job** out);
HB_API hb_status hb_job_from_config_text(const char* text, hb_job** out);
HB_API hb_status hb_job_from_config_file(const char* path, hb_job** out);
HB_API void hb_job_destroy(hb_job* job);
/* Same keys as the config file. */
HB_API hb_status hb_job_set(hb_job* job, const char* key, const char* value);
HB_API hb_status hb_job_run(hb_job* job);
HB_API hb_status hb_job_row_count(const hb_job* job, size_t* out);
/* 0 on success, 3 when the run's own check failed (verify). */
HB_API hb_status hb_job_exit_code(const hb_job* job, int* out);
HB_API const char* hb_job_message(const hb_job* job);
/* format: "csv" or "json"; NULL uses the configured format.
 * The string is released with hb_free_string. */
HB_API hb_status hb_job_render(const hb_job* job, const char* format, char** out);
HB_API hb_status hb_job_write(const hb_job* job, const char* path, const char* format);
/* Command the job runs, e.g. "bell-max" (figures resolve to their scan). */
HB_API const char* hb_job_command(const hb_job* job);
/* Configured output path, or "" when none. */
HB_API const char* hb_job_output_path(const hb_job* job);
HB_API void hb_free_string(char* s);

#ifdef __cplusplus
}
#endif

#endif /* HYBRID_BELL_H */
