/* Copyright (C) 2026 The irscale Authors
 * SPDX-License-Identifier: Apache-2.0
 */

/* C interface to the irscale inference-time search engine.
 *
 * All functions return an irs_status. On failure a description is available
 * from irs_last_error() on the calling thread until the next call into the
 * library from that thread. Strings returned through char** parameters are
 * owned by the caller and must be released with irs_string_free().
 */

#ifndef IRSCALE_IRSCALE_H
#define IRSCALE_IRSCALE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define IRS_API __declspec(dllexport)
#elif defined(__GNUC__)
#  define IRS_API __attribute__((visibility("default")))
#else
#  define IRS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum irs_status {
  IRS_OK = 0,
  IRS_ERR_INVALID_ARGUMENT = 1,
  IRS_ERR_CONFIG = 2,
  IRS_ERR_BUDGET = 3,
  IRS_ERR_NUMERICAL = 4,
  IRS_ERR_PROTOCOL = 5,
  IRS_ERR_CONNECTION = 6,
  IRS_ERR_BACKEND = 7,
  IRS_ERR_IO = 8,
  IRS_ERR_INTERNAL = 9
} irs_status;

typedef struct irs_experiment irs_experiment;
typedef struct irs_server irs_server;

/* Command-line style overrides applied on top of an experiment document.
 * Zero / NULL fields leave the document's value in place. */
typedef struct irs_overrides {
  const char *output_dir;
  int workers;
  int has_seed;
  uint64_t seed;
  const char *backend_addr; /* "HOST:PORT" or "unix:PATH" */
} irs_overrides;

IRS_API const char *irs_version(void);
IRS_API int irs_protocol_version(void);
IRS_API const char *irs_last_error(void);
IRS_API const char *irs_status_name(irs_status status);
IRS_API void irs_string_free(char *str);

/* (1 - alpha) * ir_similarity - alpha * gray_similarity, unscaled. */
IRS_API irs_status irs_ir_score(double ir_similarity, double gray_similarity, double alpha, double *out);

/* Parses and validates an experiment document without contacting any backend. */
IRS_API irs_status irs_config_validate(const char *config_json, const irs_overrides *overrides);

/* Builds the experiment; connects to the remote backend if one is configured. */
IRS_API irs_status irs_experiment_create(const char *config_json, const irs_overrides *overrides,
                                         irs_experiment **out);
IRS_API void irs_experiment_destroy(irs_experiment *experiment);

/* Runs every configured search for every trial. *out_dir receives the
 * experiment directory (manifest.json, runs/, table.csv). */
IRS_API irs_status irs_experiment_run(irs_experiment *experiment, char **out_dir);

/* Random-search sweep over N; *out_csv receives the path of sweep.csv. */
IRS_API irs_status irs_experiment_sweep(irs_experiment *experiment, const uint32_t *n_values, size_t count,
                                        char **out_csv);

/* One search of the document (by index) at the given base seed, as a JSON SearchReport. */
IRS_API irs_status irs_experiment_search(irs_experiment *experiment, size_t search_index, uint64_t base_seed,
                                         char **report_json);

/* Toy backend server over protocol v1, configured from an experiment
 * document's toy backend and toy verifier sections. */
IRS_API irs_status irs_server_create(const char *config_json, const char *listen_addr, irs_server **out);
IRS_API irs_status irs_server_start(irs_server *server);
IRS_API irs_status irs_server_port(const irs_server *server, int *port);
IRS_API void irs_server_stop(irs_server *server);
IRS_API void irs_server_destroy(irs_server *server);

/* Fréchet distance between Gaussians fitted to two row-major feature matrices. */
IRS_API irs_status irs_frechet_distance(const double *features_a, size_t rows_a, const double *features_b,
                                        size_t rows_b, size_t dim, double *out);
IRS_API irs_status irs_fid_files(const char *path_a, const char *path_b, double *out);

#ifdef __cplusplus
}
#endif

#endif /* IRSCALE_IRSCALE_H */
