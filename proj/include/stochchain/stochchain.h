#ifndef STOCHCHAIN_STOCHCHAIN_H
#define STOCHCHAIN_STOCHCHAIN_H

#include <stddef.h>
#include <stdint.h>

#if defined(STOCHCHAIN_BUILDING)
#define SCN_API __attribute__((visibility("default")))
#else
#define SCN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum scn_status {
  SCN_OK = 0,
  SCN_ERR_USAGE = 1,
  SCN_ERR_PARSE = 2,
  SCN_ERR_VALIDATION = 3,
  SCN_ERR_DIMENSION = 4,
  SCN_ERR_CERTIFICATE = 5
} scn_status;

typedef enum scn_flow_policy {
  SCN_FLOW_DECLARED_FIRST = 0,
  SCN_FLOW_NUMERIC_ONLY = 1,
  SCN_FLOW_STRUCTURAL = 2
} scn_flow_policy;

typedef struct scn_chain scn_chain;

typedef struct scn_config {
  const char* command;    /* echoed in reports; may be NULL */
  const char* chain_file; /* echoed in reports; may be NULL */
  size_t t0;
  size_t horizon;
  uint64_t seed;
  double validate_tol;
  double cluster_tol;
  double divergence_epsilon;
  double positivity_epsilon;
  double slack_tol;
  scn_flow_policy flow_policy;
  const char* lyapunov; /* "square", "absolute" or "power:P"; NULL means square */
  const double* x0;     /* NULL means 0, 1, ..., m-1 */
  size_t x0_len;
  const size_t* subset;
  size_t subset_len;
  size_t n_paths;
  int csv;               /* nonzero: also produce the CSV table where the command has one */
  int include_timestamp; /* nonzero: add a "timestamp" field to the report */
} scn_config;

SCN_API scn_config scn_config_default(void);

SCN_API const char* scn_version(void);
/* Message of the last failing call on this thread; never NULL. */
SCN_API const char* scn_last_error(void);

/* Parses and validates a chain spec; on failure *out is set to NULL. */
SCN_API scn_status scn_chain_from_json(const char* text, double validate_tol, scn_chain** out);
SCN_API scn_status scn_chain_from_file(const char* path, double validate_tol, scn_chain** out);
/* dim 0 selects the fixture's default size. */
SCN_API scn_status scn_chain_fixture(const char* name, size_t dim, uint64_t seed, scn_chain** out);
SCN_API void scn_chain_free(scn_chain* chain);
SCN_API size_t scn_chain_dim(const scn_chain* chain);
/* Writes E[W(k)] row-major into out[dim*dim]. */
SCN_API scn_status scn_chain_expected_matrix(const scn_chain* chain, size_t k, double* out);
SCN_API scn_status scn_chain_to_json(const scn_chain* chain, char** out);

/* Report strings are allocated by the library; release with scn_string_free.
   csv_out may be NULL. The returned status is the report's exit code. */
SCN_API scn_status scn_run_validate(const char* spec_text, const scn_config* cfg, char** report_out);
SCN_API scn_status scn_run_analyze(const scn_chain* chain, const scn_config* cfg, char** report_out);
SCN_API scn_status scn_run_ergodicity(const scn_chain* chain, const scn_config* cfg, char** report_out,
                                      char** csv_out);
SCN_API scn_status scn_run_simulate(const scn_chain* chain, const scn_config* cfg, char** report_out,
                                    char** csv_out);
SCN_API scn_status scn_run_decouple(const scn_chain* chain, const scn_config* cfg, char** report_out,
                                    char** csv_out);

SCN_API void scn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
