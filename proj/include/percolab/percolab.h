#ifndef PERCOLAB_PERCOLAB_H
#define PERCOLAB_PERCOLAB_H

/* Bond percolation on finite transitive graphs: exact small-graph oracle,
 * Monte Carlo estimators, critical-cluster geometry and experiment sweeps.
 *
 * Every fallible call returns a percolab_status. On failure the message is
 * available from percolab_last_error() on the same thread until the next call.
 * Handles are opaque; each *_free accepts NULL. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PERCOLAB_API __declspec(dllexport)
#else
#define PERCOLAB_API __attribute__((visibility("default")))
#endif

typedef enum percolab_status {
  PERCOLAB_OK = 0,
  PERCOLAB_ERR_USAGE = 2,      /* invalid argument or configuration */
  PERCOLAB_ERR_INFEASIBLE = 3, /* e.g. no critical point for this lambda */
  PERCOLAB_ERR_IO = 4,
  PERCOLAB_ERR_INTERNAL = 5
} percolab_status;

PERCOLAB_API const char* percolab_version(void);
PERCOLAB_API const char* percolab_last_error(void);

/* ---- graphs ------------------------------------------------------------ */

typedef struct percolab_graph percolab_graph;

PERCOLAB_API percolab_status percolab_graph_torus(uint32_t side, uint32_t dim, percolab_graph** out);
PERCOLAB_API percolab_status percolab_graph_hamming(uint32_t dim, percolab_graph** out);
PERCOLAB_API percolab_status percolab_graph_complete(uint32_t n, percolab_graph** out);
/* Edge-list file: first line "n m", then m lines "u v" with 0 <= u < v < n. */
PERCOLAB_API percolab_status percolab_graph_load(const char* path, percolab_graph** out);
PERCOLAB_API void percolab_graph_free(percolab_graph* g);

PERCOLAB_API uint32_t percolab_graph_vertex_count(const percolab_graph* g);
/* Common degree, or the maximum degree of an irregular graph. */
PERCOLAB_API uint32_t percolab_graph_degree(const percolab_graph* g);
PERCOLAB_API uint64_t percolab_graph_edge_count(const percolab_graph* g);
PERCOLAB_API int percolab_graph_is_regular(const percolab_graph* g);
/* Owned by the handle. */
PERCOLAB_API const char* percolab_graph_describe(const percolab_graph* g);

/* ---- Monte Carlo estimators -------------------------------------------- */

typedef struct percolab_estimate {
  double mean;
  double std_error;
  uint64_t samples;
  double ci99_lo;
  double ci99_hi;
  uint64_t censored;
} percolab_estimate;

typedef struct percolab_sampling {
  uint64_t replicas;
  uint64_t master_seed;
  unsigned workers; /* 0 = all cores */
  int has_origin;
  uint32_t origin;
  int force; /* sample irregular graphs from vertex 0 without an origin */
} percolab_sampling;

PERCOLAB_API void percolab_sampling_defaults(percolab_sampling* opts);

PERCOLAB_API percolab_status percolab_estimate_chi(const percolab_graph* g, double p, const percolab_sampling* opts,
                                                   percolab_estimate* out);
/* volume[r] = E|B(0, r)| for r = 0..r_max; the array holds r_max + 1 entries. */
PERCOLAB_API percolab_status percolab_estimate_ball(const percolab_graph* g, double p, uint32_t r_max,
                                                    const percolab_sampling* opts, percolab_estimate* volume);
PERCOLAB_API percolab_status percolab_estimate_one_arm(const percolab_graph* g, double p, const uint32_t* radii,
                                                       size_t count, const percolab_sampling* opts,
                                                       percolab_estimate* out);
PERCOLAB_API percolab_status percolab_estimate_tail(const percolab_graph* g, double p, const uint64_t* ks,
                                                    size_t count, const percolab_sampling* opts,
                                                    percolab_estimate* out);
/* |C1| estimate and its median. */
PERCOLAB_API percolab_status percolab_estimate_c1(const percolab_graph* g, double p, const percolab_sampling* opts,
                                                  percolab_estimate* size, double* median);
PERCOLAB_API percolab_status percolab_estimate_triangle(const percolab_graph* g, double p, const uint32_t* xs,
                                                        const uint32_t* ys, size_t count,
                                                        const percolab_sampling* opts, percolab_estimate* out);

typedef struct percolab_solve_options {
  double tolerance;
  uint64_t replicas_per_probe;
  unsigned retry_cap;
  uint64_t master_seed;
  unsigned workers;
} percolab_solve_options;

typedef struct percolab_critical_point {
  double p_c_hat;
  double lambda;
  double target; /* lambda * n^(1/3) */
  double bracket_lo;
  double bracket_hi;
  percolab_estimate chi_at_p_c_hat;
  uint64_t samples_per_probe;
  uint64_t probes;
  int indistinguishable;
  int self_consistent;
} percolab_critical_point;

PERCOLAB_API void percolab_solve_defaults(percolab_solve_options* opts);
PERCOLAB_API percolab_status percolab_solve_pc(const percolab_graph* g, double lambda,
                                               const percolab_solve_options* opts, percolab_critical_point* out);

/* ---- geometry of the largest cluster ----------------------------------- */

typedef enum percolab_geometry_stat { PERCOLAB_DIAMETER = 0, PERCOLAB_MIXING_TIME = 1 } percolab_geometry_stat;

typedef struct percolab_geometry_summary {
  percolab_estimate estimate; /* over replicas measured exactly */
  double median;
  uint64_t exact_count;
  /* Diameter: clusters above the exact limit (double-sweep lower bound, still
   * included). Mixing time: clusters above the size limit, measured by the
   * relaxation-time proxy and excluded from the estimate. */
  uint64_t approximate_count;
} percolab_geometry_summary;

/* Diameter or lazy-walk mixing time (worst start, TV threshold 1/4) of C1 over
 * replicas 0..opts->replicas-1. mixing_size_limit 0 selects the default 2000. */
PERCOLAB_API percolab_status percolab_estimate_geometry(const percolab_graph* g, double p,
                                                        percolab_geometry_stat stat, uint32_t mixing_size_limit,
                                                        const percolab_sampling* opts,
                                                        percolab_geometry_summary* out);

/* ---- exact oracle (at most 24 edges) ------------------------------------ */

typedef struct percolab_oracle_args {
  uint32_t x;
  uint32_t y;
  uint32_t r;
  uint64_t k;
} percolab_oracle_args;

/* quantity: tau, chi, nabla, ball_mean, one_arm, c1_mean, c1_distribution, tail.
 * For c1_distribution, *value is the mean and dist (if not NULL) receives
 * P(|C1| = s) for s = 0..min(n, dist_capacity - 1); *dist_len gets n + 1. */
PERCOLAB_API percolab_status percolab_oracle_exact(const percolab_graph* g, double p, const char* quantity,
                                                   const percolab_oracle_args* args, double* value, double* dist,
                                                   size_t dist_capacity, size_t* dist_len);
PERCOLAB_API percolab_status percolab_oracle_pc(const percolab_graph* g, double lambda, double* p_c);

/* ---- experiments --------------------------------------------------------- */

typedef struct percolab_experiment percolab_experiment;

PERCOLAB_API percolab_status percolab_experiment_load(const char* path, percolab_experiment** out);
PERCOLAB_API percolab_status percolab_experiment_parse(const char* text, percolab_experiment** out);
PERCOLAB_API void percolab_experiment_free(percolab_experiment* e);
PERCOLAB_API percolab_status percolab_experiment_set_output(percolab_experiment* e, const char* path);
PERCOLAB_API percolab_status percolab_experiment_set_workers(percolab_experiment* e, unsigned workers);
/* Owned by the handle. */
PERCOLAB_API const char* percolab_experiment_fingerprint(const percolab_experiment* e);
/* Runs (or resumes) the sweep. Records stay available on the handle. */
PERCOLAB_API percolab_status percolab_experiment_run(percolab_experiment* e, int resume, size_t* record_count);
/* JSON line of record i from the last run; owned by the handle. NULL if out of range. */
PERCOLAB_API const char* percolab_experiment_record(const percolab_experiment* e, size_t i);

PERCOLAB_API percolab_status percolab_export_csv(const char* jsonl_path, const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif
