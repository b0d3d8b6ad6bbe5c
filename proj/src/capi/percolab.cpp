#include "percolab/percolab.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "geometry.hpp"
#include "lab.hpp"
#include "oracle.hpp"
#include "parallel.hpp"

using namespace percolab;

struct percolab_graph {
  graphs::Graph graph;
  std::string description;
};

struct percolab_experiment {
  lab::ExperimentConfig config;
  std::string fingerprint;
  std::vector<std::string> lines;
};

namespace {

thread_local std::string last_error;

// Runs f and maps exceptions onto status codes.
template <class F>
percolab_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return PERCOLAB_OK;
  } catch (const UsageError& e) {
    last_error = e.what();
    return PERCOLAB_ERR_USAGE;
  } catch (const InfeasibleError& e) {
    last_error = e.what();
    return PERCOLAB_ERR_INFEASIBLE;
  } catch (const IoError& e) {
    last_error = e.what();
    return PERCOLAB_ERR_IO;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PERCOLAB_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return PERCOLAB_ERR_INTERNAL;
  }
}

template <class T>
T& need(T* p, const char* what) {
  if (!p) throw UsageError(std::string(what) + " is NULL");
  return *p;
}

const char* need_text(const char* s, const char* what) {
  if (!s) throw UsageError(std::string(what) + " is NULL");
  return s;
}

percolab_estimate to_c(const stats::Estimate& e) {
  return {e.mean, e.std_error, e.samples, e.ci99.lo, e.ci99.hi, e.censored};
}

estimators::SamplingOptions from_c(const percolab_sampling* c) {
  estimators::SamplingOptions o;
  if (!c) return o;
  o.replicas = c->replicas;
  o.master_seed = c->master_seed;
  o.workers = c->workers;
  if (c->has_origin) o.origin = c->origin;
  o.force = c->force != 0;
  return o;
}

percolab_status make_graph(percolab_graph** out, auto build) {
  return guarded([&] {
    need(out, "out");
    auto g = build();
    *out = new percolab_graph{g, g.describe()};
  });
}

}  // namespace

extern "C" {

const char* percolab_version(void) { return "1.0.0"; }
const char* percolab_last_error(void) { return last_error.c_str(); }

percolab_status percolab_graph_torus(uint32_t side, uint32_t dim, percolab_graph** out) {
  return make_graph(out, [&] { return graphs::Graph::torus(side, dim); });
}
percolab_status percolab_graph_hamming(uint32_t dim, percolab_graph** out) {
  return make_graph(out, [&] { return graphs::Graph::hamming(dim); });
}
percolab_status percolab_graph_complete(uint32_t n, percolab_graph** out) {
  return make_graph(out, [&] { return graphs::Graph::complete(n); });
}
percolab_status percolab_graph_load(const char* path, percolab_graph** out) {
  return make_graph(out, [&] { return graphs::Graph::load(need_text(path, "path")); });
}
void percolab_graph_free(percolab_graph* g) { delete g; }

uint32_t percolab_graph_vertex_count(const percolab_graph* g) { return g ? g->graph.vertex_count() : 0; }
uint32_t percolab_graph_degree(const percolab_graph* g) { return g ? g->graph.degree() : 0; }
uint64_t percolab_graph_edge_count(const percolab_graph* g) { return g ? g->graph.edge_count() : 0; }
int percolab_graph_is_regular(const percolab_graph* g) { return g && g->graph.is_regular(); }
const char* percolab_graph_describe(const percolab_graph* g) { return g ? g->description.c_str() : ""; }

void percolab_sampling_defaults(percolab_sampling* opts) {
  if (!opts) return;
  const estimators::SamplingOptions d;
  *opts = {d.replicas, d.master_seed, d.workers, 0, 0, 0};
}

percolab_status percolab_estimate_chi(const percolab_graph* g, double p, const percolab_sampling* opts,
                                      percolab_estimate* out) {
  return guarded([&] { need(out, "out") = to_c(estimators::estimate_chi(need(g, "graph").graph, p, from_c(opts))); });
}

percolab_status percolab_estimate_ball(const percolab_graph* g, double p, uint32_t r_max,
                                       const percolab_sampling* opts, percolab_estimate* volume) {
  return guarded([&] {
    need(volume, "volume");
    const auto est = estimators::estimate_ball_growth(need(g, "graph").graph, p, r_max, from_c(opts));
    for (std::uint32_t r = 0; r <= r_max; ++r) volume[r] = to_c(est.volume[r]);
  });
}

percolab_status percolab_estimate_one_arm(const percolab_graph* g, double p, const uint32_t* radii, size_t count,
                                          const percolab_sampling* opts, percolab_estimate* out) {
  return guarded([&] {
    need(out, "out");
    need(radii, "radii");
    const std::vector<std::uint32_t> r(radii, radii + count);
    const auto est = estimators::estimate_one_arm(need(g, "graph").graph, p, r, from_c(opts));
    std::transform(est.begin(), est.end(), out, to_c);
  });
}

percolab_status percolab_estimate_tail(const percolab_graph* g, double p, const uint64_t* ks, size_t count,
                                       const percolab_sampling* opts, percolab_estimate* out) {
  return guarded([&] {
    need(out, "out");
    need(ks, "ks");
    const std::vector<std::uint64_t> k(ks, ks + count);
    const auto est = estimators::estimate_tail(need(g, "graph").graph, p, k, from_c(opts));
    std::transform(est.begin(), est.end(), out, to_c);
  });
}

percolab_status percolab_estimate_c1(const percolab_graph* g, double p, const percolab_sampling* opts,
                                     percolab_estimate* size, double* median) {
  return guarded([&] {
    const auto c1 = estimators::estimate_c1(need(g, "graph").graph, p, from_c(opts));
    need(size, "size") = to_c(c1.size);
    if (median) *median = c1.median;
  });
}

percolab_status percolab_estimate_triangle(const percolab_graph* g, double p, const uint32_t* xs, const uint32_t* ys,
                                           size_t count, const percolab_sampling* opts, percolab_estimate* out) {
  return guarded([&] {
    need(xs, "xs");
    need(ys, "ys");
    need(out, "out");
    std::vector<std::pair<Vertex, Vertex>> pairs;
    for (size_t i = 0; i < count; ++i) pairs.emplace_back(xs[i], ys[i]);
    const auto report = estimators::estimate_triangle(need(g, "graph").graph, p, pairs, from_c(opts));
    std::transform(report.nabla.begin(), report.nabla.end(), out, to_c);
  });
}

void percolab_solve_defaults(percolab_solve_options* opts) {
  if (!opts) return;
  const estimators::SolveOptions d;
  *opts = {d.tolerance, d.replicas_per_probe, d.retry_cap, d.master_seed, d.workers};
}

percolab_status percolab_solve_pc(const percolab_graph* g, double lambda, const percolab_solve_options* opts,
                                  percolab_critical_point* out) {
  return guarded([&] {
    estimators::SolveOptions o;
    if (opts) {
      o.tolerance = opts->tolerance;
      o.replicas_per_probe = opts->replicas_per_probe;
      o.retry_cap = opts->retry_cap;
      o.master_seed = opts->master_seed;
      o.workers = opts->workers;
    }
    const auto cp = estimators::solve_pc(need(g, "graph").graph, lambda, o);
    need(out, "out") = {cp.p_c_hat, cp.lambda, cp.target, cp.bracket.lo, cp.bracket.hi, to_c(cp.chi_at_p_c_hat),
                        cp.samples_per_probe, cp.probes, cp.indistinguishable, cp.self_consistent};
  });
}

percolab_status percolab_estimate_geometry(const percolab_graph* g, double p, percolab_geometry_stat stat,
                                           uint32_t mixing_size_limit, const percolab_sampling* opts,
                                           percolab_geometry_summary* out) {
  return guarded([&] {
    const auto& graph = need(g, "graph").graph;
    need(out, "out");
    require(stat == PERCOLAB_DIAMETER || stat == PERCOLAB_MIXING_TIME, "unknown geometry statistic");
    require(p >= 0 && p <= 1, "p must lie in [0, 1]");
    const auto o = from_c(opts);
    require(o.replicas >= 2, "geometry statistics need at least 2 replicas");
    geometry::C1GeometryRequest req;
    req.diameter = stat == PERCOLAB_DIAMETER;
    req.mixing = stat == PERCOLAB_MIXING_TIME;
    if (mixing_size_limit) req.mixing_options.size_limit = mixing_size_limit;
    std::vector<geometry::C1Geometry> samples(o.replicas);
    parallel_for(o.replicas, o.workers, [&](std::uint64_t i) {
      samples[i] = geometry::c1_geometry(graph, {o.master_seed, i}, p, req);
    });
    std::vector<double> used;
    std::uint64_t approximate = 0;
    for (const auto& s : samples) {
      if (req.diameter) {
        used.push_back(s.diameter->value);
        approximate += s.diameter->method != geometry::DiameterMethod::Exact;
      } else if (s.mixing->method == geometry::MixingMethod::ExactTv) {
        used.push_back(static_cast<double>(s.mixing->t_mix));
      } else {
        ++approximate;
      }
    }
    *out = {};
    if (used.empty()) throw InfeasibleError("every cluster exceeded the exact mixing-time limit");
    out->estimate = to_c(stats::estimate_from(used));
    out->median = stats::quantile(used, 0.5);
    out->exact_count = req.diameter ? used.size() - approximate : used.size();
    out->approximate_count = approximate;
  });
}

percolab_status percolab_oracle_exact(const percolab_graph* g, double p, const char* quantity,
                                      const percolab_oracle_args* args, double* value, double* dist,
                                      size_t dist_capacity, size_t* dist_len) {
  return guarded([&] {
    oracle::QueryArgs a;
    if (args) a = {args->x, args->y, args->r, args->k};
    const auto q = oracle::parse_quantity(need_text(quantity, "quantity"));
    const auto res = oracle::exact(need(g, "graph").graph, p, q, a);
    need(value, "value") = res.value;
    if (dist_len) *dist_len = res.distribution.size();
    if (dist) std::copy_n(res.distribution.begin(), std::min(dist_capacity, res.distribution.size()), dist);
  });
}

percolab_status percolab_oracle_pc(const percolab_graph* g, double lambda, double* p_c) {
  return guarded([&] { need(p_c, "p_c") = oracle::exact_pc(need(g, "graph").graph, lambda); });
}

percolab_status percolab_experiment_load(const char* path, percolab_experiment** out) {
  return guarded([&] {
    need(out, "out");
    auto c = lab::ExperimentConfig::load(need_text(path, "path"));
    *out = new percolab_experiment{c, c.fingerprint(), {}};
  });
}

percolab_status percolab_experiment_parse(const char* text, percolab_experiment** out) {
  return guarded([&] {
    need(out, "out");
    auto c = lab::ExperimentConfig::parse(need_text(text, "text"));
    *out = new percolab_experiment{c, c.fingerprint(), {}};
  });
}

void percolab_experiment_free(percolab_experiment* e) { delete e; }

percolab_status percolab_experiment_set_output(percolab_experiment* e, const char* path) {
  return guarded([&] { need(e, "experiment").config.output = need_text(path, "path"); });
}

percolab_status percolab_experiment_set_workers(percolab_experiment* e, unsigned workers) {
  return guarded([&] { need(e, "experiment").config.workers = workers; });
}

const char* percolab_experiment_fingerprint(const percolab_experiment* e) { return e ? e->fingerprint.c_str() : ""; }

percolab_status percolab_experiment_run(percolab_experiment* e, int resume, size_t* record_count) {
  return guarded([&] {
    auto& x = need(e, "experiment");
    const auto records = lab::run(x.config, {.resume = resume != 0, .on_cell = {}, .max_new_cells = {}});
    x.lines.clear();
    for (const auto& r : records) x.lines.push_back(r.line());
    if (record_count) *record_count = x.lines.size();
  });
}

const char* percolab_experiment_record(const percolab_experiment* e, size_t i) {
  return e && i < e->lines.size() ? e->lines[i].c_str() : nullptr;
}

percolab_status percolab_export_csv(const char* jsonl_path, const char* csv_path) {
  return guarded([&] {
    const auto records = lab::read_records(need_text(jsonl_path, "jsonl_path"));
    std::ofstream out(need_text(csv_path, "csv_path"));
    if (!out) throw IoError(std::string("cannot open ") + csv_path);
    lab::write_csv(records, out);
    if (!out) throw IoError(std::string("write failed on ") + csv_path);
  });
}

}  // extern "C"
