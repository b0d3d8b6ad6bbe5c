// Command-line front end. Links only the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "percolab/percolab.h"

namespace {

using Json = nlohmann::ordered_json;

struct Failure {
  percolab_status status;
  std::string message;
};

void check(percolab_status s) {
  if (s != PERCOLAB_OK) throw Failure{s, percolab_last_error()};
}

void usage_failure(const std::string& message) { throw Failure{PERCOLAB_ERR_USAGE, message}; }

using GraphPtr = std::unique_ptr<percolab_graph, decltype(&percolab_graph_free)>;

struct GraphArgs {
  std::string graph;
  std::uint32_t side = 0;
  std::uint32_t dim = 0;
  std::uint32_t n = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--graph", graph, "torus | hamming | complete | file:PATH")->required();
    cmd->add_option("--side", side, "torus side length");
    cmd->add_option("--dim", dim, "torus or hamming dimension");
    cmd->add_option("--n", n, "vertex count of the complete graph");
  }

  GraphPtr build() const {
    percolab_graph* g = nullptr;
    if (graph == "torus") {
      if (!side || !dim) usage_failure("torus needs --side and --dim");
      check(percolab_graph_torus(side, dim, &g));
    } else if (graph == "hamming") {
      if (!dim) usage_failure("hamming needs --dim");
      check(percolab_graph_hamming(dim, &g));
    } else if (graph == "complete") {
      if (!n && !side) usage_failure("complete needs --n");
      check(percolab_graph_complete(n ? n : side, &g));
    } else if (graph.rfind("file:", 0) == 0) {
      check(percolab_graph_load(graph.substr(5).c_str(), &g));
    } else {
      usage_failure("unknown graph \"" + graph + "\"");
    }
    return GraphPtr(g, &percolab_graph_free);
  }
};

struct SamplingArgs {
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::optional<std::uint32_t> origin;
  bool force = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--replicas", replicas, "Monte Carlo replicas")->capture_default_str();
    cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    cmd->add_option("--workers", workers, "threads; 0 uses every core");
    cmd->add_option("--origin", origin, "origin vertex (needed for irregular graphs)");
    cmd->add_flag("--force", force, "sample an irregular graph from vertex 0");
  }

  percolab_sampling get() const {
    percolab_sampling s;
    percolab_sampling_defaults(&s);
    s.replicas = replicas;
    s.master_seed = seed;
    s.workers = workers;
    s.has_origin = origin.has_value();
    s.origin = origin.value_or(0);
    s.force = force;
    return s;
  }
};

// --p or --lambda; with --lambda the critical point is solved first.
struct PointArgs {
  std::optional<double> p;
  std::optional<double> lambda;
  double tolerance = 0.0;
  std::uint64_t probe_replicas = 1000;
  unsigned retry_cap = 4;

  void add_to(CLI::App* cmd) {
    auto* po = cmd->add_option("--p", p, "edge probability");
    auto* lo = cmd->add_option("--lambda", lambda, "solve chi(p) = lambda n^(1/3) and use that p");
    po->excludes(lo);
    cmd->add_option("--tolerance", tolerance, "solver tolerance; default 0.02/(d n^(1/3))");
    cmd->add_option("--probe-replicas", probe_replicas, "solver replicas per probe")->capture_default_str();
    cmd->add_option("--retry-cap", retry_cap, "solver budget doublings")->capture_default_str();
  }

  // Returns p and, when solved, the solver report.
  std::pair<double, std::optional<Json>> resolve(const percolab_graph* g, const SamplingArgs& s) const {
    if (p) return {*p, std::nullopt};
    if (!lambda) usage_failure("give --p or --lambda");
    percolab_solve_options o;
    percolab_solve_defaults(&o);
    const double window = 1.0 / (percolab_graph_degree(g) * std::cbrt(double(percolab_graph_vertex_count(g))));
    o.tolerance = tolerance > 0 ? tolerance : 0.02 * window;
    o.replicas_per_probe = probe_replicas;
    o.retry_cap = retry_cap;
    o.master_seed = s.seed ^ 0x7063ULL;
    o.workers = s.workers;
    percolab_critical_point cp;
    check(percolab_solve_pc(g, *lambda, &o, &cp));
    Json j;
    j["p_c_hat"] = cp.p_c_hat;
    j["lambda"] = cp.lambda;
    j["target"] = cp.target;
    j["bracket"] = {cp.bracket_lo, cp.bracket_hi};
    j["chi_at_p_c_hat"] = cp.chi_at_p_c_hat.mean;
    j["chi_ci99"] = {cp.chi_at_p_c_hat.ci99_lo, cp.chi_at_p_c_hat.ci99_hi};
    j["probes"] = cp.probes;
    j["samples_per_probe"] = cp.samples_per_probe;
    j["indistinguishable"] = cp.indistinguishable != 0;
    j["self_consistent"] = cp.self_consistent != 0;
    return {cp.p_c_hat, j};
  }
};

Json estimate_json(const percolab_estimate& e) {
  Json j;
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  j["samples"] = e.samples;
  j["ci99"] = {e.ci99_lo, e.ci99_hi};
  j["censored"] = e.censored;
  return j;
}

// One JSON object per line, to stdout and optionally appended to a file.
class Emitter {
 public:
  explicit Emitter(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::app);
    if (!file_) throw Failure{PERCOLAB_ERR_IO, "cannot open " + path};
  }
  void operator()(const Json& j) {
    const auto line = j.dump();
    std::cout << line << '\n';
    if (file_.is_open()) {
      file_ << line << '\n';
      if (!file_) throw Failure{PERCOLAB_ERR_IO, "write failed"};
    }
  }

 private:
  std::ofstream file_;
};

Json base_json(const percolab_graph* g, const std::string& stat, double p) {
  Json j;
  j["graph"] = percolab_graph_describe(g);
  j["n"] = percolab_graph_vertex_count(g);
  j["d"] = percolab_graph_degree(g);
  j["statistic"] = stat;
  j["p"] = p;
  return j;
}

std::vector<std::uint32_t> default_radii(const percolab_graph* g) {
  std::vector<std::uint32_t> out;
  const double limit = std::cbrt(double(percolab_graph_vertex_count(g)));
  for (std::uint32_t r = 1; r <= limit; r *= 2) out.push_back(r);
  if (out.empty()) out.push_back(1);
  return out;
}

std::pair<std::uint32_t, std::uint32_t> parse_pair(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) usage_failure("pairs are written x:y, got \"" + s + "\"");
  try {
    return {static_cast<std::uint32_t>(std::stoul(s.substr(0, colon))),
            static_cast<std::uint32_t>(std::stoul(s.substr(colon + 1)))};
  } catch (const std::exception&) {
    usage_failure("bad pair \"" + s + "\"");
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bond percolation on high-dimensional tori, Hamming cubes and complete graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", percolab_version());

  GraphArgs graph;
  SamplingArgs sampling;
  PointArgs point;
  std::string out_path;

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Monte Carlo estimate of one statistic");
  std::string stat;
  std::vector<std::uint32_t> radii;
  std::vector<std::uint64_t> ks;
  std::uint32_t r_max = 0;
  std::vector<std::string> pairs;
  graph.add_to(estimate);
  sampling.add_to(estimate);
  point.add_to(estimate);
  estimate->add_option("--stat", stat, "chi | pc | c1 | ball | onearm | tail | triangle")
      ->required()
      ->check(CLI::IsMember({"chi", "pc", "c1", "ball", "onearm", "tail", "triangle"}));
  estimate->add_option("--r", radii, "radii for onearm");
  estimate->add_option("--k", ks, "thresholds for tail");
  estimate->add_option("--r-max", r_max, "largest ball radius; default n^(1/3)");
  estimate->add_option("--pair", pairs, "x:y vertex pairs for triangle");
  estimate->add_option("--out", out_path, "also append the JSON line here");

  // geometry
  auto* geometry = app.add_subcommand("geometry", "diameter or mixing time of the largest cluster");
  std::uint32_t size_limit = 0;
  graph.add_to(geometry);
  sampling.add_to(geometry);
  point.add_to(geometry);
  geometry->add_option("--stat", stat, "diam | tmix")->required()->check(CLI::IsMember({"diam", "tmix"}));
  geometry->add_option("--size-limit", size_limit, "largest cluster for exact TV (default 2000)");
  geometry->add_option("--out", out_path, "also append the JSON line here");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run an experiment configuration");
  std::string config_path;
  bool no_resume = false;
  unsigned sweep_workers = 0;
  sweep->add_option("--config", config_path, "key = value configuration file")->required();
  sweep->add_option("--out", out_path, "override the configured output path");
  sweep->add_option("--workers", sweep_workers, "threads; 0 uses every core");
  sweep->add_flag("--no-resume", no_resume, "recompute cells already in the output");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact value by enumerating every configuration");
  std::string quantity;
  percolab_oracle_args oargs{0, 0, 0, 0};
  std::optional<double> oracle_p;
  std::optional<double> oracle_lambda;
  graph.add_to(oracle);
  auto* op = oracle->add_option("--p", oracle_p, "edge probability");
  oracle->add_option("--lambda", oracle_lambda, "exact critical point for this lambda instead")->excludes(op);
  oracle->add_option("--quantity", quantity,
                     "tau | chi | nabla | ball_mean | one_arm | c1_mean | c1_distribution | tail");
  oracle->add_option("--x", oargs.x, "first vertex");
  oracle->add_option("--y", oargs.y, "second vertex");
  oracle->add_option("--r", oargs.r, "radius");
  oracle->add_option("--k", oargs.k, "size threshold");

  // export
  auto* exporter = app.add_subcommand("export", "flatten JSON-lines records to CSV");
  std::string in_path;
  std::string csv_path;
  exporter->add_option("--in", in_path, "records file")->required();
  exporter->add_option("--csv", csv_path, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : PERCOLAB_ERR_USAGE;
  }

  try {
    if (estimate->parsed()) {
      const auto g = graph.build();
      const auto s = sampling.get();
      if (stat == "pc" && !point.lambda) usage_failure("--stat pc needs --lambda");
      const auto [p, solved] = point.resolve(g.get(), sampling);
      Emitter emit(out_path);
      Json j = base_json(g.get(), stat, p);
      if (solved) j["critical_point"] = *solved;
      if (stat == "pc") {
        emit(j);
      } else if (stat == "chi") {
        percolab_estimate e;
        check(percolab_estimate_chi(g.get(), p, &s, &e));
        j["estimate"] = estimate_json(e);
        emit(j);
      } else if (stat == "c1") {
        percolab_estimate e;
        double median = 0;
        check(percolab_estimate_c1(g.get(), p, &s, &e, &median));
        j["estimate"] = estimate_json(e);
        j["median"] = median;
        emit(j);
      } else if (stat == "ball") {
        const std::uint32_t rm =
            r_max ? r_max : std::max(1u, static_cast<std::uint32_t>(std::cbrt(double(percolab_graph_vertex_count(g.get())))));
        std::vector<percolab_estimate> v(rm + 1);
        check(percolab_estimate_ball(g.get(), p, rm, &s, v.data()));
        for (std::uint32_t r = 0; r <= rm; ++r) {
          j["index"] = r;
          j["estimate"] = estimate_json(v[r]);
          emit(j);
        }
      } else if (stat == "onearm") {
        const auto rs = radii.empty() ? default_radii(g.get()) : radii;
        std::vector<percolab_estimate> v(rs.size());
        check(percolab_estimate_one_arm(g.get(), p, rs.data(), rs.size(), &s, v.data()));
        for (std::size_t i = 0; i < rs.size(); ++i) {
          j["index"] = rs[i];
          j["estimate"] = estimate_json(v[i]);
          emit(j);
        }
      } else if (stat == "tail") {
        auto k = ks;
        if (k.empty())
          for (std::uint64_t x = 1; x <= percolab_graph_vertex_count(g.get()); x *= 2) k.push_back(x);
        std::vector<percolab_estimate> v(k.size());
        check(percolab_estimate_tail(g.get(), p, k.data(), k.size(), &s, v.data()));
        for (std::size_t i = 0; i < k.size(); ++i) {
          j["index"] = k[i];
          j["estimate"] = estimate_json(v[i]);
          emit(j);
        }
      } else {  // triangle
        std::vector<std::uint32_t> xs, ys;
        for (const auto& text : pairs.empty() ? std::vector<std::string>{"0:0", "0:1"} : pairs) {
          const auto [x, y] = parse_pair(text);
          xs.push_back(x);
          ys.push_back(y);
        }
        std::vector<percolab_estimate> v(xs.size());
        check(percolab_estimate_triangle(g.get(), p, xs.data(), ys.data(), xs.size(), &s, v.data()));
        for (std::size_t i = 0; i < xs.size(); ++i) {
          j["x"] = xs[i];
          j["y"] = ys[i];
          j["estimate"] = estimate_json(v[i]);
          emit(j);
        }
      }
    } else if (geometry->parsed()) {
      const auto g = graph.build();
      const auto s = sampling.get();
      const auto [p, solved] = point.resolve(g.get(), sampling);
      percolab_geometry_summary sum;
      check(percolab_estimate_geometry(g.get(), p, stat == "diam" ? PERCOLAB_DIAMETER : PERCOLAB_MIXING_TIME,
                                       size_limit, &s, &sum));
      Json j = base_json(g.get(), stat, p);
      if (solved) j["critical_point"] = *solved;
      j["estimate"] = estimate_json(sum.estimate);
      j["median"] = sum.median;
      if (stat == "diam") {
        j["method"] = sum.approximate_count ? "mixed" : "exact";
        j["lower_bound_count"] = sum.approximate_count;
      } else {
        j["method"] = "exact_tv";
        j["start_policy"] = "all_starts";
        j["proxy_count"] = sum.approximate_count;
        if (sum.approximate_count) j["proxy_note"] = "proxy, not TV";
      }
      Emitter emit(out_path);
      emit(j);
    } else if (sweep->parsed()) {
      percolab_experiment* raw = nullptr;
      check(percolab_experiment_load(config_path.c_str(), &raw));
      const std::unique_ptr<percolab_experiment, decltype(&percolab_experiment_free)> e(raw,
                                                                                         &percolab_experiment_free);
      if (!out_path.empty()) check(percolab_experiment_set_output(e.get(), out_path.c_str()));
      if (sweep_workers) check(percolab_experiment_set_workers(e.get(), sweep_workers));
      std::size_t count = 0;
      check(percolab_experiment_run(e.get(), no_resume ? 0 : 1, &count));
      std::cerr << "fingerprint " << percolab_experiment_fingerprint(e.get()) << ": " << count << " records\n";
    } else if (oracle->parsed()) {
      const auto g = graph.build();
      Json j;
      j["graph"] = percolab_graph_describe(g.get());
      if (oracle_lambda) {
        double pc = 0;
        check(percolab_oracle_pc(g.get(), *oracle_lambda, &pc));
        j["lambda"] = *oracle_lambda;
        j["p_c"] = pc;
      } else {
        if (!oracle_p) usage_failure("give --p or --lambda");
        if (quantity.empty()) usage_failure("--quantity is required with --p");
        double value = 0;
        std::size_t len = 0;
        std::vector<double> dist(percolab_graph_vertex_count(g.get()) + 1);
        check(percolab_oracle_exact(g.get(), *oracle_p, quantity.c_str(), &oargs, &value, dist.data(), dist.size(),
                                    &len));
        j["p"] = *oracle_p;
        j["quantity"] = quantity;
        j["value"] = value;
        if (len) j["distribution"] = std::vector<double>(dist.begin(), dist.begin() + static_cast<long>(len));
      }
      std::cout << j.dump() << '\n';
    } else if (exporter->parsed()) {
      check(percolab_export_csv(in_path.c_str(), csv_path.c_str()));
    }
  } catch (const Failure& f) {
    std::cerr << "percolab: " << f.message << '\n';
    return f.status == PERCOLAB_ERR_INTERNAL ? 1 : static_cast<int>(f.status);
  }
  return 0;
}
