#include "lab.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "estimators.hpp"
#include "geometry.hpp"
#include "parallel.hpp"

namespace percolab::lab {

namespace {

// Seed streams; c1, diam and tmix share one so they describe the same clusters.
enum Stream : std::uint64_t { kPcStream = 1, kChiStream, kTriangleStream, kBallStream, kOneArmStream, kTailStream,
                              kC1Stream };

std::uint64_t stream_of(Statistic s) {
  switch (s) {
    case Statistic::Pc: return kPcStream;
    case Statistic::Chi: return kChiStream;
    case Statistic::Triangle: return kTriangleStream;
    case Statistic::Ball: return kBallStream;
    case Statistic::OneArm: return kOneArmStream;
    case Statistic::Tail: return kTailStream;
    default: return kC1Stream;
  }
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw UsageError("bad value for " + key + ": \"" + text + "\"");
  return value;
}

template <class T>
std::vector<T> parse_numbers(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) out += format_double(values[i]);
    else out += std::to_string(values[i]);
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool has(const std::vector<Statistic>& stats, Statistic s) {
  return std::find(stats.begin(), stats.end(), s) != stats.end();
}

Json optional_json(const auto& v) { return v ? Json(*v) : Json(nullptr); }

double number_or_nan(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json interval_json(const stats::Interval& i) { return Json::array({i.lo, i.hi}); }

stats::Interval interval_from(const Json& j) { return {number_or_nan(j.at(0)), number_or_nan(j.at(1))}; }

std::vector<std::uint32_t> powers_of_two_up_to(double limit) {
  std::vector<std::uint32_t> out;
  for (std::uint64_t r = 1; static_cast<double>(r) <= limit; r *= 2) out.push_back(static_cast<std::uint32_t>(r));
  if (out.empty()) out.push_back(1);
  return out;
}

using Clock = std::chrono::steady_clock;

// Everything a cell needs besides its statistic.
struct CellContext {
  const ExperimentConfig& config;
  const graphs::Graph& graph;
  double p;
  std::uint64_t seed;
  std::uint64_t replicas;

  estimators::SamplingOptions sampling() const {
    estimators::SamplingOptions o;
    o.replicas = replicas;
    o.master_seed = seed;
    o.workers = config.workers;
    o.origin = config.origin;
    return o;
  }
};

ExperimentRecord estimate_record(const stats::Estimate& e, std::optional<std::int64_t> index = std::nullopt) {
  ExperimentRecord r;
  r.estimate = e;
  r.index = index;
  return r;
}

std::vector<std::pair<Vertex, Vertex>> triangle_pairs(const graphs::Graph& g, std::uint64_t seed, std::size_t count) {
  const std::uint64_t n = g.vertex_count();
  std::uint64_t counter = 0;
  const auto draw = [&] { return static_cast<Vertex>(detail::combine(seed, counter++) % n); };
  const Vertex x0 = draw();
  std::vector<std::pair<Vertex, Vertex>> pairs{{x0, x0}};
  if (n < 2) return pairs;
  while (pairs.size() < count + 1) {
    const Vertex x = draw();
    const Vertex y = draw();
    if (x != y) pairs.emplace_back(x, y);
  }
  return pairs;
}

std::vector<ExperimentRecord> compute_cell(Statistic stat, const CellContext& ctx) {
  const auto& g = ctx.graph;
  const double n = g.vertex_count();
  const double cbrt_n = std::cbrt(n);
  std::vector<ExperimentRecord> out;
  switch (stat) {
    case Statistic::Chi:
      out.push_back(estimate_record(estimators::estimate_chi(g, ctx.p, ctx.sampling())));
      break;
    case Statistic::Triangle: {
      const auto pairs = triangle_pairs(g, detail::combine(ctx.seed, 0x70616972), ctx.config.triangle_pairs);
      const auto report = estimators::estimate_triangle(g, ctx.p, pairs, ctx.sampling());
      for (std::size_t j = 0; j < report.pairs.size(); ++j) {
        auto r = estimate_record(report.nabla[j], static_cast<std::int64_t>(j));
        const auto [x, y] = report.pairs[j];
        r.details["x"] = x;
        r.details["y"] = y;
        r.details["excess"] = report.nabla[j].mean - (x == y ? 1.0 : 0.0);
        r.details["a0_reference"] = estimators::TriangleReport::kA0Reference;
        out.push_back(std::move(r));
      }
      break;
    }
    case Statistic::Ball: {
      const auto r_max = ctx.config.r_max.value_or(std::max<std::uint32_t>(1, static_cast<std::uint32_t>(cbrt_n)));
      const auto growth = estimators::estimate_ball_growth(g, ctx.p, r_max, ctx.sampling());
      for (std::uint32_t r = 0; r <= r_max; ++r) {
        auto rec = estimate_record(growth.volume[r], r);
        rec.details["edges_mean"] = growth.edges[r].mean;
        for (const auto& check : growth.doubling) {
          if (check.r != r) continue;
          rec.details["doubling_g_2r"] = check.g_2r;
          rec.details["doubling_bound"] = check.bound;
          rec.details["doubling_joint_se"] = check.joint_se;
          rec.details["doubling_holds"] = check.holds;
        }
        out.push_back(std::move(rec));
      }
      break;
    }
    case Statistic::OneArm: {
      const auto radii = ctx.config.r_list.empty() ? powers_of_two_up_to(cbrt_n) : ctx.config.r_list;
      const auto est = estimators::estimate_one_arm(g, ctx.p, radii, ctx.sampling());
      for (std::size_t i = 0; i < radii.size(); ++i) out.push_back(estimate_record(est[i], radii[i]));
      break;
    }
    case Statistic::Tail: {
      std::vector<std::uint64_t> ks = ctx.config.k_list;
      if (ks.empty())
        for (std::uint64_t k = 1; k <= g.vertex_count(); k *= 2) ks.push_back(k);
      const auto est = estimators::estimate_tail(g, ctx.p, ks, ctx.sampling());
      for (std::size_t i = 0; i < ks.size(); ++i) {
        auto rec = estimate_record(est[i], static_cast<std::int64_t>(ks[i]));
        if (est[i].wilson99) rec.details["wilson99"] = interval_json(*est[i].wilson99);
        out.push_back(std::move(rec));
      }
      break;
    }
    case Statistic::C1: {
      const auto c1 = estimators::estimate_c1(g, ctx.p, ctx.sampling());
      auto rec = estimate_record(c1.size);
      rec.median = c1.median;
      rec.details["scaled_median"] = c1.scaled_median;
      rec.details["scaled_q05"] = c1.scaled_q05;
      rec.details["scaled_q95"] = c1.scaled_q95;
      out.push_back(std::move(rec));
      break;
    }
    case Statistic::Diam:
    case Statistic::Tmix: {
      require(g.vertex_count() <= estimators::kUncappedVertexLimit,
              "cluster geometry needs a full component scan; graph is too large");
      require(ctx.replicas >= 2, "geometry statistics need at least 2 replicas");
      geometry::C1GeometryRequest req;
      req.diameter = stat == Statistic::Diam;
      req.mixing = stat == Statistic::Tmix;
      req.mixing_options.size_limit = ctx.config.mixing_size_limit;
      std::vector<geometry::C1Geometry> samples(ctx.replicas);
      parallel_for(ctx.replicas, ctx.config.workers, [&](std::uint64_t i) {
        samples[i] = geometry::c1_geometry(g, {ctx.seed, i}, ctx.p, req);
      });
      ExperimentRecord rec;
      if (stat == Statistic::Diam) {
        std::vector<double> values;
        std::uint64_t approximate = 0;
        for (const auto& s : samples) {
          values.push_back(s.diameter->value);
          approximate += s.diameter->method != geometry::DiameterMethod::Exact;
        }
        rec.estimate = stats::estimate_from(values);
        rec.median = stats::quantile(values, 0.5);
        rec.details["method"] = approximate ? "mixed" : "exact";
        rec.details["lower_bound_count"] = approximate;
      } else {
        std::vector<double> exact;
        std::vector<double> proxy;
        for (const auto& s : samples) {
          if (s.mixing->method == geometry::MixingMethod::ExactTv) exact.push_back(static_cast<double>(s.mixing->t_mix));
          else proxy.push_back(*s.mixing->relaxation_time);
        }
        // Spectral proxies are reported but kept out of the summary.
        if (!exact.empty()) {
          rec.estimate = stats::estimate_from(exact);
          rec.median = stats::quantile(exact, 0.5);
        } else {
          const double nan = std::numeric_limits<double>::quiet_NaN();
          rec.estimate.mean = rec.estimate.std_error = nan;
          rec.estimate.ci99 = {nan, nan};
        }
        rec.details["method"] = geometry::method_name(geometry::MixingMethod::ExactTv);
        rec.details["start_policy"] = geometry::policy_name(geometry::StartPolicy::AllStarts);
        rec.details["laziness"] = 0.5;
        rec.details["tv_threshold"] = 0.25;
        rec.details["proxy_count"] = proxy.size();
        if (!proxy.empty()) {
          rec.details["proxy_relaxation_median"] = stats::quantile(proxy, 0.5);
          rec.details["proxy_note"] = "proxy, not TV";
        }
      }
      out.push_back(std::move(rec));
      break;
    }
    case Statistic::Pc: break;
  }
  return out;
}

std::string cell_id(std::uint64_t n, std::optional<std::uint32_t> p_index, Statistic s) {
  std::string id = "n=" + std::to_string(n);
  if (p_index) id += "/p=" + std::to_string(*p_index);
  return id + "/" + statistic_name(s);
}

// Output file with resume bookkeeping.
class RecordStore {
 public:
  RecordStore(const std::filesystem::path& path, const std::string& fingerprint, bool resume)
      : path_(path), fingerprint_(fingerprint) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    bool dirty = false;
    auto records = read_records(path_, &dirty);
    std::map<std::string, std::uint32_t> count;
    for (const auto& r : records)
      if (r.fingerprint == fingerprint_) ++count[r.cell];
    std::vector<ExperimentRecord> keep;
    for (auto& r : records) {
      if (r.fingerprint != fingerprint_) {
        keep.push_back(std::move(r));
      } else if (resume && count[r.cell] == r.cell_records) {
        done_[r.cell].push_back(r);
        keep.push_back(std::move(r));
      } else {
        dirty = true;
      }
    }
    // Partial cells and torn lines are dropped by rewriting the file.
    if (dirty) {
      std::ofstream out(path_, std::ios::trunc);
      if (!out) throw IoError("cannot rewrite " + path_.string());
      for (const auto& r : keep) out << r.line() << '\n';
      if (!out) throw IoError("write failed on " + path_.string());
    }
  }

  const std::vector<ExperimentRecord>* find(const std::string& cell) const {
    const auto it = done_.find(cell);
    return it == done_.end() ? nullptr : &it->second;
  }

  void append(const std::vector<ExperimentRecord>& records) {
    if (path_.empty()) return;
    std::string block;
    for (const auto& r : records) block += r.line() + '\n';
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot open " + path_.string() + " for appending");
    out << block;
    out.flush();
    if (!out) throw IoError("write failed on " + path_.string());
  }

  static std::vector<ExperimentRecord> read_records(const std::filesystem::path& path, bool* dirty);

 private:
  std::filesystem::path path_;
  std::string fingerprint_;
  std::map<std::string, std::vector<ExperimentRecord>> done_;
};

std::vector<ExperimentRecord> RecordStore::read_records(const std::filesystem::path& path, bool* dirty) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!trim(line).empty()) lines.push_back(line);
  std::vector<ExperimentRecord> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(ExperimentRecord::from_json(Json::parse(lines[i])));
    } catch (const Json::exception& e) {
      if (i + 1 == lines.size()) {
        if (dirty) *dirty = true;
        break;
      }
      throw IoError(path.string() + ": bad record on line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

double summary_of(const ExperimentRecord& r, Summary summary) {
  if (summary == Summary::Mean) return r.estimate.mean;
  if (!r.median) throw UsageError("statistic " + r.statistic + " has no median; use the mean summary");
  return *r.median;
}

}  // namespace

const char* mode_name(PMode m) noexcept {
  switch (m) {
    case PMode::AtPcHat: return "at_pc_hat";
    case PMode::WindowGrid: return "window_grid";
    case PMode::Explicit: return "explicit";
  }
  return "unknown";
}

const char* statistic_name(Statistic s) noexcept {
  switch (s) {
    case Statistic::Chi: return "chi";
    case Statistic::Pc: return "pc";
    case Statistic::Triangle: return "triangle";
    case Statistic::Ball: return "ball";
    case Statistic::OneArm: return "onearm";
    case Statistic::Tail: return "tail";
    case Statistic::C1: return "c1";
    case Statistic::Diam: return "diam";
    case Statistic::Tmix: return "tmix";
  }
  return "unknown";
}

Statistic parse_statistic(const std::string& name) {
  for (auto s : {Statistic::Chi, Statistic::Pc, Statistic::Triangle, Statistic::Ball, Statistic::OneArm,
                 Statistic::Tail, Statistic::C1, Statistic::Diam, Statistic::Tmix})
    if (name == statistic_name(s)) return s;
  throw UsageError("unknown statistic \"" + name + "\"");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  for (int line_no = 1; std::getline(in, raw); ++line_no) {
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw UsageError("config key \"" + key + "\" given twice");

    if (key == "family") c.family = value;
    else if (key == "sizes") c.sizes = parse_numbers<std::uint32_t>(key, value);
    else if (key == "dim") c.torus_dim = parse_number<std::uint32_t>(key, value);
    else if (key == "lambda") c.lambda = parse_number<double>(key, value);
    else if (key == "A") c.A = parse_number<double>(key, value);
    else if (key == "p_mode") {
      if (value == "at_pc_hat") c.p_mode = PMode::AtPcHat;
      else if (value == "window_grid") c.p_mode = PMode::WindowGrid;
      else if (value == "explicit") c.p_mode = PMode::Explicit;
      else throw UsageError("p_mode must be at_pc_hat, window_grid or explicit");
    }
    else if (key == "grid_points") c.grid_points = parse_number<std::size_t>(key, value);
    else if (key == "p_list") c.p_list = parse_numbers<double>(key, value);
    else if (key == "statistics") {
      c.statistics.clear();
      for (const auto& s : split_list(value)) c.statistics.push_back(parse_statistic(s));
    }
    else if (key == "replicas") c.replicas = parse_number<std::uint64_t>(key, value);
    else if (key.rfind("replicas_", 0) == 0) c.replicas_by_statistic[parse_statistic(key.substr(9))] = parse_number<std::uint64_t>(key, value);
    else if (key == "master_seed") c.master_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "output") c.output = value;
    else if (key == "workers") c.workers = parse_number<unsigned>(key, value);
    else if (key == "pc_tolerance") c.pc_tolerance = parse_number<double>(key, value);
    else if (key == "pc_replicas") c.pc_replicas = parse_number<std::uint64_t>(key, value);
    else if (key == "pc_retry_cap") c.pc_retry_cap = parse_number<unsigned>(key, value);
    else if (key == "r_max") c.r_max = parse_number<std::uint32_t>(key, value);
    else if (key == "r_list") c.r_list = parse_numbers<std::uint32_t>(key, value);
    else if (key == "k_list") c.k_list = parse_numbers<std::uint64_t>(key, value);
    else if (key == "triangle_pairs") c.triangle_pairs = parse_number<std::size_t>(key, value);
    else if (key == "mixing_size_limit") c.mixing_size_limit = parse_number<std::uint32_t>(key, value);
    else if (key == "origin") c.origin = parse_number<Vertex>(key, value);
    else throw UsageError("unknown config key \"" + key + "\"");
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ExperimentConfig::validate() const {
  const bool file = family.rfind("file:", 0) == 0;
  require(file || family == "complete" || family == "torus" || family == "hamming",
          "family must be torus, hamming, complete or file:PATH");
  if (file) require(sizes.empty(), "a file graph is its own ladder; omit sizes");
  else require(!sizes.empty(), "size ladder must be nonempty");
  require(replicas >= 2, "replicas must be at least 2");
  for (const auto& [stat, count] : replicas_by_statistic)
    require(count >= 2, std::string("replicas_") + statistic_name(stat) + " must be at least 2");
  require(!statistics.empty(), "at least one statistic is required");
  require(A >= 0, "A must be nonnegative");
  require(pc_tolerance > 0, "pc_tolerance must be positive");
  require(pc_replicas >= 2, "pc_replicas must be at least 2");
  if (p_mode == PMode::Explicit) {
    require(!p_list.empty(), "explicit p_mode needs p_list");
    for (double p : p_list) require(p >= 0 && p <= 1, "p_list entries must lie in [0, 1]");
  } else {
    require(p_list.empty(), "p_list is only used with explicit p_mode");
  }
  if (p_mode == PMode::WindowGrid) require(grid_points >= 1, "grid_points must be at least 1");
  for (auto r : r_list) require(r >= 1, "r_list entries must be positive");
  for (auto k : k_list) require(k >= 1, "k_list entries must be positive");
}

std::uint64_t ExperimentConfig::replicas_for(Statistic s) const {
  const auto it = replicas_by_statistic.find(s);
  return it == replicas_by_statistic.end() ? replicas : it->second;
}

std::vector<graphs::Graph> ExperimentConfig::ladder() const {
  if (family.rfind("file:", 0) == 0) return {graphs::Graph::load(family.substr(5))};
  std::vector<graphs::Graph> out;
  for (auto s : sizes) {
    if (family == "complete") out.push_back(graphs::Graph::complete(s));
    else if (family == "hamming") out.push_back(graphs::Graph::hamming(s));
    else out.push_back(graphs::Graph::torus(s, torus_dim));
  }
  return out;
}

std::string ExperimentConfig::canonical() const {
  std::vector<std::string> stat_names;
  for (auto s : statistics) stat_names.push_back(statistic_name(s));
  std::string stats_joined;
  for (std::size_t i = 0; i < stat_names.size(); ++i) stats_joined += (i ? "," : "") + stat_names[i];
  std::string overrides;
  for (const auto& [stat, count] : replicas_by_statistic)
    overrides += std::string(";replicas_") + statistic_name(stat) + "=" + std::to_string(count);
  std::ostringstream o;
  o << "v=" << kRecordVersion << ";family=" << family << ";sizes=" << join(sizes) << ";dim=" << torus_dim
    << ";lambda=" << format_double(lambda) << ";A=" << format_double(A) << ";p_mode=" << mode_name(p_mode)
    << ";grid_points=" << grid_points << ";p_list=" << join(p_list) << ";statistics=" << stats_joined
    << ";replicas=" << replicas << overrides << ";master_seed=" << master_seed << ";pc_tolerance=" << format_double(pc_tolerance)
    << ";pc_replicas=" << pc_replicas << ";pc_retry_cap=" << pc_retry_cap
    << ";r_max=" << (r_max ? std::to_string(*r_max) : "default") << ";r_list=" << join(r_list)
    << ";k_list=" << join(k_list) << ";triangle_pairs=" << triangle_pairs
    << ";mixing_size_limit=" << mixing_size_limit << ";origin=" << (origin ? std::to_string(*origin) : "default");
  return o.str();
}

std::string ExperimentConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

Json ExperimentRecord::to_json() const {
  Json j;
  j["v"] = kRecordVersion;
  j["fingerprint"] = fingerprint;
  j["cell"] = cell;
  j["cell_records"] = cell_records;
  j["family"] = family;
  j["graph"] = graph;
  j["n"] = n;
  j["d"] = d;
  j["p"] = optional_json(p);
  j["p_index"] = optional_json(p_index);
  j["window_position"] = optional_json(window_position);
  j["statistic"] = statistic;
  j["index"] = optional_json(index);
  j["mean"] = estimate.mean;
  j["std_error"] = estimate.std_error;
  j["samples"] = estimate.samples;
  j["ci99"] = interval_json(estimate.ci99);
  j["censored"] = estimate.censored;
  j["median"] = optional_json(median);
  j["seed"] = seed;
  j["replicas"] = replicas;
  j["wall_ms"] = wall_ms;
  j["details"] = details;
  j["error"] = optional_json(error);
  return j;
}

ExperimentRecord ExperimentRecord::from_json(const Json& j) {
  if (j.at("v").get<int>() != kRecordVersion) throw IoError("unsupported record version");
  ExperimentRecord r;
  r.fingerprint = j.at("fingerprint").get<std::string>();
  r.cell = j.at("cell").get<std::string>();
  r.cell_records = j.at("cell_records").get<std::uint32_t>();
  r.family = j.at("family").get<std::string>();
  r.graph = j.at("graph").get<std::string>();
  r.n = j.at("n").get<std::uint64_t>();
  r.d = j.at("d").get<std::uint32_t>();
  if (!j.at("p").is_null()) r.p = j.at("p").get<double>();
  if (!j.at("p_index").is_null()) r.p_index = j.at("p_index").get<std::uint32_t>();
  if (!j.at("window_position").is_null()) r.window_position = j.at("window_position").get<double>();
  r.statistic = j.at("statistic").get<std::string>();
  if (!j.at("index").is_null()) r.index = j.at("index").get<std::int64_t>();
  r.estimate.mean = number_or_nan(j.at("mean"));
  r.estimate.std_error = number_or_nan(j.at("std_error"));
  r.estimate.samples = j.at("samples").get<std::uint64_t>();
  r.estimate.ci99 = interval_from(j.at("ci99"));
  r.estimate.censored = j.at("censored").get<std::uint64_t>();
  if (!j.at("median").is_null()) r.median = j.at("median").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.replicas = j.at("replicas").get<std::uint64_t>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.details = j.at("details");
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

std::vector<ExperimentRecord> read_records(const std::filesystem::path& path) {
  return RecordStore::read_records(path, nullptr);
}

std::vector<ExperimentRecord> run(const ExperimentConfig& config, const RunOptions& opts) {
  config.validate();
  const std::string fp = config.fingerprint();
  RecordStore store(config.output, fp, opts.resume);
  std::vector<ExperimentRecord> all;
  std::size_t new_cells = 0;

  // Returns false once the new-cell budget is spent.
  const auto finish_cell = [&](std::vector<ExperimentRecord>& records, const std::string& cell,
                               const graphs::Graph& g, Clock::time_point start) {
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    for (auto& r : records) {
      r.fingerprint = fp;
      r.cell = cell;
      r.cell_records = static_cast<std::uint32_t>(records.size());
      r.family = graphs::family_name(g.family());
      r.graph = g.describe();
      r.n = g.vertex_count();
      r.d = g.degree();
      r.wall_ms = ms;
    }
    store.append(records);
    if (opts.on_cell) opts.on_cell(records);
    all.insert(all.end(), records.begin(), records.end());
    return !(opts.max_new_cells && ++new_cells >= *opts.max_new_cells);
  };

  for (const auto& g : config.ladder()) {
    const std::uint64_t n = g.vertex_count();
    const std::uint64_t size_seed = detail::combine(config.master_seed, n);
    const bool needs_pc = config.p_mode != PMode::Explicit || has(config.statistics, Statistic::Pc);

    std::optional<double> p_c_hat;
    if (needs_pc) {
      const std::string cell = cell_id(n, std::nullopt, Statistic::Pc);
      if (const auto* done = store.find(cell)) {
        all.insert(all.end(), done->begin(), done->end());
        if (done->front().error) continue;
        p_c_hat = done->front().estimate.mean;
      } else {
        const auto start = Clock::now();
        estimators::SolveOptions so;
        so.tolerance = config.pc_tolerance / (static_cast<double>(g.degree()) * std::cbrt(static_cast<double>(n)));
        so.replicas_per_probe = config.pc_replicas;
        so.retry_cap = config.pc_retry_cap;
        so.master_seed = detail::combine(size_seed, kPcStream);
        so.workers = config.workers;
        so.origin = config.origin;
        ExperimentRecord r;
        r.statistic = statistic_name(Statistic::Pc);
        r.seed = so.master_seed;
        r.replicas = config.pc_replicas;
        r.details["lambda"] = config.lambda;
        try {
          const auto cp = estimators::solve_pc(g, config.lambda, so);
          p_c_hat = cp.p_c_hat;
          r.estimate.mean = cp.p_c_hat;
          r.estimate.std_error = 0.0;
          r.estimate.samples = cp.samples_per_probe;
          r.estimate.ci99 = cp.bracket;
          r.details["target"] = cp.target;
          r.details["tolerance"] = so.tolerance;
          r.details["probes"] = cp.probes;
          r.details["chi_at_p_c_hat"] = cp.chi_at_p_c_hat.mean;
          r.details["chi_std_error"] = cp.chi_at_p_c_hat.std_error;
          r.details["chi_ci99"] = interval_json(cp.chi_at_p_c_hat.ci99);
          r.details["indistinguishable"] = cp.indistinguishable;
          r.details["self_consistent"] = cp.self_consistent;
        } catch (const InfeasibleError& e) {
          r.estimate.mean = r.estimate.std_error = std::numeric_limits<double>::quiet_NaN();
          r.estimate.ci99 = {r.estimate.mean, r.estimate.mean};
          r.error = std::string("infeasible: ") + e.what();
        }
        std::vector<ExperimentRecord> rs{std::move(r)};
        if (!finish_cell(rs, cell, g, start)) return all;
        if (!p_c_hat) continue;
      }
    }

    std::vector<double> ps;
    std::vector<std::optional<double>> positions;
    if (config.p_mode == PMode::Explicit) {
      ps = config.p_list;
      positions.assign(ps.size(), std::nullopt);
    } else if (config.p_mode == PMode::AtPcHat) {
      ps = {*p_c_hat};
      positions = {std::nullopt};
    } else {
      const auto window = estimators::WindowSpec::around(g, *p_c_hat, config.A);
      ps = window.grid(config.grid_points);
      for (std::size_t i = 0; i < ps.size(); ++i)
        positions.push_back(ps.size() == 1 ? 0.0
                                           : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(ps.size() - 1));
    }

    for (std::uint32_t pi = 0; pi < ps.size(); ++pi) {
      for (auto stat : config.statistics) {
        if (stat == Statistic::Pc) continue;
        const std::string cell = cell_id(n, pi, stat);
        if (const auto* done = store.find(cell)) {
          all.insert(all.end(), done->begin(), done->end());
          continue;
        }
        const auto start = Clock::now();
        // The seed does not depend on p, so every p of a size shares labels.
        const CellContext ctx{config, g, ps[pi], detail::combine(size_seed, stream_of(stat)), config.replicas_for(stat)};
        auto records = compute_cell(stat, ctx);
        for (auto& r : records) {
          r.statistic = statistic_name(stat);
          r.p = ps[pi];
          r.p_index = pi;
          r.window_position = positions[pi];
          r.seed = ctx.seed;
          r.replicas = ctx.replicas;
        }
        if (!finish_cell(records, cell, g, start)) return all;
      }
    }
  }
  return all;
}

void write_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  const auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  const auto num = [](double x) { return std::isfinite(x) ? format_double(x) : std::string(); };
  const auto opt = [&](const auto& v) {
    if (!v) return std::string();
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(*v)>>) return num(*v);
    else return std::to_string(*v);
  };
  out << "fingerprint,family,graph,n,d,p,p_index,window_position,statistic,index,mean,std_error,samples,ci99_lo,"
         "ci99_hi,censored,median,seed,replicas,wall_ms,error,details\n";
  for (const auto& r : records) {
    out << r.fingerprint << ',' << r.family << ',' << quote(r.graph) << ',' << r.n << ',' << r.d << ','
        << opt(r.p) << ',' << opt(r.p_index) << ',' << opt(r.window_position) << ',' << r.statistic << ','
        << opt(r.index) << ',' << num(r.estimate.mean) << ',' << num(r.estimate.std_error) << ','
        << r.estimate.samples << ',' << num(r.estimate.ci99.lo) << ',' << num(r.estimate.ci99.hi) << ','
        << r.estimate.censored << ',' << opt(r.median) << ',' << r.seed << ',' << r.replicas << ','
        << num(r.wall_ms) << ',' << quote(r.error.value_or("")) << ',' << quote(r.details.dump()) << '\n';
  }
}

ScalingFit fit_scaling(const std::vector<ExperimentRecord>& records, const RecordFilter& filter, Summary summary) {
  std::map<std::uint64_t, double> by_n;
  for (const auto& r : records) {
    if (r.statistic != filter.statistic || r.error) continue;
    if (filter.index && r.index != filter.index) continue;
    if (filter.p_index && r.p_index != filter.p_index) continue;
    if (!by_n.emplace(r.n, summary_of(r, summary)).second)
      throw UsageError("several " + filter.statistic + " records at n = " + std::to_string(r.n) +
                       "; narrow the filter by index or p_index");
  }
  ScalingFit fit;
  fit.statistic = filter.statistic;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [n, value] : by_n) {
    if (!(value > 0)) {
      ++fit.excluded;
      continue;
    }
    xs.push_back(static_cast<double>(n));
    ys.push_back(value);
  }
  require(xs.size() >= 3, "a scaling fit needs at least 3 sizes with positive values, got " +
                              std::to_string(xs.size()));
  const auto line = stats::fit_power_law(xs, ys);
  fit.exponent_hat = line.slope;
  fit.stderr_slope = line.slope_stderr;
  fit.r_squared = line.r_squared;
  fit.points = line.points;
  return fit;
}

stats::LineFit fit_index_profile(const std::vector<ExperimentRecord>& records, const std::string& statistic,
                                 std::uint64_t n, std::int64_t lo, std::int64_t hi) {
  std::map<std::int64_t, double> by_index;
  for (const auto& r : records) {
    if (r.statistic != statistic || r.n != n || r.error || !r.index || *r.index < lo || *r.index > hi) continue;
    if (!by_index.emplace(*r.index, r.estimate.mean).second)
      throw UsageError("several " + statistic + " records share index " + std::to_string(*r.index));
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [k, v] : by_index) {
    xs.push_back(static_cast<double>(k));
    ys.push_back(v);
  }
  return stats::fit_power_law(xs, ys);
}

WindowStability check_window_stability(const std::vector<ExperimentRecord>& records, const std::string& statistic,
                                       Summary summary) {
  constexpr double kEps = 1e-12;
  struct Points {
    std::optional<double> low, center, high;
  };
  std::map<std::uint64_t, Points> by_n;
  for (const auto& r : records) {
    if (r.statistic != statistic || r.error || !r.window_position) continue;
    auto& pts = by_n[r.n];
    const double pos = *r.window_position;
    if (std::abs(pos) < kEps) pts.center = summary_of(r, summary);
    else if (std::abs(pos + 1) < kEps) pts.low = summary_of(r, summary);
    else if (std::abs(pos - 1) < kEps) pts.high = summary_of(r, summary);
  }
  require(!by_n.empty(), "no window_grid records for " + statistic);
  WindowStability out;
  out.statistic = statistic;
  std::vector<double> ns, low_ratios, high_ratios;
  for (const auto& [n, pts] : by_n) {
    if (!pts.low || !pts.center || !pts.high) {
      out.partial = true;
      continue;
    }
    WindowStability::Row row{n, *pts.center, *pts.low, *pts.high, *pts.low / *pts.center, *pts.high / *pts.center};
    out.rows.push_back(row);
    ns.push_back(static_cast<double>(n));
    low_ratios.push_back(row.ratio_low);
    high_ratios.push_back(row.ratio_high);
  }
  const auto positive = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0 && std::isfinite(x); });
  };
  if (ns.size() >= 2 && positive(low_ratios)) out.low_fit = stats::fit_power_law(ns, low_ratios);
  if (ns.size() >= 2 && positive(high_ratios)) out.high_fit = stats::fit_power_law(ns, high_ratios);
  return out;
}

}  // namespace percolab::lab
