#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphs.hpp"
#include "stats.hpp"

namespace percolab::lab {

using Json = nlohmann::ordered_json;

enum class PMode { AtPcHat, WindowGrid, Explicit };
enum class Statistic { Chi, Pc, Triangle, Ball, OneArm, Tail, C1, Diam, Tmix };
enum class Summary { Mean, Median };

const char* mode_name(PMode m) noexcept;
const char* statistic_name(Statistic s) noexcept;
Statistic parse_statistic(const std::string& name);

inline constexpr int kRecordVersion = 1;

/// A sweep over a ladder of graph sizes. Text form: one `key = value` per
/// line, `#` starts a comment, lists are comma separated (see README).
struct ExperimentConfig {
  /// torus | hamming | complete | file:PATH
  std::string family = "complete";
  /// Ladder parameters: n for complete, dimension for hamming, side for torus.
  /// Empty for a file graph, whose ladder is the file itself.
  std::vector<std::uint32_t> sizes;
  std::uint32_t torus_dim = 2;
  double lambda = 1.0;
  double A = 1.0;
  PMode p_mode = PMode::AtPcHat;
  std::size_t grid_points = 5;
  std::vector<double> p_list;
  std::vector<Statistic> statistics;
  std::uint64_t replicas = 1000;
  /// Per-statistic replica counts (`replicas_<statistic> = N`).
  std::map<Statistic, std::uint64_t> replicas_by_statistic;
  std::uint64_t master_seed = 0;
  std::filesystem::path output;
  unsigned workers = 0;

  /// Solver tolerance in units of the window half-width 1/(d n^(1/3)).
  double pc_tolerance = 0.02;
  std::uint64_t pc_replicas = 1000;
  unsigned pc_retry_cap = 4;
  /// Ball radii 0..r_max; default floor(n^(1/3)).
  std::optional<std::uint32_t> r_max;
  /// One-arm radii; default powers of two up to n^(1/3).
  std::vector<std::uint32_t> r_list;
  /// Tail thresholds; default powers of two up to n.
  std::vector<std::uint64_t> k_list;
  /// Random off-diagonal pairs for the triangle diagram, plus one diagonal pair.
  std::size_t triangle_pairs = 10;
  std::uint32_t mixing_size_limit = 2000;
  std::optional<Vertex> origin;

  std::uint64_t replicas_for(Statistic s) const;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Throws UsageError on an inconsistent configuration.
  void validate() const;
  /// The ladder as graphs, in ladder order.
  std::vector<graphs::Graph> ladder() const;
  /// Every field that influences a numeric result, in a fixed textual form.
  /// The output path and the worker count are excluded.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string fingerprint() const;
};

/// One row of a sweep. Records of one cell (size, p, statistic) are written together.
struct ExperimentRecord {
  std::string fingerprint;
  std::string cell;
  std::uint32_t cell_records = 1;
  std::string family;
  std::string graph;
  std::uint64_t n = 0;
  std::uint32_t d = 0;
  std::optional<double> p;
  std::optional<std::uint32_t> p_index;
  /// Position inside the window in units of A, for window_grid sweeps.
  std::optional<double> window_position;
  std::string statistic;
  /// r or k where the statistic is indexed.
  std::optional<std::int64_t> index;
  stats::Estimate estimate;
  std::optional<double> median;
  std::uint64_t seed = 0;
  std::uint64_t replicas = 0;
  double wall_ms = 0.0;
  /// Method flags and statistic-specific extras.
  Json details = Json::object();
  std::optional<std::string> error;

  Json to_json() const;
  static ExperimentRecord from_json(const Json& j);
  /// Compact single-line JSON.
  std::string line() const { return to_json().dump(); }
};

struct RunOptions {
  /// Skip cells already complete in the output file.
  bool resume = true;
  /// Called after each cell with the cell's records.
  std::function<void(const std::vector<ExperimentRecord>&)> on_cell;
  /// Stop after this many newly computed cells; for testing interrupted runs.
  std::optional<std::size_t> max_new_cells;
};

/// Runs every cell of the sweep, appending records to config.output when it
/// is set. Returns the records of this configuration, resumed ones included.
std::vector<ExperimentRecord> run(const ExperimentConfig& config, const RunOptions& opts = {});

/// Reads a JSON-lines file; a torn last line is ignored.
std::vector<ExperimentRecord> read_records(const std::filesystem::path& path);

void write_csv(const std::vector<ExperimentRecord>& records, std::ostream& out);

struct ScalingFit {
  std::string statistic;
  double exponent_hat = 0.0;
  double stderr_slope = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
  /// Sizes dropped because their summary value was not positive.
  std::size_t excluded = 0;
};

struct RecordFilter {
  std::string statistic;
  std::optional<std::int64_t> index;
  std::optional<std::uint32_t> p_index;
};

/// Least squares of log(summary) on log(n), one point per size.
ScalingFit fit_scaling(const std::vector<ExperimentRecord>& records, const RecordFilter& filter,
                       Summary summary = Summary::Median);

/// Least squares of log(mean) on log(index) at one size over index in [lo, hi].
stats::LineFit fit_index_profile(const std::vector<ExperimentRecord>& records, const std::string& statistic,
                                 std::uint64_t n, std::int64_t lo, std::int64_t hi);

struct WindowStability {
  struct Row {
    std::uint64_t n = 0;
    double center = 0.0;
    double low = 0.0;   // at -A
    double high = 0.0;  // at +A
    double ratio_low = 0.0;
    double ratio_high = 0.0;
  };
  std::string statistic;
  std::vector<Row> rows;
  /// Exponents of the endpoint/center ratios against n; set with >= 2 sizes.
  std::optional<stats::LineFit> low_fit;
  std::optional<stats::LineFit> high_fit;
  /// Some size lacked a center or an endpoint.
  bool partial = false;
};

WindowStability check_window_stability(const std::vector<ExperimentRecord>& records, const std::string& statistic,
                                       Summary summary = Summary::Median);

}  // namespace percolab::lab
