#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "graphs.hpp"
#include "perc.hpp"
#include "stats.hpp"

namespace percolab::estimators {

using graphs::Graph;
using stats::Estimate;
using stats::Interval;

inline constexpr std::uint32_t kUncappedVertexLimit = 1'000'000;
inline constexpr std::uint32_t kTriangleVertexLimit = 100'000;

struct SamplingOptions {
  std::uint64_t replicas = 1000;
  std::uint64_t master_seed = 0;
  /// Replica indices used are [first_replica, first_replica + replicas).
  std::uint64_t first_replica = 0;
  unsigned workers = 0;  // 0 = all cores
  /// Required for graphs that are not regular unless `force` is set.
  std::optional<Vertex> origin;
  bool force = false;
  /// Exploration vertex budget; mandatory above kUncappedVertexLimit vertices.
  std::optional<std::uint64_t> cap;
  /// Count clusters that hit the cap at the cap size instead of failing.
  bool tail_safe = false;
};

/// E|C(origin)|.
Estimate estimate_chi(const Graph& g, double p, const SamplingOptions& opts);

struct SolveOptions {
  double tolerance = 1e-3;
  std::uint64_t replicas_per_probe = 2000;
  /// Total budget doublings allowed before an undecided probe ends the search.
  unsigned retry_cap = 6;
  std::uint64_t master_seed = 0;
  unsigned workers = 0;
  std::optional<Vertex> origin;
  bool force = false;
};

struct CriticalPoint {
  double p_c_hat = 0.0;
  double lambda = 1.0;
  double target = 0.0;  // lambda * n^(1/3)
  Interval bracket;
  /// Fresh-seed re-estimate of chi at p_c_hat.
  Estimate chi_at_p_c_hat;
  std::uint64_t samples_per_probe = 0;  // final per-probe budget
  std::uint64_t probes = 0;
  /// The retry cap was hit with the target still inside the probe's interval.
  bool indistinguishable = false;
  /// chi_at_p_c_hat.ci99 contains the target.
  bool self_consistent = false;
};

/// Noisy bisection for chi(p) = lambda * n^(1/3).
CriticalPoint solve_pc(const Graph& g, double lambda, const SolveOptions& opts);

/// [p_center - A/(d n^(1/3)), p_center + A/(d n^(1/3))], clamped to [0, 1].
struct WindowSpec {
  double A = 1.0;
  double p_center = 0.0;
  double half_width = 0.0;
  Interval interval;

  static WindowSpec around(const Graph& g, double p_center, double A);
  /// `points` equally spaced probabilities spanning the (unclamped) window, clamped.
  std::vector<double> grid(std::size_t points) const;
};

struct TriangleReport {
  std::vector<std::pair<Vertex, Vertex>> pairs;
  std::vector<Estimate> nabla;  // one per pair
  /// max over pairs of nabla - 1{x = y}.
  double max_excess = 0.0;
  static constexpr double kA0Reference = 0.25;
};

/// Unbiased triple-configuration estimator of the triangle diagram.
TriangleReport estimate_triangle(const Graph& g, double p, std::vector<std::pair<Vertex, Vertex>> pairs,
                                 const SamplingOptions& opts);

struct VolumeDoublingCheck {
  std::uint32_t r = 0;
  double g_2r = 0.0;
  double bound = 0.0;     // G(r)^2 / (4r)
  double joint_se = 0.0;  // standard error of G(2r) - G(r)^2/(4r)
  bool holds = false;     // g_2r >= bound - 4 joint_se
};

struct BallGrowthEstimate {
  std::vector<Estimate> volume;  // G(r) = E|B(0, r)|, r = 0..r_max
  std::vector<Estimate> edges;   // E|E(B(0, r))|
  std::vector<VolumeDoublingCheck> doubling;  // r = 1..r_max/2
};

BallGrowthEstimate estimate_ball_growth(const Graph& g, double p, std::uint32_t r_max, const SamplingOptions& opts);

/// P(boundary of B(0, r) is nonempty) for each r.
std::vector<Estimate> estimate_one_arm(const Graph& g, double p, const std::vector<std::uint32_t>& r_list,
                                       const SamplingOptions& opts);

/// P(|C(0)| >= k) for each k; exploration stops at max(k_list).
std::vector<Estimate> estimate_tail(const Graph& g, double p, const std::vector<std::uint64_t>& k_list,
                                    const SamplingOptions& opts);

struct C1Estimate {
  Estimate size;           // |C1|
  double median = 0.0;     // of |C1|
  double scaled_median = 0.0;  // of |C1| / n^(2/3)
  double scaled_q05 = 0.0;
  double scaled_q95 = 0.0;
  std::vector<double> samples;  // |C1| per replica, in replica order
};

C1Estimate estimate_c1(const Graph& g, double p, const SamplingOptions& opts);

}  // namespace percolab::estimators
