#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perc.hpp"

namespace percolab::geometry {

/// A connected cluster as a standalone graph on local indices 0..size-1.
class ClusterGraph {
 public:
  /// Needs a cluster explored with record_edges set and not truncated.
  static ClusterGraph from_cluster(const perc::Cluster& c);
  /// Local edge list; rejects loops, duplicates and disconnected input.
  static ClusterGraph from_edges(std::uint32_t size, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

  std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(offsets_.size() - 1); }
  std::uint64_t edge_count() const noexcept { return targets_.size() / 2; }
  std::uint32_t degree(std::uint32_t v) const { return static_cast<std::uint32_t>(offsets_[v + 1] - offsets_[v]); }
  std::span<const std::uint32_t> neighbors(std::uint32_t v) const {
    return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }

  /// BFS distances from s.
  std::vector<std::uint32_t> distances(std::uint32_t s) const;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> targets_;
};

enum class DiameterMethod { Exact, DoubleSweepLowerBound };
const char* method_name(DiameterMethod m) noexcept;

struct Diameter {
  std::uint32_t value = 0;
  DiameterMethod method = DiameterMethod::Exact;
};

inline constexpr std::uint32_t kExactDiameterLimit = 5000;
inline constexpr unsigned kDoubleSweeps = 20;

/// All-pairs BFS up to `exact_limit` vertices, iterated double sweep above.
Diameter diameter(const ClusterGraph& c, std::uint32_t exact_limit = kExactDiameterLimit);

struct SweepResult {
  std::uint32_t lower_bound = 0;
  std::uint32_t endpoint = 0;  // a vertex whose eccentricity equals lower_bound
};

/// Iterated double sweep from vertex 0.
SweepResult double_sweep(const ClusterGraph& c, unsigned sweeps = kDoubleSweeps);

/// pi(v) = deg(v) / (2 |E|); the single-vertex cluster gets the point mass.
std::vector<double> stationary_distribution(const ClusterGraph& c);

enum class MixingMethod { ExactTv, SpectralBound };
enum class StartPolicy { AllStarts, DoubleSweepEndpoint };
const char* method_name(MixingMethod m) noexcept;
const char* policy_name(StartPolicy s) noexcept;

struct MixingOptions {
  std::uint32_t size_limit = 2000;
  bool spectral_fallback = true;
  StartPolicy start_policy = StartPolicy::AllStarts;
};

/// Lazy random walk (hold with probability 1/2), TV threshold 1/4.
struct MixingResult {
  std::uint64_t t_mix = 0;
  MixingMethod method = MixingMethod::ExactTv;
  /// Worst-start TV at t_mix; empty for the spectral proxy.
  std::optional<double> tv_at_t_mix;
  StartPolicy start_policy = StartPolicy::AllStarts;
  /// 1/(1 - lambda_2); set for the spectral proxy only.
  std::optional<double> relaxation_time;
  std::string note;  // "proxy, not TV" for the spectral path
};

MixingResult mixing_time(const ClusterGraph& c, const MixingOptions& opts = {});

/// Worst-start TV distance to stationarity after t lazy steps, from the
/// spectral decomposition; exposed for testing.
double worst_tv(const ClusterGraph& c, std::uint64_t t, StartPolicy policy = StartPolicy::AllStarts);

/// Geometry of the largest cluster of one percolation configuration.
struct C1Geometry {
  std::uint64_t size = 0;
  std::optional<Diameter> diameter;
  std::optional<MixingResult> mixing;
};

struct C1GeometryRequest {
  bool diameter = true;
  bool mixing = true;
  MixingOptions mixing_options;
};

C1Geometry c1_geometry(const graphs::Graph& g, perc::CouplingSeed seed, double p, const C1GeometryRequest& req = {});

}  // namespace percolab::geometry
