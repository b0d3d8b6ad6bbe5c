#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphs.hpp"

namespace percolab::oracle {

using graphs::Graph;

enum class Quantity { Tau, Chi, Nabla, BallMean, OneArm, C1Mean, C1Distribution, Tail };

const char* quantity_name(Quantity q) noexcept;
/// Parses "tau", "chi", "nabla", "ball_mean", "one_arm", "c1_mean", "c1_distribution", "tail".
Quantity parse_quantity(const std::string& name);

inline constexpr std::uint32_t kMaxEdges = 24;
inline constexpr std::uint32_t kMaxVertices = 64;

struct QueryArgs {
  Vertex x = 0;
  Vertex y = 0;
  std::uint32_t r = 0;
  std::uint64_t k = 0;
};

struct ExactResult {
  Quantity quantity = Quantity::Chi;
  double p = 0.0;
  double value = 0.0;
  /// Only for C1Distribution: distribution[s] = P(|C1| = s), s = 0..n.
  std::vector<double> distribution;
  std::uint64_t configurations = 0;
};

/// Sum over configurations of an integer functional, grouped by the number of
/// open edges: value(p) = sum_k counts[k] p^k (1-p)^(m-k).
struct ConfigurationSum {
  std::vector<std::uint64_t> counts;  // size m + 1

  double operator()(double p) const;
};

/// Exact value by enumerating all 2^|E| configurations. Requires |E| <= 24.
ExactResult exact(const Graph& g, double p, Quantity q, const QueryArgs& args = {});

/// Full two-point table tau[x][y] at p.
std::vector<std::vector<double>> two_point_table(const Graph& g, double p);

/// The p at which chi(p) = lambda * n^(1/3), by bisection to 1e-12.
double exact_pc(const Graph& g, double lambda);

}  // namespace percolab::oracle
