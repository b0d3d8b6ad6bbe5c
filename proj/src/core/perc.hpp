#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "common.hpp"
#include "graphs.hpp"

namespace percolab::perc {

using graphs::Graph;

/// One (master seed, replica) pair realizes every p in [0,1] at once.
struct CouplingSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t replica = 0;
};

/// Deterministic i.i.d. uniform edge labels X_e in [0,1); an edge is p-open iff X_e < p.
///
/// For most graphs X_e is a counter-based hash of (seed, replica, edge id).
/// Complete graphs use a two-level field: the set S of edges with X_e below a
/// threshold q = 2/d is drawn by geometric skipping inside square tiles of the
/// adjacency triangle, and X_e is q*V_e on S and q + (1-q)*W_e off it. The
/// low neighbors of one vertex then cost O(sqrt n) to enumerate instead of
/// O(n). Labels stay a pure function of (seed, replica, edge id).
class LabelField {
 public:
  LabelField(const Graph& g, CouplingSeed seed);

  const Graph& graph() const noexcept { return graph_; }
  CouplingSeed seed() const noexcept { return seed_; }

  double label(EdgeId e) const;
  bool open(EdgeId e, double p) const { return label(e) < p; }

  /// Edges with label below this value are enumerable in O(q * edge_count).
  double sparse_threshold() const noexcept { return q_; }
  bool sparse() const noexcept { return q_ < 1.0; }

  /// Label of an edge that is hashed directly; valid for every edge when the
  /// field is not sparse, and for edges outside S otherwise.
  double direct_label(EdgeId e) const noexcept { return sparse() ? high_label(e) : low_label(e); }

  /// q * V_e: the label of an edge in S.
  double low_label(EdgeId e) const noexcept { return q_ * detail::to_unit(detail::combine(key_low_, e.value)); }
  /// q + (1 - q) * W_e, kept strictly below 1.
  double high_label(EdgeId e) const noexcept;

  /// f(u, v, edge, label) for every edge in S, u < v. Requires sparse().
  template <class F>
  void for_each_low_edge(F&& f) const;
  /// f(w, edge, label) for every edge {v, w} in S. Requires sparse().
  template <class F>
  void for_each_low_neighbor(Vertex v, F&& f) const;
  /// f(hi - row_base, lo) for S-edges whose larger endpoint lies in tile row a,
  /// sorted by (hi, lo).
  template <class F>
  void for_each_low_in_tile_row(std::uint32_t a, F&& f) const;

  std::uint32_t tile_side() const noexcept { return tile_; }
  std::uint32_t tile_count() const noexcept { return tiles_; }

 private:
  // f(i, j) for S-cells of tile (a, b), a >= b, in row-major order; the edge is
  // {a*T + i, b*T + j} and only cells with hi < n and hi > lo are reported.
  template <class F>
  void for_each_cell(std::uint32_t a, std::uint32_t b, F&& f) const;
  bool in_low_set(EdgeId e) const;

  Graph graph_;
  CouplingSeed seed_;
  std::uint64_t key_low_;
  std::uint64_t key_high_;
  std::uint64_t key_tile_;
  double q_ = 1.0;
  double inv_log_1mq_ = 0.0;
  std::uint32_t tile_ = 0;   // side T
  std::uint32_t tiles_ = 0;  // ceil(n / T)
};

/// Returns X_e < p for the labels induced by (g, seed).
bool edge_open(const Graph& g, CouplingSeed seed, EdgeId e, double p);

struct Cluster {
  Vertex origin = 0;
  std::vector<Vertex> members;       // BFS order, so dist is nondecreasing
  std::vector<std::uint32_t> dist;   // intrinsic distance of members[i] from origin
  std::uint64_t open_edges_within = 0;
  bool truncated = false;
  /// Open edges as pairs of indices into members; filled only on request.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

  std::size_t size() const noexcept { return members.size(); }
  std::optional<std::uint32_t> distance_to(Vertex v) const;
};

struct ExploreOptions {
  std::optional<std::uint64_t> cap;  // vertex budget; defaults to n
  bool record_edges = false;
};

Cluster explore_cluster(const Graph& g, CouplingSeed seed, double p, Vertex origin, ExploreOptions opts = {});

/// Intrinsic balls B_p(origin, r) for r = 0..r_max. Balls are prefixes of
/// members because members are in BFS order.
struct BallGrowth {
  Vertex origin = 0;
  std::uint32_t r_max = 0;
  std::vector<Vertex> members;
  std::vector<std::uint32_t> dist;
  std::vector<std::uint64_t> ball_size;     // |B(r)|
  std::vector<std::uint64_t> edge_count;    // open edges with both endpoints in B(r)
  std::uint64_t sprinkled = 0;              // see SprinkleReport

  std::span<const Vertex> ball(std::uint32_t r) const;
  std::span<const Vertex> boundary(std::uint32_t r) const;
  std::uint64_t boundary_size(std::uint32_t r) const;
};

BallGrowth grow_ball(const Graph& g, CouplingSeed seed, double p, Vertex origin, std::uint32_t r_max);

struct SprinkleReport {
  double p_low = 0.0;
  double p_high = 0.0;
  /// Distinct open edges examined by the p_high exploration whose label lies in [p_low, p_high).
  std::uint64_t sprinkled_count = 0;
};

struct CoupledSweep {
  std::vector<double> p_list;
  std::vector<BallGrowth> balls;
  std::vector<SprinkleReport> sprinkles;  // one per consecutive pair
};

CoupledSweep coupled_sweep(const Graph& g, CouplingSeed seed, Vertex origin, std::uint32_t r_max,
                           std::vector<double> p_list);

struct LargestComponent {
  std::uint64_t size = 0;
  Vertex representative = 0;  // smallest vertex of the largest (first on ties) component
};

LargestComponent largest_component(const Graph& g, CouplingSeed seed, double p);

/// Component root of every vertex and the size of each root's component.
struct ComponentLabels {
  std::vector<Vertex> root;
  std::vector<std::uint32_t> size;  // indexed by root; zero for non-roots
};

ComponentLabels label_components(const Graph& g, CouplingSeed seed, double p);

/// f(u, v, edge, label) for every p-open edge.
template <class F>
void for_each_open_edge(const LabelField& labels, double p, F&& f);

// ---------------------------------------------------------------------------

template <class F>
void LabelField::for_each_cell(std::uint32_t a, std::uint32_t b, F&& f) const {
  const std::uint64_t n = graph_.vertex_count();
  const std::uint64_t T = tile_;
  const double cells = static_cast<double>(T * T);
  const std::uint64_t key = detail::combine(key_tile_, std::uint64_t{a} * (a + 1) / 2 + b);
  double pos = -1.0;
  for (std::uint64_t k = 0;; ++k) {
    const double u = 1.0 - detail::to_unit(detail::combine(key, k));  // (0, 1]
    pos += 1.0 + std::floor(std::log(u) * inv_log_1mq_);
    if (pos >= cells) return;
    const auto c = static_cast<std::uint64_t>(pos);
    const std::uint64_t i = c / T;
    const std::uint64_t j = c % T;
    const std::uint64_t hi = a * T + i;
    const std::uint64_t lo = b * T + j;
    if (hi < n && hi > lo) f(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
  }
}

template <class F>
void LabelField::for_each_low_edge(F&& f) const {
  const std::uint32_t T = tile_;
  for (std::uint32_t a = 0; a < tiles_; ++a)
    for (std::uint32_t b = 0; b <= a; ++b)
      for_each_cell(a, b, [&](std::uint32_t i, std::uint32_t j) {
        const Vertex hi = a * T + i;
        const Vertex lo = b * T + j;
        const EdgeId e{graphs::detail::complete_edge_id(lo, hi)};
        f(lo, hi, e, low_label(e));
      });
}

template <class F>
void LabelField::for_each_low_neighbor(Vertex v, F&& f) const {
  const std::uint32_t T = tile_;
  const std::uint32_t av = v / T;
  const std::uint32_t iv = v - av * T;
  const auto emit = [&](Vertex w) {
    const EdgeId e{graphs::detail::complete_edge_id(v, w)};
    f(w, e, low_label(e));
  };
  for (std::uint32_t b = 0; b < av; ++b)
    for_each_cell(av, b, [&](std::uint32_t i, std::uint32_t j) {
      if (i == iv) emit(b * T + j);
    });
  for_each_cell(av, av, [&](std::uint32_t i, std::uint32_t j) {
    if (i == iv) emit(av * T + j);
    else if (j == iv) emit(av * T + i);
  });
  for (std::uint32_t a = av + 1; a < tiles_; ++a)
    for_each_cell(a, av, [&](std::uint32_t i, std::uint32_t j) {
      if (j == iv) emit(a * T + i);
    });
}

template <class F>
void LabelField::for_each_low_in_tile_row(std::uint32_t a, F&& f) const {
  const std::uint32_t T = tile_;
  std::vector<std::vector<Vertex>> rows(T);
  for (std::uint32_t b = 0; b <= a; ++b)
    for_each_cell(a, b, [&](std::uint32_t i, std::uint32_t j) { rows[i].push_back(b * T + j); });
  for (std::uint32_t i = 0; i < T; ++i)
    for (Vertex lo : rows[i]) f(i, lo);
}

template <class F>
void for_each_open_edge(const LabelField& labels, double p, F&& f) {
  const Graph& g = labels.graph();
  if (!labels.sparse()) {
    g.for_each_edge([&](Vertex u, Vertex v, EdgeId e) {
      const double x = labels.direct_label(e);
      if (x < p) f(u, v, e, x);
    });
    return;
  }
  const double q = labels.sparse_threshold();
  if (p <= q) {
    labels.for_each_low_edge([&](Vertex u, Vertex v, EdgeId e, double x) {
      if (x < p) f(u, v, e, x);
    });
    return;
  }
  // Dense regime: walk every edge row by row, merging in the S-edges of the row.
  const std::uint32_t T = labels.tile_side();
  const std::uint32_t n = g.vertex_count();
  std::vector<std::vector<Vertex>> low_rows(T);
  for (std::uint32_t a = 0; a < labels.tile_count(); ++a) {
    for (auto& r : low_rows) r.clear();
    labels.for_each_low_in_tile_row(a, [&](std::uint32_t i, Vertex lo) { low_rows[i].push_back(lo); });
    for (std::uint32_t i = 0; i < T && a * T + i < n; ++i) {
      const Vertex hi = a * T + i;
      const auto& lows = low_rows[i];
      std::size_t cursor = 0;
      for (Vertex lo = 0; lo < hi; ++lo) {
        const EdgeId e{graphs::detail::complete_edge_id(lo, hi)};
        double x;
        if (cursor < lows.size() && lows[cursor] == lo) {
          ++cursor;
          x = labels.low_label(e);
        } else {
          x = labels.high_label(e);
        }
        if (x < p) f(lo, hi, e, x);
      }
    }
  }
}

}  // namespace percolab::perc
