#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "common.hpp"

namespace percolab::graphs {

enum class Family { Torus, Hamming, Complete, Explicit };

const char* family_name(Family f) noexcept;

namespace detail {

struct TorusShape {
  std::uint32_t side = 0;
  std::uint32_t dim = 0;
  std::vector<std::uint32_t> strides;  // side^k
};

struct HammingShape {
  std::uint32_t dim = 0;
};

struct CompleteShape {
  std::uint32_t n = 0;
};

// Sorted adjacency with the canonical id of every incident edge.
struct ExplicitShape {
  std::uint32_t n = 0;
  std::vector<std::uint64_t> offsets;
  std::vector<Vertex> targets;
  std::vector<std::uint64_t> edge_ids;
  std::vector<std::pair<Vertex, Vertex>> edges;  // id -> (u, v), u < v
};

inline Vertex flip_bit(Vertex v, std::uint32_t k) { return v ^ (Vertex{1} << k); }

// Hamming edge {u, u|bit k} with bit k of u clear: id = k * 2^(m-1) + (u with bit k removed).
inline std::uint64_t hamming_edge_id(std::uint32_t dim, Vertex u, std::uint32_t k) {
  const Vertex low = u & ((Vertex{1} << k) - 1);
  const Vertex high = (u >> (k + 1)) << k;
  return (std::uint64_t{k} << (dim - 1)) + (high | low);
}

inline std::uint64_t complete_edge_id(Vertex a, Vertex b) {
  const std::uint64_t hi = a < b ? b : a;
  const std::uint64_t lo = a < b ? a : b;
  return hi * (hi - 1) / 2 + lo;
}

std::pair<Vertex, Vertex> complete_endpoints(std::uint64_t id);

}  // namespace detail

/// Finite graph with O(1) neighbor arithmetic for the built-in families.
///
/// Vertex numbering: the torus uses mixed-radix coordinates (least significant
/// coordinate first), the Hamming cube uses the bitmask, the complete graph
/// uses 0..n-1. Values are immutable and cheap to copy.
class Graph {
 public:
  static Graph torus(std::uint32_t side, std::uint32_t dim);
  static Graph hamming(std::uint32_t dim);
  static Graph complete(std::uint32_t n);
  /// Builds an explicit graph. Self-loops and duplicate edges are rejected;
  /// irregular graphs are accepted and reported by is_regular().
  static Graph from_edges(std::uint32_t n, std::vector<std::pair<Vertex, Vertex>> edges);
  /// Reads the plain-text edge-list format ("n m" followed by m lines "u v", u < v).
  static Graph load(const std::filesystem::path& path);
  static Graph parse(const std::string& text);

  Family family() const noexcept { return family_; }
  std::string describe() const;

  std::uint32_t vertex_count() const noexcept { return n_; }
  /// Common degree; the maximum degree when the graph is irregular.
  std::uint32_t degree() const noexcept { return d_; }
  std::uint32_t degree(Vertex v) const;
  bool is_regular() const noexcept { return regular_; }
  std::uint64_t edge_count() const noexcept { return m_; }

  std::vector<Vertex> neighbors(Vertex v) const;
  EdgeId edge_id(Vertex u, Vertex v) const;
  /// Endpoints (u, v) of an edge with u < v.
  std::pair<Vertex, Vertex> endpoints(EdgeId e) const;
  /// Vertices at graph distance <= r from v, in BFS order.
  std::vector<Vertex> ball(Vertex v, std::uint32_t r) const;

  /// f(w, edge) for every neighbor w of v.
  template <class F>
  void for_each_incident(Vertex v, F&& f) const;
  /// f(u, v, edge) for every edge, u < v, in increasing id order.
  template <class F>
  void for_each_edge(F&& f) const;

  void check_vertex(Vertex v) const {
    if (v >= n_) throw UsageError("vertex " + std::to_string(v) + " out of range [0, " + std::to_string(n_) + ")");
  }

 private:
  using Shape = std::variant<detail::TorusShape, detail::HammingShape, detail::CompleteShape,
                             std::shared_ptr<const detail::ExplicitShape>>;

  Graph(Family family, Shape shape, std::uint32_t n, std::uint32_t d, std::uint64_t m, bool regular)
      : family_(family), shape_(std::move(shape)), n_(n), d_(d), m_(m), regular_(regular) {}

  Family family_;
  Shape shape_;
  std::uint32_t n_;
  std::uint32_t d_;
  std::uint64_t m_;
  bool regular_;
};

template <class F>
void Graph::for_each_incident(Vertex v, F&& f) const {
  switch (shape_.index()) {
    case 0: {
      const auto& t = std::get<detail::TorusShape>(shape_);
      if (t.side == 2) {
        for (std::uint32_t k = 0; k < t.dim; ++k) {
          const Vertex w = detail::flip_bit(v, k);
          const Vertex lo = (v >> k) & 1 ? w : v;
          f(w, EdgeId{detail::hamming_edge_id(t.dim, lo, k)});
        }
        return;
      }
      for (std::uint32_t k = 0; k < t.dim; ++k) {
        const std::uint32_t stride = t.strides[k];
        const std::uint32_t c = (v / stride) % t.side;
        const Vertex up = c + 1 == t.side ? v - (t.side - 1) * stride : v + stride;
        const Vertex down = c == 0 ? v + (t.side - 1) * stride : v - stride;
        f(up, EdgeId{std::uint64_t{v} * t.dim + k});
        f(down, EdgeId{std::uint64_t{down} * t.dim + k});
      }
      return;
    }
    case 1: {
      const auto dim = std::get<detail::HammingShape>(shape_).dim;
      for (std::uint32_t k = 0; k < dim; ++k) {
        const Vertex w = detail::flip_bit(v, k);
        const Vertex lo = (v >> k) & 1 ? w : v;
        f(w, EdgeId{detail::hamming_edge_id(dim, lo, k)});
      }
      return;
    }
    case 2: {
      for (Vertex w = 0; w < n_; ++w) {
        if (w != v) f(w, EdgeId{detail::complete_edge_id(v, w)});
      }
      return;
    }
    default: {
      const auto& x = *std::get<3>(shape_);
      for (std::uint64_t i = x.offsets[v]; i < x.offsets[v + 1]; ++i) f(x.targets[i], EdgeId{x.edge_ids[i]});
    }
  }
}

template <class F>
void Graph::for_each_edge(F&& f) const {
  switch (shape_.index()) {
    case 2: {
      std::uint64_t id = 0;
      for (Vertex v = 1; v < n_; ++v)
        for (Vertex u = 0; u < v; ++u) f(u, v, EdgeId{id++});
      return;
    }
    case 3: {
      const auto& x = *std::get<3>(shape_);
      for (std::uint64_t id = 0; id < x.edges.size(); ++id) f(x.edges[id].first, x.edges[id].second, EdgeId{id});
      return;
    }
    default:
      for (std::uint64_t id = 0; id < m_; ++id) {
        const auto [u, v] = endpoints(EdgeId{id});
        f(u, v, EdgeId{id});
      }
  }
}

}  // namespace percolab::graphs
