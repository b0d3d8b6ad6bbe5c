#include "perc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace percolab::perc {

namespace {

constexpr std::uint64_t kStreamLow = 0x4c4f57ULL;
constexpr std::uint64_t kStreamHigh = 0x48494748ULL;
constexpr std::uint64_t kStreamTile = 0x54494c45ULL;
constexpr double kMeanLowDegree = 2.0;
constexpr double kBelowOne = 0x1.fffffffffffffp-1;
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
// Above this many vertices the visit table falls back to a hash map.
constexpr std::uint32_t kDenseVisitLimit = 1u << 26;

// Per-thread scratch reused across replicas.
struct Workspace {
  std::vector<std::uint32_t> stamp;
  std::vector<std::uint32_t> slot;
  std::uint32_t generation = 0;
  std::unordered_map<Vertex, std::uint32_t> slot_map;
  bool use_map = false;

  std::vector<std::uint32_t> mark;
  std::uint32_t mark_generation = 0;

  std::vector<Vertex> uf_parent;
  std::vector<std::uint32_t> uf_size;

  void begin_visit(std::uint32_t n) {
    use_map = n > kDenseVisitLimit;
    if (use_map) {
      slot_map.clear();
      return;
    }
    if (stamp.size() < n) {
      stamp.assign(n, 0);
      slot.resize(n);
      generation = 0;
    }
    if (++generation == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      generation = 1;
    }
  }

  std::uint32_t index_of(Vertex v) const {
    if (use_map) {
      const auto it = slot_map.find(v);
      return it == slot_map.end() ? kNone : it->second;
    }
    return stamp[v] == generation ? slot[v] : kNone;
  }

  void set_index(Vertex v, std::uint32_t idx) {
    if (use_map) {
      slot_map[v] = idx;
    } else {
      stamp[v] = generation;
      slot[v] = idx;
    }
  }

  void begin_marks(std::uint32_t n) {
    if (mark.size() < n) {
      mark.assign(n, 0);
      mark_generation = 0;
    }
    if (++mark_generation == 0) {
      std::fill(mark.begin(), mark.end(), 0);
      mark_generation = 1;
    }
  }
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

// Open neighborhoods of one replica's percolated graph.
class OpenGraph {
 public:
  OpenGraph(const LabelField& labels, Workspace& ws)
      : labels_(labels), graph_(labels.graph()), ws_(ws), q_(labels.sparse_threshold()) {}

  // f(w, edge, label) for every p-open edge at v.
  template <class F>
  void for_each_open(Vertex v, double p, F&& f) const {
    if (!labels_.sparse()) {
      graph_.for_each_incident(v, [&](Vertex w, EdgeId e) {
        const double x = labels_.direct_label(e);
        if (x < p) f(w, e, x);
      });
      return;
    }
    if (p <= q_) {
      labels_.for_each_low_neighbor(v, [&](Vertex w, EdgeId e, double x) {
        if (x < p) f(w, e, x);
      });
      return;
    }
    // Every S-edge is open here; the remaining edges carry high labels.
    const std::uint32_t n = graph_.vertex_count();
    ws_.begin_marks(n);
    ws_.mark[v] = ws_.mark_generation;
    labels_.for_each_low_neighbor(v, [&](Vertex w, EdgeId e, double x) {
      ws_.mark[w] = ws_.mark_generation;
      f(w, e, x);
    });
    for (Vertex w = 0; w < n; ++w) {
      if (ws_.mark[w] == ws_.mark_generation) continue;
      const EdgeId e{graphs::detail::complete_edge_id(v, w)};
      const double x = labels_.high_label(e);
      if (x < p) f(w, e, x);
    }
  }

 private:
  const LabelField& labels_;
  const Graph& graph_;
  Workspace& ws_;
  double q_;
};

void check_probability(double p) {
  require(p >= 0.0 && p <= 1.0, "probability must lie in [0, 1]");
}

// Breadth-first ball growth shared by grow_ball and coupled_sweep. Edges are
// charged to the level of their farther endpoint; an edge is seen first from
// the endpoint explored earlier.
BallGrowth grow(const OpenGraph& open, const Graph& g, double p, Vertex origin, std::uint32_t r_max, double p_low,
                Workspace& ws) {
  BallGrowth out;
  out.origin = origin;
  out.r_max = r_max;
  std::vector<std::uint64_t> level_edges(std::size_t{r_max} + 1, 0);
  ws.begin_visit(g.vertex_count());
  out.members.push_back(origin);
  out.dist.push_back(0);
  ws.set_index(origin, 0);
  for (std::uint32_t head = 0; head < out.members.size(); ++head) {
    const Vertex v = out.members[head];
    const std::uint32_t dv = out.dist[head];
    open.for_each_open(v, p, [&](Vertex w, EdgeId, double x) {
      const std::uint32_t idx = ws.index_of(w);
      if (idx == kNone) {
        if (dv == r_max) return;
        if (x >= p_low) ++out.sprinkled;
        ws.set_index(w, static_cast<std::uint32_t>(out.members.size()));
        out.members.push_back(w);
        out.dist.push_back(dv + 1);
        ++level_edges[dv + 1];
      } else if (idx > head) {
        if (x >= p_low) ++out.sprinkled;
        ++level_edges[out.dist[idx]];
      }
    });
  }
  out.ball_size.assign(std::size_t{r_max} + 1, 0);
  out.edge_count.assign(std::size_t{r_max} + 1, 0);
  for (const auto d : out.dist) ++out.ball_size[d];
  for (std::uint32_t r = 0; r <= r_max; ++r) {
    if (r > 0) {
      out.ball_size[r] += out.ball_size[r - 1];
      out.edge_count[r] = out.edge_count[r - 1];
    }
    out.edge_count[r] += level_edges[r];
  }
  return out;
}

struct UnionFind {
  std::vector<Vertex>& parent;
  std::vector<std::uint32_t>& size;

  UnionFind(std::uint32_t n, Workspace& ws) : parent(ws.uf_parent), size(ws.uf_size) {
    parent.resize(n);
    size.assign(n, 1);
    for (Vertex v = 0; v < n; ++v) parent[v] = v;
  }

  Vertex find(Vertex v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }

  void unite(Vertex a, Vertex b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

}  // namespace

LabelField::LabelField(const Graph& g, CouplingSeed seed) : graph_(g), seed_(seed) {
  const std::uint64_t base = detail::combine(seed.master_seed, seed.replica);
  key_low_ = detail::combine(base, kStreamLow);
  key_high_ = detail::combine(base, kStreamHigh);
  key_tile_ = detail::combine(base, kStreamTile);
  if (g.family() == graphs::Family::Complete && g.degree() > 2) {
    q_ = kMeanLowDegree / g.degree();
    inv_log_1mq_ = 1.0 / std::log1p(-q_);
    // About one S-cell per tile balances tile overhead against cells scanned.
    tile_ = static_cast<std::uint32_t>(std::ceil(std::sqrt(1.0 / q_)));
    tiles_ = (g.vertex_count() + tile_ - 1) / tile_;
  }
}

double LabelField::high_label(EdgeId e) const noexcept {
  const double x = q_ + (1.0 - q_) * detail::to_unit(detail::combine(key_high_, e.value));
  return std::min(x, kBelowOne);
}

bool LabelField::in_low_set(EdgeId e) const {
  const auto [lo, hi] = graph_.endpoints(e);
  const std::uint32_t a = hi / tile_;
  const std::uint32_t b = lo / tile_;
  bool found = false;
  for_each_cell(a, b, [&](std::uint32_t i, std::uint32_t j) { found |= a * tile_ + i == hi && b * tile_ + j == lo; });
  return found;
}

double LabelField::label(EdgeId e) const {
  require(e.value < graph_.edge_count(), "edge id out of range");
  if (!sparse()) return low_label(e);
  return in_low_set(e) ? low_label(e) : high_label(e);
}

bool edge_open(const Graph& g, CouplingSeed seed, EdgeId e, double p) {
  check_probability(p);
  return LabelField(g, seed).open(e, p);
}

std::optional<std::uint32_t> Cluster::distance_to(Vertex v) const {
  for (std::size_t i = 0; i < members.size(); ++i)
    if (members[i] == v) return dist[i];
  return std::nullopt;
}

Cluster explore_cluster(const Graph& g, CouplingSeed seed, double p, Vertex origin, ExploreOptions opts) {
  check_probability(p);
  g.check_vertex(origin);
  const std::uint64_t cap = opts.cap.value_or(g.vertex_count());
  require(cap >= 1, "exploration cap must be >= 1");

  auto& ws = workspace();
  const LabelField labels(g, seed);
  const OpenGraph open(labels, ws);

  Cluster c;
  c.origin = origin;
  ws.begin_visit(g.vertex_count());
  c.members.push_back(origin);
  c.dist.push_back(0);
  ws.set_index(origin, 0);
  for (std::uint32_t head = 0; head < c.members.size() && !c.truncated; ++head) {
    const Vertex v = c.members[head];
    const std::uint32_t dv = c.dist[head];
    open.for_each_open(v, p, [&](Vertex w, EdgeId, double) {
      if (c.truncated) return;
      std::uint32_t idx = ws.index_of(w);
      if (idx == kNone) {
        if (c.members.size() >= cap) {
          c.truncated = true;
          return;
        }
        idx = static_cast<std::uint32_t>(c.members.size());
        ws.set_index(w, idx);
        c.members.push_back(w);
        c.dist.push_back(dv + 1);
      } else if (idx < head) {
        return;
      }
      ++c.open_edges_within;
      if (opts.record_edges) c.edges.emplace_back(head, idx);
    });
  }
  return c;
}

std::span<const Vertex> BallGrowth::ball(std::uint32_t r) const {
  r = std::min(r, r_max);
  return {members.data(), ball_size[r]};
}

std::span<const Vertex> BallGrowth::boundary(std::uint32_t r) const {
  r = std::min(r, r_max);
  const std::uint64_t start = r == 0 ? 0 : ball_size[r - 1];
  return {members.data() + start, ball_size[r] - start};
}

std::uint64_t BallGrowth::boundary_size(std::uint32_t r) const { return boundary(r).size(); }

BallGrowth grow_ball(const Graph& g, CouplingSeed seed, double p, Vertex origin, std::uint32_t r_max) {
  check_probability(p);
  g.check_vertex(origin);
  auto& ws = workspace();
  const LabelField labels(g, seed);
  const OpenGraph open(labels, ws);
  return grow(open, g, p, origin, r_max, p, ws);
}

CoupledSweep coupled_sweep(const Graph& g, CouplingSeed seed, Vertex origin, std::uint32_t r_max,
                           std::vector<double> p_list) {
  g.check_vertex(origin);
  require(!p_list.empty(), "coupled sweep needs at least one probability");
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    check_probability(p_list[i]);
    require(i == 0 || p_list[i - 1] <= p_list[i], "coupled sweep probabilities must be ascending");
  }
  auto& ws = workspace();
  const LabelField labels(g, seed);
  const OpenGraph open(labels, ws);

  CoupledSweep out;
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    const double p_low = i == 0 ? p_list[0] : p_list[i - 1];
    out.balls.push_back(grow(open, g, p_list[i], origin, r_max, p_low, ws));
    if (i > 0) out.sprinkles.push_back({p_low, p_list[i], out.balls.back().sprinkled});
  }
  out.p_list = std::move(p_list);
  return out;
}

ComponentLabels label_components(const Graph& g, CouplingSeed seed, double p) {
  check_probability(p);
  auto& ws = workspace();
  const std::uint32_t n = g.vertex_count();
  UnionFind uf(n, ws);
  for_each_open_edge(LabelField(g, seed), p, [&](Vertex u, Vertex v, EdgeId, double) { uf.unite(u, v); });
  ComponentLabels out;
  out.root.resize(n);
  out.size.assign(n, 0);
  for (Vertex v = 0; v < n; ++v) {
    out.root[v] = uf.find(v);
    ++out.size[out.root[v]];
  }
  return out;
}

LargestComponent largest_component(const Graph& g, CouplingSeed seed, double p) {
  const auto comps = label_components(g, seed, p);
  LargestComponent best;
  std::vector<char> seen(g.vertex_count(), 0);
  // Ascending scan: the first vertex met in a component is its smallest.
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    const Vertex r = comps.root[v];
    if (seen[r]) continue;
    seen[r] = 1;
    if (comps.size[r] > best.size) best = {comps.size[r], v};
  }
  return best;
}

}  // namespace percolab::perc
