#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <numeric>

namespace percolab::oracle {

namespace {

constexpr struct {
  Quantity q;
  const char* name;
} kNames[] = {
    {Quantity::Tau, "tau"},           {Quantity::Chi, "chi"},          {Quantity::Nabla, "nabla"},
    {Quantity::BallMean, "ball_mean"}, {Quantity::OneArm, "one_arm"}, {Quantity::C1Mean, "c1_mean"},
    {Quantity::C1Distribution, "c1_distribution"}, {Quantity::Tail, "tail"},
};

void check_size(const Graph& g) {
  if (g.edge_count() > kMaxEdges)
    throw UsageError("exact enumeration is limited to " + std::to_string(kMaxEdges) + " edges; graph has " +
                     std::to_string(g.edge_count()));
  if (g.vertex_count() > kMaxVertices)
    throw UsageError("exact enumeration is limited to " + std::to_string(kMaxVertices) + " vertices");
}

// One configuration: component roots and, on request, BFS distances from a source.
class Configuration {
 public:
  explicit Configuration(const Graph& g) : n_(g.vertex_count()), parent_(n_), size_(n_), adj_(n_) {
    g.for_each_edge([&](Vertex u, Vertex v, EdgeId) { edges_.emplace_back(u, v); });
  }

  std::uint64_t edge_count() const { return edges_.size(); }
  std::uint32_t vertex_count() const { return n_; }

  void load(std::uint32_t mask) {
    std::iota(parent_.begin(), parent_.end(), Vertex{0});
    std::fill(size_.begin(), size_.end(), 1u);
    for (auto& a : adj_) a.clear();
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (!((mask >> i) & 1u)) continue;
      const auto [u, v] = edges_[i];
      adj_[u].push_back(v);
      adj_[v].push_back(u);
      Vertex a = find(u);
      Vertex b = find(v);
      if (a == b) continue;
      if (size_[a] < size_[b]) std::swap(a, b);
      parent_[b] = a;
      size_[a] += size_[b];
    }
  }

  Vertex find(Vertex v) {
    while (parent_[v] != v) v = parent_[v] = parent_[parent_[v]];
    return v;
  }

  std::uint32_t component_size(Vertex v) { return size_[find(v)]; }

  std::uint32_t largest() {
    std::uint32_t best = 0;
    for (Vertex v = 0; v < n_; ++v)
      if (parent_[v] == v) best = std::max(best, size_[v]);
    return best;
  }

  // dist[v] for every v, -1 when unreachable.
  const std::vector<int>& distances(Vertex s) {
    dist_.assign(n_, -1);
    order_.clear();
    dist_[s] = 0;
    order_.push_back(s);
    for (std::size_t i = 0; i < order_.size(); ++i) {
      const Vertex v = order_[i];
      for (Vertex w : adj_[v])
        if (dist_[w] < 0) {
          dist_[w] = dist_[v] + 1;
          order_.push_back(w);
        }
    }
    return dist_;
  }

 private:
  std::uint32_t n_;
  std::vector<std::pair<Vertex, Vertex>> edges_;
  std::vector<Vertex> parent_;
  std::vector<std::uint32_t> size_;
  std::vector<std::vector<Vertex>> adj_;
  std::vector<int> dist_;
  std::vector<Vertex> order_;
};

// Calls f(config, k) for every configuration, k = number of open edges.
template <class F>
void enumerate(const Graph& g, F&& f) {
  check_size(g);
  Configuration c(g);
  const std::uint32_t total = 1u << c.edge_count();
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    c.load(mask);
    f(c, static_cast<std::size_t>(std::popcount(mask)));
  }
}

ConfigurationSum empty_sum(const Graph& g) { return {std::vector<std::uint64_t>(g.edge_count() + 1, 0)}; }

}  // namespace

const char* quantity_name(Quantity q) noexcept {
  for (const auto& e : kNames)
    if (e.q == q) return e.name;
  return "unknown";
}

Quantity parse_quantity(const std::string& name) {
  for (const auto& e : kNames)
    if (name == e.name) return e.q;
  throw UsageError("unknown quantity \"" + name +
                   "\" (expected tau, chi, nabla, ball_mean, one_arm, c1_mean, c1_distribution or tail)");
}

double ConfigurationSum::operator()(double p) const {
  const auto m = static_cast<int>(counts.size()) - 1;
  double sum = 0.0;
  double carry = 0.0;
  for (int k = 0; k <= m; ++k) {
    if (counts[k] == 0) continue;
    const double term = static_cast<double>(counts[k]) * std::pow(p, k) * std::pow(1.0 - p, m - k);
    const double y = term - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

std::vector<std::vector<double>> two_point_table(const Graph& g, double p) {
  require(p >= 0.0 && p <= 1.0, "probability must lie in [0, 1]");
  const std::uint32_t n = g.vertex_count();
  std::vector<std::vector<ConfigurationSum>> sums(n, std::vector<ConfigurationSum>(n, empty_sum(g)));
  std::vector<Vertex> root(n);
  enumerate(g, [&](Configuration& c, std::size_t k) {
    for (Vertex v = 0; v < n; ++v) root[v] = c.find(v);
    for (Vertex x = 0; x < n; ++x)
      for (Vertex y = x; y < n; ++y)
        if (root[x] == root[y]) ++sums[x][y].counts[k];
  });
  std::vector<std::vector<double>> tau(n, std::vector<double>(n));
  for (Vertex x = 0; x < n; ++x)
    for (Vertex y = x; y < n; ++y) tau[x][y] = tau[y][x] = sums[x][y](p);
  return tau;
}

ExactResult exact(const Graph& g, double p, Quantity q, const QueryArgs& args) {
  require(p >= 0.0 && p <= 1.0, "probability must lie in [0, 1]");
  check_size(g);
  g.check_vertex(args.x);
  g.check_vertex(args.y);
  const std::uint32_t n = g.vertex_count();
  ExactResult out;
  out.quantity = q;
  out.p = p;
  out.configurations = std::uint64_t{1} << g.edge_count();

  if (q == Quantity::Nabla) {
    const auto tau = two_point_table(g, p);
    double sum = 0.0;
    for (Vertex u = 0; u < n; ++u)
      for (Vertex v = 0; v < n; ++v) sum += tau[args.x][u] * tau[u][v] * tau[v][args.y];
    out.value = sum;
    return out;
  }

  if (q == Quantity::C1Distribution) {
    std::vector<ConfigurationSum> by_size(std::size_t{n} + 1, empty_sum(g));
    enumerate(g, [&](Configuration& c, std::size_t k) { ++by_size[c.largest()].counts[k]; });
    out.distribution.resize(by_size.size());
    for (std::size_t s = 0; s < by_size.size(); ++s) {
      out.distribution[s] = by_size[s](p);
      out.value += static_cast<double>(s) * out.distribution[s];
    }
    return out;
  }

  auto sum = empty_sum(g);
  enumerate(g, [&](Configuration& c, std::size_t k) {
    std::uint64_t f = 0;
    switch (q) {
      case Quantity::Tau: f = c.find(args.x) == c.find(args.y); break;
      case Quantity::Chi: f = c.component_size(args.x); break;
      case Quantity::BallMean: {
        const auto& d = c.distances(args.x);
        f = static_cast<std::uint64_t>(
            std::count_if(d.begin(), d.end(), [&](int dv) { return dv >= 0 && dv <= static_cast<int>(args.r); }));
        break;
      }
      case Quantity::OneArm: {
        const auto& d = c.distances(args.x);
        f = std::find(d.begin(), d.end(), static_cast<int>(args.r)) != d.end();
        break;
      }
      case Quantity::C1Mean: f = c.largest(); break;
      case Quantity::Tail: f = c.component_size(args.x) >= args.k; break;
      default: break;
    }
    sum.counts[k] += f;
  });
  out.value = sum(p);
  return out;
}

double exact_pc(const Graph& g, double lambda) {
  check_size(g);
  const double n = g.vertex_count();
  // Rounding in lambda * n^(1/3) is forgiven at the endpoints.
  const double slack = 1e-12 * n;
  const double raw = lambda * std::cbrt(n);
  if (!(raw >= 1.0 - slack && raw <= n + slack)) {
    throw InfeasibleError("no critical point: lambda * n^(1/3) must lie in [1, n], i.e. lambda in [" +
                          std::to_string(1.0 / std::cbrt(n)) + ", " + std::to_string(n / std::cbrt(n)) + "]");
  }
  const double target = std::clamp(raw, 1.0, n);
  require(g.is_regular(), "exact_pc needs a regular graph");
  auto chi = empty_sum(g);
  enumerate(g, [&](Configuration& c, std::size_t k) { chi.counts[k] += c.component_size(0); });
  if (chi(1.0) < n) throw InfeasibleError("no critical point: graph is disconnected, chi(1) < n");
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (chi(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace percolab::oracle
