#include "geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace percolab::geometry {

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();
constexpr double kThreshold = 0.25;
// Spectral TV carries rounding of order 1e-15; exact ties at 1/4 occur on small graphs.
constexpr double kThresholdSlack = 1e-12;
// Spectral terms with lambda^t below this are dropped from P^t - Pi.
constexpr double kNegligible = 1e-18;
constexpr double kPowerTolerance = 1e-9;
constexpr std::uint64_t kPowerMaxIterations = 100000;

// Eigendecomposition of the symmetrized lazy operator D^(1/2) P D^(-1/2).
class LazySpectrum {
 public:
  explicit LazySpectrum(const ClusterGraph& c) : m_(c.size()), sqrt_deg_(m_) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m_, m_);
    for (std::uint32_t v = 0; v < m_; ++v) sqrt_deg_[v] = std::sqrt(static_cast<double>(c.degree(v)));
    for (std::uint32_t v = 0; v < m_; ++v) {
      s(v, v) = 0.5;
      for (auto w : c.neighbors(v)) s(v, w) = 0.5 / (sqrt_deg_[v] * sqrt_deg_[w]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    values_ = solver.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
    vectors_ = solver.eigenvectors();
  }

  // Max (or single-start) TV after t steps. The top eigenpair is pi itself.
  double tv(std::uint64_t t, std::optional<std::uint32_t> start) const {
    const Eigen::Index top = m_ - 1;
    Eigen::Index first = top;
    while (first > 0 && std::pow(values_[first - 1], static_cast<double>(t)) >= kNegligible) --first;
    const Eigen::Index k = top - first;
    if (k == 0) return 0.0;
    const auto phi = vectors_.middleCols(first, k);
    Eigen::VectorXd weights(k);
    for (Eigen::Index i = 0; i < k; ++i) weights[i] = std::pow(values_[first + i], static_cast<double>(t));
    const auto row_tv = [&](Eigen::Index x, const Eigen::RowVectorXd& row) {
      double sum = 0.0;
      for (Eigen::Index y = 0; y < m_; ++y) sum += std::abs(row[y]) * sqrt_deg_[y];
      return 0.5 * sum / sqrt_deg_[x];
    };
    if (start) {
      const Eigen::RowVectorXd row = (phi.row(*start).array() * weights.transpose().array()).matrix() * phi.transpose();
      return row_tv(*start, row);
    }
    const Eigen::MatrixXd diff = (phi * weights.asDiagonal()) * phi.transpose();
    double worst = 0.0;
    for (Eigen::Index x = 0; x < m_; ++x) worst = std::max(worst, row_tv(x, diff.row(x)));
    return worst;
  }

 private:
  Eigen::Index m_;
  Eigen::VectorXd sqrt_deg_;
  Eigen::VectorXd values_;  // ascending
  Eigen::MatrixXd vectors_;
};

void require_connected(const ClusterGraph& c) {
  const auto d = c.distances(0);
  if (std::find(d.begin(), d.end(), kUnreached) != d.end()) throw UsageError("cluster graph is disconnected");
}

double relaxation_time(const ClusterGraph& c) {
  const std::uint32_t m = c.size();
  const double two_e = 2.0 * static_cast<double>(c.edge_count());
  std::vector<double> root_pi(m);
  std::vector<double> inv_sqrt_deg(m);
  for (std::uint32_t v = 0; v < m; ++v) {
    root_pi[v] = std::sqrt(c.degree(v) / two_e);
    inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(c.degree(v)));
  }
  const auto deflate_normalize = [&](std::vector<double>& v) {
    double dot = 0.0;
    for (std::uint32_t i = 0; i < m; ++i) dot += v[i] * root_pi[i];
    double norm = 0.0;
    for (std::uint32_t i = 0; i < m; ++i) {
      v[i] -= dot * root_pi[i];
      norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
  };
  std::vector<double> v(m);
  for (std::uint32_t i = 0; i < m; ++i) v[i] = std::sin(1.0 + i);
  deflate_normalize(v);
  std::vector<double> w(m);
  double lambda = 0.0;
  for (std::uint64_t it = 0; it < kPowerMaxIterations; ++it) {
    for (std::uint32_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (auto j : c.neighbors(i)) acc += v[j] * inv_sqrt_deg[j];
      w[i] = 0.5 * v[i] + 0.5 * inv_sqrt_deg[i] * acc;
    }
    double next = 0.0;
    for (std::uint32_t i = 0; i < m; ++i) next += v[i] * w[i];
    deflate_normalize(w);
    std::swap(v, w);
    const bool done = std::abs(next - lambda) < kPowerTolerance;
    lambda = next;
    if (done) break;
  }
  return 1.0 / (1.0 - std::min(lambda, 1.0 - 1e-15));
}

// First t >= base with f(t) <= 1/4, given that no smaller t qualifies.
template <class F>
std::uint64_t first_at_most_quarter(F&& f, std::uint64_t base) {
  const auto above = [&](std::uint64_t t) { return f(t) > kThreshold + kThresholdSlack; };
  if (!above(base)) return base;
  std::uint64_t lo = base;
  std::uint64_t step = 1;
  while (above(lo + step)) {
    lo += step;
    step *= 2;
    if (step > (std::uint64_t{1} << 48)) throw std::runtime_error("mixing time search did not terminate");
  }
  std::uint64_t hi = lo + step;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (above(mid) ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

ClusterGraph ClusterGraph::from_cluster(const perc::Cluster& c) {
  require(!c.truncated, "cannot build a cluster graph from a truncated exploration");
  require(c.edges.size() == c.open_edges_within, "cluster was explored without recording its edges");
  return from_edges(static_cast<std::uint32_t>(c.size()), c.edges);
}

ClusterGraph ClusterGraph::from_edges(std::uint32_t size,
                                      const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  require(size >= 1, "cluster graph needs at least one vertex");
  ClusterGraph g;
  g.offsets_.assign(std::size_t{size} + 1, 0);
  for (auto [u, v] : edges) {
    require(u < size && v < size, "cluster edge endpoint out of range");
    require(u != v, "cluster edge is a loop");
    ++g.offsets_[u + 1];
    ++g.offsets_[v + 1];
  }
  for (std::uint32_t v = 0; v < size; ++v) g.offsets_[v + 1] += g.offsets_[v];
  g.targets_.resize(2 * edges.size());
  std::vector<std::uint64_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (auto [u, v] : edges) {
    g.targets_[fill[u]++] = v;
    g.targets_[fill[v]++] = u;
  }
  for (std::uint32_t v = 0; v < size; ++v) {
    const auto first = g.targets_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]);
    const auto last = g.targets_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]);
    std::sort(first, last);
    require(std::adjacent_find(first, last) == last, "duplicate cluster edge");
  }
  require_connected(g);
  return g;
}

std::vector<std::uint32_t> ClusterGraph::distances(std::uint32_t s) const {
  std::vector<std::uint32_t> dist(size(), kUnreached);
  std::vector<std::uint32_t> queue{s};
  dist[s] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const auto v = queue[i];
    for (auto w : neighbors(v))
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
  }
  return dist;
}

const char* method_name(DiameterMethod m) noexcept {
  return m == DiameterMethod::Exact ? "exact" : "double_sweep_lower_bound";
}

const char* method_name(MixingMethod m) noexcept {
  return m == MixingMethod::ExactTv ? "exact_tv" : "spectral_bound";
}

const char* policy_name(StartPolicy s) noexcept {
  return s == StartPolicy::AllStarts ? "all_starts" : "double_sweep_endpoint";
}

SweepResult double_sweep(const ClusterGraph& c, unsigned sweeps) {
  SweepResult out;
  std::vector<char> used(c.size(), 0);
  std::uint32_t s = 0;
  // Each BFS starts at the farthest vertex of the previous one; once that
  // vertex has already served as a start, the farthest unused vertex is taken.
  for (unsigned i = 0; i < 2 * sweeps; ++i) {
    used[s] = 1;
    const auto d = c.distances(s);
    const auto far = static_cast<std::uint32_t>(std::max_element(d.begin(), d.end()) - d.begin());
    if (d[far] > out.lower_bound || i == 0) {
      out.lower_bound = d[far];
      out.endpoint = s;
    }
    std::optional<std::uint32_t> next;
    if (!used[far]) {
      next = far;
    } else {
      for (std::uint32_t v = 0; v < c.size(); ++v)
        if (!used[v] && (!next || d[v] > d[*next])) next = v;
    }
    if (!next) break;
    s = *next;
  }
  return out;
}

Diameter diameter(const ClusterGraph& c, std::uint32_t exact_limit) {
  if (c.size() > exact_limit) return {double_sweep(c).lower_bound, DiameterMethod::DoubleSweepLowerBound};
  std::uint32_t best = 0;
  for (std::uint32_t s = 0; s < c.size(); ++s) {
    const auto d = c.distances(s);
    best = std::max(best, *std::max_element(d.begin(), d.end()));
  }
  return {best, DiameterMethod::Exact};
}

std::vector<double> stationary_distribution(const ClusterGraph& c) {
  if (c.size() == 1) return {1.0};
  const double two_e = 2.0 * static_cast<double>(c.edge_count());
  std::vector<double> pi(c.size());
  for (std::uint32_t v = 0; v < c.size(); ++v) pi[v] = c.degree(v) / two_e;
  return pi;
}

double worst_tv(const ClusterGraph& c, std::uint64_t t, StartPolicy policy) {
  if (c.size() == 1) return 0.0;
  std::optional<std::uint32_t> start;
  if (policy == StartPolicy::DoubleSweepEndpoint) start = double_sweep(c).endpoint;
  return LazySpectrum(c).tv(t, start);
}

MixingResult mixing_time(const ClusterGraph& c, const MixingOptions& opts) {
  MixingResult out;
  out.start_policy = opts.start_policy;
  if (c.size() == 1) {
    out.tv_at_t_mix = 0.0;
    return out;
  }
  if (c.size() > opts.size_limit) {
    if (!opts.spectral_fallback)
      throw UsageError("cluster of " + std::to_string(c.size()) + " vertices exceeds the exact mixing-time limit of " +
                       std::to_string(opts.size_limit));
    out.method = MixingMethod::SpectralBound;
    out.relaxation_time = relaxation_time(c);
    out.t_mix = static_cast<std::uint64_t>(std::ceil(*out.relaxation_time));
    out.note = "proxy, not TV";
    return out;
  }

  const LazySpectrum spectrum(c);
  const std::uint32_t endpoint = double_sweep(c).endpoint;
  std::map<std::uint64_t, double> from_endpoint;
  std::map<std::uint64_t, double> worst;
  const auto cached = [&](std::map<std::uint64_t, double>& seen, std::optional<std::uint32_t> start) {
    return [&seen, &spectrum, start](std::uint64_t t) {
      const auto it = seen.find(t);
      return it != seen.end() ? it->second : (seen[t] = spectrum.tv(t, start));
    };
  };
  const auto endpoint_tv = cached(from_endpoint, endpoint);
  // A single start never exceeds the worst start, so its answer is a lower
  // bound; the all-starts search gallops up from there and rarely moves far.
  std::uint64_t t_mix = first_at_most_quarter(endpoint_tv, 0);
  if (opts.start_policy == StartPolicy::AllStarts) t_mix = first_at_most_quarter(cached(worst, std::nullopt), t_mix);
  const auto& seen = opts.start_policy == StartPolicy::AllStarts ? worst : from_endpoint;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& [t, value] : seen) {
    if (value > prev + 1e-9) throw std::logic_error("total variation increased with t");
    prev = value;
  }
  out.t_mix = t_mix;
  out.tv_at_t_mix = seen.at(t_mix);
  return out;
}

C1Geometry c1_geometry(const graphs::Graph& g, perc::CouplingSeed seed, double p, const C1GeometryRequest& req) {
  const auto largest = perc::largest_component(g, seed, p);
  const auto cluster =
      perc::explore_cluster(g, seed, p, largest.representative, {.cap = std::nullopt, .record_edges = true});
  const auto cg = ClusterGraph::from_cluster(cluster);
  C1Geometry out;
  out.size = cg.size();
  if (req.diameter) out.diameter = diameter(cg);
  if (req.mixing) out.mixing = mixing_time(cg, req.mixing_options);
  return out;
}

}  // namespace percolab::geometry
