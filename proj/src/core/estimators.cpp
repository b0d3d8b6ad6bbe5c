#include "estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <unordered_map>

#include "parallel.hpp"

namespace percolab::estimators {

namespace {

using perc::CouplingSeed;

void check_probability(double p) { require(p >= 0.0 && p <= 1.0, "probability must lie in [0, 1]"); }

Vertex resolve_origin(const Graph& g, std::optional<Vertex> origin, bool force) {
  if (origin) {
    g.check_vertex(*origin);
    return *origin;
  }
  if (!g.is_regular() && !force)
    throw UsageError("graph " + g.describe() + " is not regular; give an explicit origin or set force");
  return 0;
}

std::optional<std::uint64_t> resolve_cap(const Graph& g, std::optional<std::uint64_t> cap) {
  if (!cap && g.vertex_count() > kUncappedVertexLimit)
    throw UsageError("graphs above " + std::to_string(kUncappedVertexLimit) + " vertices need an exploration cap");
  return cap;
}

struct ChiProbe {
  const Graph& g;
  Vertex origin;
  std::uint64_t master_seed;
  unsigned workers;

  Estimate operator()(double p, std::uint64_t first, std::uint64_t count, std::optional<std::uint64_t> cap) const {
    std::vector<double> sizes(count);
    std::vector<char> clipped(count, 0);
    parallel_for(count, workers, [&](std::uint64_t i) {
      const auto c = perc::explore_cluster(g, {master_seed, first + i}, p, origin, {.cap = cap});
      sizes[i] = static_cast<double>(c.size());
      clipped[i] = c.truncated;
    });
    auto e = stats::estimate_from(sizes);
    e.censored = static_cast<std::uint64_t>(std::count(clipped.begin(), clipped.end(), 1));
    return e;
  }
};

}  // namespace

Estimate estimate_chi(const Graph& g, double p, const SamplingOptions& opts) {
  check_probability(p);
  require(opts.replicas >= 2, "estimate_chi needs at least 2 replicas");
  const Vertex origin = resolve_origin(g, opts.origin, opts.force);
  const ChiProbe probe{g, origin, opts.master_seed, opts.workers};
  auto e = probe(p, opts.first_replica, opts.replicas, resolve_cap(g, opts.cap));
  if (e.censored > 0 && !opts.tail_safe)
    throw UsageError(std::to_string(e.censored) +
                     " clusters reached the exploration cap; raise the cap or enable tail-safe counting");
  return e;
}

CriticalPoint solve_pc(const Graph& g, double lambda, const SolveOptions& opts) {
  require(opts.tolerance > 0, "tolerance must be positive");
  require(opts.replicas_per_probe >= 2, "solve_pc needs at least 2 replicas per probe");
  const double n = g.vertex_count();
  const double target = lambda * std::cbrt(n);
  if (!(target > 1.0 && target < n))
    throw InfeasibleError("no critical point: lambda * n^(1/3) must lie in (1, n), i.e. lambda in (" +
                          std::to_string(1.0 / std::cbrt(n)) + ", " + std::to_string(n / std::cbrt(n)) + ")");
  const Vertex origin = resolve_origin(g, opts.origin, opts.force);
  const ChiProbe probe{g, origin, opts.master_seed, opts.workers};
  // Clusters far above the target only need to be seen to exceed it.
  const auto screen_cap = static_cast<std::uint64_t>(std::ceil(8 * target));

  CriticalPoint out;
  out.lambda = lambda;
  out.target = target;
  double lo = 0.0;
  double hi = 1.0;
  std::uint64_t budget = opts.replicas_per_probe;
  std::uint64_t next_replica = 0;
  unsigned retries = 0;  // budget doublings so far; the budget never shrinks
  double last_mid = 0.5;
  while (hi - lo > opts.tolerance) {
    const double mid = 0.5 * (lo + hi);
    last_mid = mid;
    ++out.probes;
    auto est = probe(mid, next_replica, budget, screen_cap);
    next_replica += budget;
    if (est.censored > 0 && !(est.ci99.lo > target)) {
      est = probe(mid, next_replica, budget, std::nullopt);
      next_replica += budget;
    }
    if (est.ci99.lo > target) {
      hi = mid;
    } else if (est.ci99.hi < target) {
      lo = mid;
    } else if (retries < opts.retry_cap) {
      budget *= 2;
      ++retries;
    } else {
      out.indistinguishable = true;
      break;
    }
  }
  out.bracket = {lo, hi};
  out.p_c_hat = out.indistinguishable ? last_mid : 0.5 * (lo + hi);
  out.samples_per_probe = budget;
  out.chi_at_p_c_hat = probe(out.p_c_hat, next_replica, budget, std::nullopt);
  out.self_consistent = out.chi_at_p_c_hat.ci99.contains(target);
  return out;
}

WindowSpec WindowSpec::around(const Graph& g, double p_center, double A) {
  check_probability(p_center);
  require(A >= 0, "window constant A must be nonnegative");
  WindowSpec w;
  w.A = A;
  w.p_center = p_center;
  w.half_width = A / (static_cast<double>(g.degree()) * std::cbrt(static_cast<double>(g.vertex_count())));
  w.interval = {std::max(0.0, p_center - w.half_width), std::min(1.0, p_center + w.half_width)};
  return w;
}

std::vector<double> WindowSpec::grid(std::size_t points) const {
  require(points >= 1, "window grid needs at least one point");
  if (points == 1) return {p_center};
  std::vector<double> out;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back(std::clamp(p_center + t * half_width, interval.lo, interval.hi));
  }
  return out;
}

TriangleReport estimate_triangle(const Graph& g, double p, std::vector<std::pair<Vertex, Vertex>> pairs,
                                 const SamplingOptions& opts) {
  check_probability(p);
  require(opts.replicas >= 2, "estimate_triangle needs at least 2 replicas");
  require(!pairs.empty(), "estimate_triangle needs at least one vertex pair");
  if (g.vertex_count() > kTriangleVertexLimit)
    throw UsageError("triangle estimation is limited to " + std::to_string(kTriangleVertexLimit) + " vertices");
  for (const auto& [x, y] : pairs) {
    g.check_vertex(x);
    g.check_vertex(y);
  }
  const std::uint64_t R = opts.replicas;
  // values[j * R + i]: pair j, replica i.
  std::vector<double> values(pairs.size() * R);
  parallel_for(R, opts.workers, [&](std::uint64_t i) {
    // Three independent configurations per replica; every pair reuses them.
    const std::uint64_t base = 3 * (opts.first_replica + i);
    const auto comps = perc::label_components(g, {opts.master_seed, base + 1}, p);
    std::unordered_map<Vertex, std::vector<Vertex>> left;
    std::unordered_map<Vertex, std::unordered_map<Vertex, std::uint64_t>> right_by_root;
    for (const auto& [x, y] : pairs) {
      if (!left.count(x)) left[x] = perc::explore_cluster(g, {opts.master_seed, base}, p, x).members;
      if (!right_by_root.count(y)) {
        auto& counts = right_by_root[y];
        for (Vertex v : perc::explore_cluster(g, {opts.master_seed, base + 2}, p, y).members) ++counts[comps.root[v]];
      }
    }
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const auto& counts = right_by_root.at(pairs[j].second);
      std::uint64_t total = 0;
      for (Vertex u : left.at(pairs[j].first)) {
        const auto it = counts.find(comps.root[u]);
        if (it != counts.end()) total += it->second;
      }
      values[j * R + i] = static_cast<double>(total);
    }
  });
  TriangleReport out;
  out.pairs = std::move(pairs);
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < out.pairs.size(); ++j) {
    out.nabla.push_back(stats::estimate_from(std::span(values).subspan(j * R, R)));
    const double excess = out.nabla.back().mean - (out.pairs[j].first == out.pairs[j].second ? 1.0 : 0.0);
    out.max_excess = std::max(out.max_excess, excess);
  }
  return out;
}

BallGrowthEstimate estimate_ball_growth(const Graph& g, double p, std::uint32_t r_max, const SamplingOptions& opts) {
  check_probability(p);
  require(r_max >= 1, "ball growth needs r_max >= 1");
  require(opts.replicas >= 2, "ball growth needs at least 2 replicas");
  const Vertex origin = resolve_origin(g, opts.origin, opts.force);
  const std::uint64_t R = opts.replicas;
  const std::size_t width = std::size_t{r_max} + 1;
  // Column-major: vol[r * R + i].
  std::vector<double> vol(width * R);
  std::vector<double> edges(width * R);
  parallel_for(R, opts.workers, [&](std::uint64_t i) {
    const auto b = perc::grow_ball(g, {opts.master_seed, opts.first_replica + i}, p, origin, r_max);
    for (std::size_t r = 0; r < width; ++r) {
      vol[r * R + i] = static_cast<double>(b.ball_size[r]);
      edges[r * R + i] = static_cast<double>(b.edge_count[r]);
    }
  });
  BallGrowthEstimate out;
  const auto column = [&](const std::vector<double>& v, std::size_t r) { return std::span(v).subspan(r * R, R); };
  for (std::size_t r = 0; r < width; ++r) {
    out.volume.push_back(stats::estimate_from(column(vol, r)));
    out.edges.push_back(stats::estimate_from(column(edges, r)));
  }
  for (std::uint32_t r = 1; 2 * r <= r_max; ++r) {
    VolumeDoublingCheck c;
    c.r = r;
    const double gr = out.volume[r].mean;
    c.g_2r = out.volume[2 * r].mean;
    c.bound = gr * gr / (4.0 * r);
    // Delta method for G(2r) - G(r)^2/(4r).
    const double a = gr / (2.0 * r);
    const auto x = column(vol, 2 * r);
    const auto y = column(vol, r);
    const double var = stats::covariance(x, x) + a * a * stats::covariance(y, y) - 2 * a * stats::covariance(x, y);
    c.joint_se = std::sqrt(std::max(0.0, var) / static_cast<double>(R));
    c.holds = c.g_2r >= c.bound - 4 * c.joint_se;
    out.doubling.push_back(c);
  }
  return out;
}

std::vector<Estimate> estimate_one_arm(const Graph& g, double p, const std::vector<std::uint32_t>& r_list,
                                       const SamplingOptions& opts) {
  check_probability(p);
  require(!r_list.empty(), "one-arm estimation needs at least one radius");
  require(opts.replicas >= 1, "one-arm estimation needs at least one replica");
  for (auto r : r_list) require(r >= 1, "one-arm radii must be >= 1");
  const Vertex origin = resolve_origin(g, opts.origin, opts.force);
  const std::uint32_t r_max = *std::max_element(r_list.begin(), r_list.end());
  // reach[i]: the largest r <= r_max with a nonempty boundary.
  std::vector<std::uint32_t> reach(opts.replicas);
  parallel_for(opts.replicas, opts.workers, [&](std::uint64_t i) {
    const auto b = perc::grow_ball(g, {opts.master_seed, opts.first_replica + i}, p, origin, r_max);
    reach[i] = b.dist.back();
  });
  std::vector<Estimate> out;
  for (auto r : r_list) {
    const auto hits = static_cast<std::uint64_t>(std::count_if(reach.begin(), reach.end(), [&](auto d) { return d >= r; }));
    out.push_back(stats::indicator_estimate(hits, opts.replicas));
  }
  return out;
}

std::vector<Estimate> estimate_tail(const Graph& g, double p, const std::vector<std::uint64_t>& k_list,
                                    const SamplingOptions& opts) {
  check_probability(p);
  require(!k_list.empty(), "tail estimation needs at least one k");
  require(opts.replicas >= 1, "tail estimation needs at least one replica");
  for (auto k : k_list) require(k >= 1, "tail thresholds must be >= 1");
  const Vertex origin = resolve_origin(g, opts.origin, opts.force);
  const std::uint64_t cap = *std::max_element(k_list.begin(), k_list.end());
  std::vector<std::uint64_t> sizes(opts.replicas);
  parallel_for(opts.replicas, opts.workers, [&](std::uint64_t i) {
    sizes[i] = perc::explore_cluster(g, {opts.master_seed, opts.first_replica + i}, p, origin, {.cap = cap}).size();
  });
  std::vector<Estimate> out;
  for (auto k : k_list) {
    const auto hits = static_cast<std::uint64_t>(std::count_if(sizes.begin(), sizes.end(), [&](auto s) { return s >= k; }));
    out.push_back(stats::indicator_estimate(hits, opts.replicas));
  }
  return out;
}

C1Estimate estimate_c1(const Graph& g, double p, const SamplingOptions& opts) {
  check_probability(p);
  require(opts.replicas >= 2, "estimate_c1 needs at least 2 replicas");
  C1Estimate out;
  out.samples.resize(opts.replicas);
  parallel_for(opts.replicas, opts.workers, [&](std::uint64_t i) {
    out.samples[i] =
        static_cast<double>(perc::largest_component(g, {opts.master_seed, opts.first_replica + i}, p).size);
  });
  out.size = stats::estimate_from(out.samples);
  const double scale = std::pow(static_cast<double>(g.vertex_count()), 2.0 / 3.0);
  std::vector<double> scaled(out.samples);
  for (auto& s : scaled) s /= scale;
  out.median = stats::quantile(out.samples, 0.5);
  out.scaled_median = stats::quantile(scaled, 0.5);
  out.scaled_q05 = stats::quantile(scaled, 0.05);
  out.scaled_q95 = stats::quantile(std::move(scaled), 0.95);
  return out;
}

}  // namespace percolab::estimators
