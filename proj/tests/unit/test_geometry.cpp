#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "geometry.hpp"

using namespace percolab;
using namespace percolab::geometry;

namespace {

using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

ClusterGraph cycle(std::uint32_t n) {
  EdgeList e;
  for (std::uint32_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return ClusterGraph::from_edges(n, e);
}

ClusterGraph path(std::uint32_t n) {
  EdgeList e;
  for (std::uint32_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return ClusterGraph::from_edges(n, e);
}

// Dense lazy transition matrix, iterated row by row from each start.
struct RowIteration {
  std::vector<std::vector<double>> P;
  std::vector<double> pi;

  explicit RowIteration(const ClusterGraph& c) : P(c.size(), std::vector<double>(c.size(), 0.0)), pi(c.size()) {
    double two_e = 0;
    for (std::uint32_t v = 0; v < c.size(); ++v) two_e += c.degree(v);
    for (std::uint32_t v = 0; v < c.size(); ++v) {
      P[v][v] = 0.5;
      for (auto w : c.neighbors(v)) P[v][w] += 0.5 / c.degree(v);
      pi[v] = c.degree(v) / two_e;
    }
  }

  // TV after each step t = 0..t_max for one start.
  std::vector<double> tv_curve(std::uint32_t start, std::uint64_t t_max) const {
    const auto m = P.size();
    std::vector<double> mu(m, 0.0);
    mu[start] = 1.0;
    std::vector<double> out;
    for (std::uint64_t t = 0; t <= t_max; ++t) {
      double d = 0;
      for (std::size_t y = 0; y < m; ++y) d += std::abs(mu[y] - pi[y]);
      out.push_back(0.5 * d);
      std::vector<double> next(m, 0.0);
      for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < m; ++y) next[y] += mu[x] * P[x][y];
      mu = next;
    }
    return out;
  }

  std::pair<std::uint64_t, double> t_mix(std::optional<std::uint32_t> only, std::uint64_t t_max = 4000) const {
    std::vector<double> worst(t_max + 1, 0.0);
    for (std::uint32_t s = 0; s < P.size(); ++s) {
      if (only && s != *only) continue;
      const auto c = tv_curve(s, t_max);
      for (std::size_t t = 0; t <= t_max; ++t) worst[t] = std::max(worst[t], c[t]);
    }
    for (std::uint64_t t = 0; t <= t_max; ++t)
      if (worst[t] <= 0.25 + 1e-12) return {t, worst[t]};
    return {t_max + 1, 0.0};
  }
};

std::vector<ClusterGraph> random_clusters(int count, std::uint64_t seed, std::uint32_t min_size = 2) {
  std::vector<ClusterGraph> out;
  const auto g = perc::Graph::torus(7, 2);
  for (std::uint64_t rep = 0; static_cast<int>(out.size()) < count; ++rep) {
    const auto c = perc::explore_cluster(g, {seed, rep}, 0.55, 0, {.cap = std::nullopt, .record_edges = true});
    if (c.size() >= min_size) out.push_back(ClusterGraph::from_cluster(c));
  }
  return out;
}

}  // namespace

TEST_CASE("diameter examples") {
  CHECK(diameter(ClusterGraph::from_edges(1, {})).value == 0);
  CHECK(diameter(path(3)).value == 2);
  CHECK(diameter(cycle(6)).value == 3);
  CHECK(diameter(cycle(6)).method == DiameterMethod::Exact);
  const auto big = diameter(path(40), 10);
  CHECK(big.method == DiameterMethod::DoubleSweepLowerBound);
  CHECK(big.value == 39);
}

TEST_CASE("double sweep is a lower bound and usually exact") {
  int exact_hits = 0;
  const auto clusters = random_clusters(1000, 21);
  for (const auto& c : clusters) {
    const auto exact = diameter(c).value;
    const auto lb = double_sweep(c).lower_bound;
    CHECK(lb <= exact);
    CHECK(exact <= 2 * lb);
    exact_hits += lb == exact;
  }
  CHECK(exact_hits >= 950);
}

TEST_CASE("cluster graph validation") {
  CHECK_THROWS_AS(ClusterGraph::from_edges(3, {{0, 1}}), UsageError);
  CHECK_THROWS_AS(ClusterGraph::from_edges(2, {{0, 1}, {1, 0}}), UsageError);
  CHECK_THROWS_AS(ClusterGraph::from_edges(2, {{0, 0}}), UsageError);
  const auto c = perc::explore_cluster(perc::Graph::complete(6), {}, 1.0, 0);
  CHECK_THROWS_AS(ClusterGraph::from_cluster(c), UsageError);
}

TEST_CASE("stationary distribution") {
  CHECK(stationary_distribution(ClusterGraph::from_edges(1, {})) == std::vector<double>{1.0});
  CHECK(stationary_distribution(path(2)) == std::vector<double>{0.5, 0.5});
  CHECK(stationary_distribution(path(3)) == std::vector<double>{0.25, 0.5, 0.25});
  for (const auto& c : random_clusters(50, 3)) {
    const auto pi = stationary_distribution(c);
    CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::uint32_t u = 0; u < c.size(); ++u)
      for (auto v : c.neighbors(u)) {
        const double flow_uv = pi[u] * 0.5 / c.degree(u);
        const double flow_vu = pi[v] * 0.5 / c.degree(v);
        CHECK(std::abs(flow_uv - flow_vu) <= 1e-12);
      }
  }
}

TEST_CASE("mixing time examples") {
  const auto one = mixing_time(ClusterGraph::from_edges(1, {}));
  CHECK(one.t_mix == 0);
  CHECK(one.tv_at_t_mix == 0.0);
  const auto k2 = mixing_time(path(2));
  CHECK(k2.t_mix == 1);
  CHECK(*k2.tv_at_t_mix == doctest::Approx(0.0).epsilon(1e-12));
  const auto c4 = mixing_time(cycle(4));
  const auto [t4, tv4] = RowIteration(cycle(4)).t_mix(std::nullopt);
  CHECK(c4.t_mix == t4);
  CHECK(*c4.tv_at_t_mix == doctest::Approx(tv4).epsilon(1e-9));
  CHECK(c4.method == MixingMethod::ExactTv);
}

TEST_CASE("mixing time matches row iteration") {
  for (const auto& c : random_clusters(60, 8)) {
    const RowIteration oracle(c);
    const auto all = mixing_time(c);
    const auto [t, tv] = oracle.t_mix(std::nullopt);
    CHECK(all.t_mix == t);
    CHECK(*all.tv_at_t_mix == doctest::Approx(tv).epsilon(1e-9));
    if (all.t_mix > 0) CHECK(worst_tv(c, all.t_mix - 1) > 0.25);

    const auto single = mixing_time(c, {.start_policy = StartPolicy::DoubleSweepEndpoint});
    const auto [ts, tvs] = oracle.t_mix(double_sweep(c).endpoint);
    CHECK(single.t_mix == ts);
    CHECK(single.t_mix <= all.t_mix);
    CHECK(single.start_policy == StartPolicy::DoubleSweepEndpoint);

    for (std::uint64_t s : {0ull, 1ull, 3ull, 10ull}) {
      const auto curve = oracle.tv_curve(0, s);
      CHECK(worst_tv(c, s) >= curve.back() - 1e-9);
    }
  }
}

TEST_CASE("mixing time is invariant under relabeling") {
  std::mt19937 rng(4);
  for (const auto& c : random_clusters(10, 30, 5)) {
    std::vector<std::uint32_t> perm(c.size());
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);
    EdgeList e;
    for (std::uint32_t u = 0; u < c.size(); ++u)
      for (auto v : c.neighbors(u))
        if (u < v) e.emplace_back(perm[u], perm[v]);
    const auto h = ClusterGraph::from_edges(c.size(), e);
    CHECK(mixing_time(c).t_mix == mixing_time(h).t_mix);
    CHECK(diameter(c).value == diameter(h).value);
  }
}

TEST_CASE("spectral proxy") {
  const std::uint32_t n = 30;
  const auto r = mixing_time(cycle(n), {.size_limit = 10});
  CHECK(r.method == MixingMethod::SpectralBound);
  CHECK(r.note == "proxy, not TV");
  CHECK_FALSE(r.tv_at_t_mix.has_value());
  // Lazy walk on a cycle: lambda_2 = (1 + cos(2 pi / n)) / 2.
  const double lambda2 = (1 + std::cos(2 * M_PI / n)) / 2;
  CHECK(*r.relaxation_time == doctest::Approx(1 / (1 - lambda2)).epsilon(1e-5));
  CHECK(r.t_mix == static_cast<std::uint64_t>(std::ceil(*r.relaxation_time)));
  CHECK_THROWS_AS(mixing_time(cycle(n), {.size_limit = 10, .spectral_fallback = false}), UsageError);
}
