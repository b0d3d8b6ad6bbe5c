#include "stats.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace percolab::stats {

void Sum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    carry_ += (sum_ - t) + x;
  else
    carry_ += (x - t) + sum_;
  sum_ = t;
}

namespace {

double mean_of(std::span<const double> xs) {
  Sum s;
  for (double x : xs) s.add(x);
  return s.value() / static_cast<double>(xs.size());
}

}  // namespace

Estimate estimate_from(std::span<const double> samples) {
  require(!samples.empty(), "an estimate needs at least one sample");
  Estimate e;
  e.samples = samples.size();
  e.mean = mean_of(samples);
  if (samples.size() > 1) {
    Sum sq;
    for (double x : samples) sq.add((x - e.mean) * (x - e.mean));
    const double var = sq.value() / static_cast<double>(samples.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  }
  e.ci99 = {e.mean - kZ99 * e.std_error, e.mean + kZ99 * e.std_error};
  return e;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  require(trials > 0, "Wilson interval needs at least one trial");
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (ph + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

Estimate indicator_estimate(std::uint64_t successes, std::uint64_t trials) {
  require(trials > 0, "an estimate needs at least one sample");
  require(successes <= trials, "more successes than trials");
  Estimate e;
  e.samples = trials;
  const double n = static_cast<double>(trials);
  e.mean = static_cast<double>(successes) / n;
  if (trials > 1) e.std_error = std::sqrt(e.mean * (1 - e.mean) / (n - 1));
  e.ci99 = {e.mean - kZ99 * e.std_error, e.mean + kZ99 * e.std_error};
  e.wilson99 = wilson_interval(successes, trials);
  return e;
}

double covariance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() > 1, "covariance needs two equal sequences of length >= 2");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  Sum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add((a[i] - ma) * (b[i] - mb));
  return s.value() / static_cast<double>(a.size() - 1);
}

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (h - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "fit needs equally many x and y values");
  require(x.size() >= 2, "fit needs at least two points");
  LineFit f;
  f.points = x.size();
  const double n = static_cast<double>(x.size());
  const double mx = mean_of(x);
  const double my = mean_of(y);
  Sum sxx;
  Sum sxy;
  Sum syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
    syy.add((y[i] - my) * (y[i] - my));
  }
  require(sxx.value() > 0, "fit needs at least two distinct x values");
  f.slope = sxy.value() / sxx.value();
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy.value() - f.slope * sxy.value());
  f.r_squared = syy.value() > 0 ? std::clamp(1.0 - sse / syy.value(), 0.0, 1.0) : 1.0;
  if (x.size() > 2) f.slope_stderr = std::sqrt(sse / (n - 2) / sxx.value());
  return f;
}

LineFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, "power-law fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

}  // namespace percolab::stats
