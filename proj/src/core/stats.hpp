#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace percolab::stats {

inline constexpr double kZ99 = 2.576;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  double width() const noexcept { return hi - lo; }
};

/// Monte Carlo point estimate with a normal-approximation 99% interval.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  Interval ci99;
  /// Wilson 99% interval; set for indicator estimates only.
  std::optional<Interval> wilson99;
  /// Samples clipped at an exploration cap; nonzero means the mean is biased low.
  std::uint64_t censored = 0;
};

/// Compensated (Neumaier) running sum.
class Sum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

Estimate estimate_from(std::span<const double> samples);
Estimate indicator_estimate(std::uint64_t successes, std::uint64_t trials);
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ99);

/// Sample covariance of two equally long sequences (n - 1 denominator).
double covariance(std::span<const double> a, std::span<const double> b);

/// Linear-interpolation quantile (the common "type 7" definition).
double quantile(std::vector<double> values, double q);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of y on x; needs at least two distinct x values.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// OLS of log y on log x.
LineFit fit_power_law(std::span<const double> x, std::span<const double> y);

}  // namespace percolab::stats
