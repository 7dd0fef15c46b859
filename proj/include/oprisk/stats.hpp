#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "oprisk/random.hpp"

namespace oprisk {

/// One-pass mean/variance accumulator (Welford) with exact pairwise merge.
class StreamingMoments {
 public:
  void add(double x) noexcept {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void merge(const StreamingMoments& other) noexcept;

  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double m2() const noexcept { return m2_; }
  /// Unbiased variance M2/(count-1); NaN below two observations.
  double variance() const noexcept;
  double standard_error() const noexcept;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Kolmogorov-Smirnov distance between sorted samples and a CDF.
double ks_statistic(std::span<const double> sorted_samples,
                    const std::function<double(double)>& cdf);

/// Large-sample 1% critical value 1.63/sqrt(n).
double ks_critical_1pct(std::size_t n);

/// Linear interpolation between order statistics at rank h = (n-1)q + 1.
double empirical_quantile(std::span<const double> samples, double q);
/// Same convention on input that is already sorted ascending.
double sorted_quantile(std::span<const double> sorted_samples, double q);

struct LogLogFit {
  double slope;
  double intercept;
  double r_squared;
};

/// Least-squares line through (ln x, ln y).
LogLogFit loglog_slope(std::span<const double> x, std::span<const double> y);

using Statistic = std::function<double(std::span<const double>)>;

/// Standard deviation of `statistic` over `n_boot` resamples with replacement.
double bootstrap_se(std::span<const double> samples, const Statistic& statistic,
                    std::size_t n_boot, RandomStream& stream);

}  // namespace oprisk
