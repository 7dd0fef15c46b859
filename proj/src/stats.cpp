#include "oprisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oprisk/errors.hpp"

namespace oprisk {
namespace {

__extension__ typedef unsigned __int128 Wide;

}  // namespace

void StreamingMoments::merge(const StreamingMoments& other) noexcept {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double n_a = static_cast<double>(count_);
  const double n_b = static_cast<double>(other.count_);
  const double n = n_a + n_b;
  const double delta = other.mean_ - mean_;
  mean_ += delta * n_b / n;
  m2_ += other.m2_ + delta * delta * n_a * n_b / n;
  count_ += other.count_;
}

double StreamingMoments::variance() const noexcept {
  if (count_ < 2) return std::numeric_limits<double>::quiet_NaN();
  return m2_ / static_cast<double>(count_ - 1);
}

double StreamingMoments::standard_error() const noexcept {
  return std::sqrt(variance() / static_cast<double>(count_));
}

double ks_statistic(std::span<const double> sorted_samples,
                    const std::function<double(double)>& cdf) {
  if (sorted_samples.empty()) throw PreconditionError("ks_statistic: empty sample");
  if (!std::is_sorted(sorted_samples.begin(), sorted_samples.end()))
    throw PreconditionError("ks_statistic: samples must be sorted ascending");
  const double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double f = cdf(sorted_samples[i]);
    const double upper = static_cast<double>(i + 1) / n - f;
    const double lower = f - static_cast<double>(i) / n;
    d = std::max({d, std::abs(upper), std::abs(lower)});
  }
  return d;
}

double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

double sorted_quantile(std::span<const double> sorted_samples, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  if (sorted_samples.size() < 2) throw PreconditionError("empirical quantile needs at least two samples");
  const double h = static_cast<double>(sorted_samples.size() - 1) * q;  // zero-based rank
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted_samples.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted_samples[lo] + frac * (sorted_samples[hi] - sorted_samples[lo]);
}

double empirical_quantile(std::span<const double> samples, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  if (samples.size() < 2) throw PreconditionError("empirical quantile needs at least two samples");
  std::vector<double> work(samples.begin(), samples.end());
  const double h = static_cast<double>(work.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(lo), work.end());
  const double x_lo = work[lo];
  if (lo + 1 >= work.size()) return x_lo;
  const double x_hi = *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(lo) + 1, work.end());
  return x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
}

LogLogFit loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("loglog_slope: coordinate arrays differ in length");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope: coordinates must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (n < 2 || sxx == 0.0) throw PreconditionError("loglog_slope: need at least two distinct x");
  const double slope = sxy / sxx;
  const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {slope, my - slope * mx, r2};
}

double bootstrap_se(std::span<const double> samples, const Statistic& statistic,
                    std::size_t n_boot, RandomStream& stream) {
  if (samples.empty()) throw PreconditionError("bootstrap_se: empty sample");
  if (n_boot < 100) throw PreconditionError("bootstrap_se: n_boot must be at least 100");
  const std::uint64_t n = samples.size();
  std::vector<double> resample(samples.size());
  StreamingMoments moments;
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (double& value : resample) {
      // Lemire-style multiply-shift; bias is below 2^-64 * n.
      const auto index = static_cast<std::uint64_t>(
          (static_cast<Wide>(stream.next_u64()) * n) >> 64);
      value = samples[index];
    }
    moments.add(statistic(resample));
  }
  return std::sqrt(moments.m2() / static_cast<double>(n_boot - 1));
}

}  // namespace oprisk
