#pragma once

// Totally right-skewed (beta = +1) alpha-stable laws.
//
// Two location/scale conventions are supported. Continuous is Nolan's S0
// parameterization: X = gamma * Z0 + delta with Z0 standard, and the law is
// continuous in alpha at alpha = 1. Classic is the S1 parameterization in which
// the Levy law (alpha = 1/2) has CDF erfc(sqrt(gamma / (2 (x - delta)))).
// All numerics run in the continuous convention.

#include <cstddef>
#include <span>
#include <vector>

#include "oprisk/random.hpp"

namespace oprisk {

enum class StableParam { Continuous, Classic };

struct StableDist {
  static constexpr double skew = 1.0;

  double alpha;
  double gamma = 1.0;
  double delta = 0.0;
  StableParam param = StableParam::Continuous;

  /// Throws DomainError unless 0 < alpha <= 2, gamma > 0 and delta finite.
  StableDist(double alpha, double gamma = 1.0, double delta = 0.0,
             StableParam param = StableParam::Continuous);

  /// Same law expressed in the other convention (exact for every alpha).
  StableDist to(StableParam target) const;
};

double stable_pdf(const StableDist& dist, double x);
double stable_cdf(const StableDist& dist, double x);
/// 1 - stable_cdf, evaluated without cancellation in the right tail.
double stable_sf(const StableDist& dist, double x);

/// Bracketing root search on the CDF (or survival function above the median).
double stable_quantile(const StableDist& dist, double q);

/// Chambers-Mallows-Stuck draw from one uniform and one exponential variate.
double stable_draw(const StableDist& dist, RandomStream& stream);
std::vector<double> stable_sample(const StableDist& dist, RandomStream& stream, std::size_t n);

struct LocationScale {
  double gamma;
  double delta;
};

/// Continuous-convention (gamma, delta) matching the sample quartiles exactly.
LocationScale fit_location_scale(std::span<const double> samples, double alpha);

}  // namespace oprisk
