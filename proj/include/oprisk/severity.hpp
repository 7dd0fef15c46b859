#pragma once

// Latent variables X whose exponentials e^{tX} make up the cell losses.
// Gaussian is the lognormal case (tail index 2); Weibull has survival
// exp(-c x^rho) on x >= 0.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "oprisk/random.hpp"

namespace oprisk {

enum class SeverityKind { Gaussian, Weibull };

class SeverityFamily {
 public:
  static SeverityFamily gaussian() { return SeverityFamily(SeverityKind::Gaussian, 2.0, 0.5); }
  /// Weibull with tail index rho > 1; scale defaults to 1/rho.
  static SeverityFamily weibull(double rho);
  static SeverityFamily weibull(double rho, double scale);

  SeverityKind kind() const noexcept { return kind_; }
  double rho() const noexcept { return rho_; }
  /// Weibull tail scale c (for the Gaussian, the 1/2 in exp(-x^2/2)).
  double scale() const noexcept { return scale_; }
  std::string name() const;

  friend bool operator==(const SeverityFamily&, const SeverityFamily&) = default;

 private:
  SeverityFamily(SeverityKind kind, double rho, double scale) : kind_(kind), rho_(rho), scale_(scale) {}

  SeverityKind kind_;
  double rho_;
  double scale_;
};

double cdf(const SeverityFamily& family, double x);
double quantile(const SeverityFamily& family, double q);

/// One draw; inline so the simulation kernel can call it per cell.
inline double draw(const SeverityFamily& family, RandomStream& stream) {
  if (family.kind() == SeverityKind::Gaussian) return stream.normal();
  return std::pow(stream.exponential() / family.scale(), 1.0 / family.rho());
}

std::vector<double> sample(const SeverityFamily& family, RandomStream& stream, std::size_t n);

/// H(t) = ln E[e^{tX}] for t >= 0 (quadrature for the Weibull family).
double cgf_exact(const SeverityFamily& family, double t);

/// Leading-order H(t) ~ t^{rho'} / rho'. Weibull requires scale 1/rho.
double cgf_asymptotic(const SeverityFamily& family, double t);

}  // namespace oprisk
