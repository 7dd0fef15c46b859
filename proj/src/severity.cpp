#include "oprisk/severity.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "oprisk/errors.hpp"
#include "oprisk/invariance.hpp"

namespace oprisk {

SeverityFamily SeverityFamily::weibull(double rho) { return weibull(rho, 1.0 / rho); }

SeverityFamily SeverityFamily::weibull(double rho, double scale) {
  if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("Weibull tail index rho must exceed 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("Weibull scale must be positive");
  return SeverityFamily(SeverityKind::Weibull, rho, scale);
}

std::string SeverityFamily::name() const {
  if (kind_ == SeverityKind::Gaussian) return "gaussian";
  std::ostringstream out;
  out << "weibull(rho=" << rho_ << ", c=" << scale_ << ")";
  return out.str();
}

double cdf(const SeverityFamily& family, double x) {
  if (family.kind() == SeverityKind::Gaussian) return 0.5 * std::erfc(-x / std::sqrt(2.0));
  if (x <= 0.0) return 0.0;
  return -std::expm1(-family.scale() * std::pow(x, family.rho()));
}

double quantile(const SeverityFamily& family, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("severity quantile: q must lie in (0, 1)");
  if (family.kind() == SeverityKind::Gaussian) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), q);
  }
  return std::pow(-std::log1p(-q) / family.scale(), 1.0 / family.rho());
}

std::vector<double> sample(const SeverityFamily& family, RandomStream& stream, std::size_t n) {
  if (n == 0) throw PreconditionError("severity sample: n must be at least 1");
  std::vector<double> out(n);
  for (double& x : out) x = draw(family, stream);
  return out;
}

double cgf_exact(const SeverityFamily& family, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("cgf: t must be finite and non-negative");
  if (t == 0.0) return 0.0;
  if (family.kind() == SeverityKind::Gaussian) return 0.5 * t * t;

  // E[e^{tX}] = int_0^inf c exp(-c u + t u^{1/rho}) du  (u = x^rho).
  // The exponent peaks at u*; integrate exp(phi - phi*) on either side.
  const double rho = family.rho();
  const double c = family.scale();
  const double inv_rho = 1.0 / rho;
  const double u_star = std::pow(t / (c * rho), rho / (rho - 1.0));
  auto phi = [&](double u) { return -c * u + t * std::pow(u, inv_rho); };
  const double phi_star = phi(u_star);
  auto integrand = [&](double u) { return std::exp(phi(u) - phi_star); };

  boost::math::quadrature::tanh_sinh<double> left_rule;
  boost::math::quadrature::exp_sinh<double> right_rule;
  double left_error = 0.0;
  double right_error = 0.0;
  double left_l1 = 0.0;
  double right_l1 = 0.0;
  std::size_t levels = 0;
  const double tol = 1e-12;
  const double left = left_rule.integrate(integrand, 0.0, u_star, tol, &left_error, &left_l1, &levels);
  const double right =
      right_rule.integrate([&](double v) { return integrand(u_star + v); }, tol, &right_error, &right_l1, &levels);
  const double total = left + right;
  if (!std::isfinite(total) || !(total > 0.0) || left_error + right_error > 1e-9 * total) {
    std::ostringstream msg;
    msg << "cgf_exact: quadrature failed at t=" << t << " (estimate " << total << ")";
    throw NumericalError(msg.str());
  }
  return std::log(c) + phi_star + std::log(total);
}

double cgf_asymptotic(const SeverityFamily& family, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("cgf: t must be finite and non-negative");
  if (family.kind() == SeverityKind::Weibull &&
      std::abs(family.scale() * family.rho() - 1.0) > 1e-12) {
    throw PreconditionError("cgf_asymptotic: Weibull scale must equal 1/rho");
  }
  const double rp = rho_prime(family.rho());
  return std::pow(t, rp) / rp;
}

}  // namespace oprisk
