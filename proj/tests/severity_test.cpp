#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oprisk/errors.hpp"
#include "oprisk/severity.hpp"
#include "oprisk/stats.hpp"

using namespace oprisk;

namespace {

// ln E[e^{tX}] for a Weibull(rho, c) by composite Simpson on a fine x grid,
// with the integrand scaled by its peak.
double simpson_cgf(double rho, double c, double t) {
  auto log_f = [&](double x) {
    return std::log(rho * c) + (rho - 1.0) * std::log(x) - c * std::pow(x, rho) + t * x;
  };
  const double x_peak = std::pow(t / (c * rho), 1.0 / (rho - 1.0));
  const double upper = std::max(1.0, x_peak) * 4.0 + 10.0;
  double shift = -1e300;
  const int n = 400000;
  const double h = upper / n;
  for (int i = 1; i <= n; ++i) shift = std::max(shift, log_f(i * h));
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double w = i == n ? 1.0 : (i % 2 ? 4.0 : 2.0);
    total += w * std::exp(log_f(i * h) - shift);
  }
  return shift + std::log(total * h / 3.0);
}

// Rayleigh moment generating function: Weibull(2, 1/2) has E e^{tX} in closed form.
double rayleigh_cgf(double t) {
  return std::log1p(t * std::exp(0.5 * t * t) * std::sqrt(std::numbers::pi / 2.0) *
                    (1.0 + std::erf(t / std::numbers::sqrt2)));
}

}  // namespace

TEST_CASE("cdf and quantile examples") {
  CHECK(cdf(SeverityFamily::weibull(2.0, 1.0), 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  CHECK(cdf(SeverityFamily::gaussian(), 0.0) == 0.5);
  CHECK(cdf(SeverityFamily::weibull(3.0), 0.0) == 0.0);
  CHECK(cdf(SeverityFamily::weibull(3.0), -1.0) == 0.0);
  CHECK(quantile(SeverityFamily::weibull(2.0, 1.0), 1.0 - std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(quantile(SeverityFamily::gaussian(), 0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(quantile(SeverityFamily::gaussian(), 0.99) == doctest::Approx(2.3263478740408408).epsilon(1e-12));
  CHECK_THROWS_AS(quantile(SeverityFamily::gaussian(), 0.0), DomainError);
  CHECK_THROWS_AS(quantile(SeverityFamily::gaussian(), 1.0), DomainError);
}

TEST_CASE("family validation") {
  CHECK_THROWS_AS(SeverityFamily::weibull(1.0), DomainError);
  CHECK_THROWS_AS(SeverityFamily::weibull(0.5), DomainError);
  CHECK_THROWS_AS(SeverityFamily::weibull(2.0, 0.0), DomainError);
  CHECK(SeverityFamily::weibull(4.0).scale() == 0.25);
  CHECK(SeverityFamily::gaussian().rho() == 2.0);
}

TEST_CASE("quantile inverts cdf on the support") {
  for (const SeverityFamily& f : {SeverityFamily::gaussian(), SeverityFamily::weibull(1.5),
                                  SeverityFamily::weibull(2.0, 0.5), SeverityFamily::weibull(3.0, 2.0)}) {
    for (double x : {0.05, 0.3, 1.0, 1.7, 2.5}) {
      if (cdf(f, x) > 1.0 - 1e-6) continue;  // saturated in double precision
      CHECK(quantile(f, cdf(f, x)) == doctest::Approx(x).epsilon(1e-9));
    }
  }
}

TEST_CASE("sampling") {
  RandomStream stream(11, 0);
  const auto normals = sample(SeverityFamily::gaussian(), stream, 1000000);
  StreamingMoments m;
  for (double x : normals) m.add(x);
  CHECK(std::abs(m.mean()) < 3.0 / 1000.0);
  CHECK(std::abs(m.variance() - 1.0) < 0.01);

  const SeverityFamily rayleigh = SeverityFamily::weibull(2.0, 0.5);
  auto draws = sample(rayleigh, stream, 1000000);
  CHECK(*std::min_element(draws.begin(), draws.end()) >= 0.0);
  std::sort(draws.begin(), draws.end());
  CHECK(ks_statistic(draws, [&](double x) { return cdf(rayleigh, x); }) < ks_critical_1pct(draws.size()));
  CHECK_THROWS_AS(sample(rayleigh, stream, 0), PreconditionError);
}

TEST_CASE("cgf examples") {
  CHECK(cgf_exact(SeverityFamily::gaussian(), 1.0) == 0.5);
  CHECK(cgf_exact(SeverityFamily::gaussian(), 0.0) == 0.0);
  CHECK(cgf_exact(SeverityFamily::weibull(3.0), 0.0) == 0.0);
  CHECK(cgf_asymptotic(SeverityFamily::gaussian(), 2.0) == 2.0);
  CHECK(cgf_asymptotic(SeverityFamily::weibull(3.0), 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(cgf_asymptotic(SeverityFamily::weibull(2.5), 0.0) == 0.0);
  CHECK_THROWS_AS(cgf_asymptotic(SeverityFamily::weibull(2.0, 1.0), 1.0), PreconditionError);
  CHECK_THROWS_AS(cgf_exact(SeverityFamily::gaussian(), -1.0), DomainError);
}

TEST_CASE("Weibull cgf against independent oracles") {
  const SeverityFamily rayleigh = SeverityFamily::weibull(2.0, 0.5);
  for (double t : {0.1, 1.0, 3.0, 7.0, 15.0}) {
    CHECK(cgf_exact(rayleigh, t) == doctest::Approx(rayleigh_cgf(t)).epsilon(1e-10));
  }
  CHECK(std::abs(cgf_exact(rayleigh, 3.0) - simpson_cgf(2.0, 0.5, 3.0)) < 1e-7);
  for (double rho : {1.5, 3.0, 4.5}) {
    for (double t : {0.5, 3.0}) {
      CHECK(std::abs(cgf_exact(SeverityFamily::weibull(rho), t) - simpson_cgf(rho, 1.0 / rho, t)) < 1e-7);
    }
  }
  CHECK(std::abs(cgf_exact(SeverityFamily::weibull(2.0, 3.0), 2.0) - simpson_cgf(2.0, 3.0, 2.0)) < 1e-7);
}

TEST_CASE("cgf asymptotic agreement and shape") {
  for (double rho : {1.5, 2.0, 3.0}) {
    const SeverityFamily f = SeverityFamily::weibull(rho);
    const double ratio = cgf_exact(f, 20.0) / cgf_asymptotic(f, 20.0);
    CHECK(ratio >= 0.9);
    CHECK(ratio <= 1.1);
  }
  for (double t : {0.0, 0.5, 3.0, 11.0}) {
    CHECK(cgf_exact(SeverityFamily::gaussian(), t) == cgf_asymptotic(SeverityFamily::gaussian(), t));
  }
  for (double rho : {1.5, 2.0, 3.0}) {
    const SeverityFamily f = SeverityFamily::weibull(rho);
    const double h = 0.05;
    double prev = cgf_exact(f, 0.0);
    for (double t = h; t < 10.0; t += h) {
      const double cur = cgf_exact(f, t);
      CHECK(cur > prev);
      CHECK(cgf_exact(f, t + h) - 2.0 * cur + prev > -1e-9);
      prev = cur;
    }
  }
}
