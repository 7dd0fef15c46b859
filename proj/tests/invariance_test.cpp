#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oprisk/errors.hpp"
#include "oprisk/invariance.hpp"

using namespace oprisk;

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

std::vector<double> rho_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 200; ++i) grid.push_back(1.0 + 9.0 * i / 200.0);
  return grid;
}

}  // namespace

TEST_CASE("rho prime and alpha") {
  CHECK(rho_prime(2.0) == 2.0);
  CHECK(rho_prime(3.0) == 1.5);
  CHECK_THROWS_AS(rho_prime(1.0), DomainError);
  CHECK_THROWS_AS(ModelPoint(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(ModelPoint(2.0, 0.0), DomainError);
  CHECK(alpha_index({2.0, 2.0}) == doctest::Approx(kSqrt2).epsilon(1e-15));
  CHECK(alpha_index({2.0, 4.0}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(alpha_index({3.0, 1.0}) == doctest::Approx(std::cbrt(4.0)).epsilon(1e-15));
}

TEST_CASE("t schedule") {
  const ModelPoint lognormal(2.0, 2.0);
  CHECK(t_schedule(lognormal, std::exp(2.0)) == doctest::Approx(kSqrt2).epsilon(1e-15));
  CHECK(t_schedule({3.0, 1.0}, std::exp(1.0)) == doctest::Approx(std::pow(1.5, 2.0 / 3.0)).epsilon(1e-15));
  for (double n : {1e3, 1e9, 1e100}) CHECK(t_schedule(lognormal, n) / std::sqrt(std::log(n)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(t_schedule(lognormal, 1.5), DomainError);
}

TEST_CASE("mu schedule examples") {
  Schedule asym;
  asym.mode = ScheduleMode::Asymptotic;
  CHECK(mu_schedule(asym, std::exp(2.0)) == doctest::Approx(-3.0).epsilon(1e-15));
  Schedule normalized;
  CHECK(mu_schedule(normalized, std::exp(2.0)) == doctest::Approx(-3.0).epsilon(1e-14));
  Schedule shifted = asym;
  shifted.a = 2.0;
  shifted.lambda = 1.0;
  CHECK(mu_schedule(shifted, std::exp(1.0)) == doctest::Approx(std::log(2.0) - 2.0).epsilon(1e-15));
}

TEST_CASE("schedule validation") {
  Schedule s;
  s.mode = ScheduleMode::ExactLognormal;
  s.family = SeverityFamily::weibull(3.0);
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.family = SeverityFamily::gaussian();
  s.b = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  Schedule correlated;
  correlated.c0 = 1.0;
  correlated.family = SeverityFamily::weibull(3.0);
  CHECK_THROWS_AS(correlated.validate(), ConfigError);
  Schedule plain;
  CHECK_THROWS_AS(plain.evaluate(1.5), DomainError);
  Schedule exact;
  exact.mode = ScheduleMode::ExactLognormal;
  CHECK_NOTHROW(exact.evaluate(1.0));
}

TEST_CASE("exact lognormal schedule") {
  const LognormalParams one = lognormal_exact_schedule(1.0, 1.0, 1.0);
  CHECK(one.sigma * one.sigma == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(one.mu == doctest::Approx(-std::log(2.0) / 2.0).epsilon(1e-15));
  const LognormalParams ten = lognormal_exact_schedule(1.0, 1.0, 10.0);
  CHECK(ten.sigma * ten.sigma == doctest::Approx(std::log(11.0)).epsilon(1e-15));
  CHECK(ten.mu == doctest::Approx(-std::log(10.0) - std::log(11.0) / 2.0).epsilon(1e-15));

  for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
    for (double n : {1.0, 10.0, 1e3, 1e6}) {
      const LognormalParams p = lognormal_exact_schedule(a, b, n);
      const double s2 = p.sigma * p.sigma;
      CHECK(n * std::exp(p.mu + s2 / 2.0) == doctest::Approx(a).epsilon(1e-10));
      CHECK(n * std::exp(2.0 * p.mu + s2) * std::expm1(s2) == doctest::Approx(b).epsilon(1e-10));
      Schedule s;
      s.mode = ScheduleMode::ExactLognormal;
      s.a = a;
      s.b = b;
      const LossMoments m = loss_moments(s, n);
      CHECK(m.mean == doctest::Approx(a).epsilon(1e-10));
      CHECK(m.variance == doctest::Approx(b).epsilon(1e-10));
    }
  }
  for (double n : {1e50, 1e200}) {
    const LognormalParams p = lognormal_exact_schedule(1.0, 1.0, n);
    CHECK(p.sigma / std::sqrt(std::log(n)) == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(p.mu / std::log(n) == doctest::Approx(-1.5).epsilon(1e-2));
  }
}

TEST_CASE("correlation schedule") {
  CHECK(correlation_schedule(0.0, 100.0) == 0.0);
  CHECK(correlation_schedule(1.0, std::exp(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(correlation_schedule(10.0, std::exp(1.0)) == 1.0);
  CHECK_THROWS_AS(correlation_schedule(-1.0, 10.0), DomainError);
}

TEST_CASE("schedules are monotone in N") {
  Schedule s;
  s.c0 = 1.0;
  double t_prev = 0.0;
  double mu_prev = 1e300;
  double rho_prev = 2.0;
  for (double n = 2.0; n < 1e7; n *= 1.7) {
    const ScheduleRow row = s.evaluate(n);
    CHECK(row.t > t_prev);
    CHECK(row.mu < mu_prev);
    CHECK(row.rho_n <= rho_prev);
    CHECK(row.rho_n >= 0.0);
    CHECK(row.rho_n <= 1.0);
    if (n > std::exp(1.0)) CHECK(row.rho_n < rho_prev);
    t_prev = row.t;
    mu_prev = row.mu;
    rho_prev = row.rho_n;
  }
}

TEST_CASE("curve lambdas") {
  CHECK(curve_lambda(Curve::A, 2.0) == 1.0);
  CHECK(curve_lambda(Curve::C, 2.0) == 2.0);
  CHECK(curve_lambda(Curve::B, 2.0) == 4.0);
  CHECK(curve_lambda(Curve::D, 2.0) == 4.0);
  CHECK(curve_lambda(Curve::C, 3.0) == doctest::Approx(2.0 * kSqrt2 - 2.0).epsilon(1e-15));
  for (Curve c : {Curve::A, Curve::B, Curve::C, Curve::D}) {
    CHECK(curve_lambda(c, 2.0, ExponentForm::Printed) == curve_lambda(c, 2.0));
  }
  CHECK(curve_lambda(Curve::B, 3.0, ExponentForm::Printed) == doctest::Approx(1.5));
  CHECK_THROWS_AS(curve_lambda(Curve::A, 0.9), DomainError);
}

TEST_CASE("curves are where alpha and the variance exponent take their boundary values") {
  for (double rho : rho_grid()) {
    CHECK(alpha_index({rho, curve_lambda(Curve::A, rho)}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(alpha_index({rho, curve_lambda(Curve::B, rho)}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(alpha_index({rho, curve_lambda(Curve::D, rho)}) == doctest::Approx(rho).epsilon(1e-12));
    const ModelPoint on_c(rho, curve_lambda(Curve::C, rho));
    CHECK(std::abs(var_exponent(on_c)) < 1e-12);
    CHECK(alpha_index(on_c) > 1.0);
    CHECK(alpha_index(on_c) < 2.0);
  }
}

TEST_CASE("curve ordering") {
  // A < C < B holds for every rho > 1; B and D cross at rho = 2 (B <= D iff rho >= 2).
  for (double rho : rho_grid()) {
    const double a = curve_lambda(Curve::A, rho);
    const double b = curve_lambda(Curve::B, rho);
    const double c = curve_lambda(Curve::C, rho);
    const double d = curve_lambda(Curve::D, rho);
    CHECK(a < c);
    CHECK(c < b);
    if (rho >= 2.0) CHECK(b <= d);
    if (rho < 2.0) CHECK(b > d);
  }
  CHECK(curve_lambda(Curve::B, 1.5) == doctest::Approx(16.0));
  CHECK(curve_lambda(Curve::D, 1.5) == doctest::Approx(6.75));
}

TEST_CASE("variance exponents") {
  CHECK(var_exponent({2.0, 2.0}) == 0.0);
  CHECK(var_exponent({2.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(var_exponent({2.0, 4.0}) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(var_exponent({3.0, 1.0}, ExponentForm::Printed) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(eps_var_exponent({2.0, 2.0}) == doctest::Approx(3.0 - 2.0 * kSqrt2).epsilon(1e-14));
  CHECK(std::abs(eps_var_exponent({2.0, 2.0}) - 2.0 * (1.5 - 2.0 / kSqrt2)) < 1e-14);

  const double lambda_c = curve_lambda(Curve::C, 3.0);
  const long double l = lambda_c;
  const long double alpha = std::pow(3.0L * l / 1.5L, 1.0L / 1.5L);
  const long double expected = 2.0L * ((l + 1.0L) / l - 3.0L / alpha);
  CHECK(expected > 0.0L);
  CHECK(eps_var_exponent({3.0, lambda_c}) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-13));
  CHECK_THROWS_AS(eps_var_exponent({2.0, 5.0}), DomainError);
}

TEST_CASE("BBM normalizers") {
  Schedule normalized;
  for (double n : {2.0, 64.0, 1e4, 1e8}) CHECK(bbm_normalizers(normalized, n).centering == doctest::Approx(1.0).epsilon(1e-12));

  Schedule asym;
  asym.mode = ScheduleMode::Asymptotic;
  for (double n : {16.0, 1e5, 1e10}) {
    CHECK(bbm_normalizers(asym, n).scale == doctest::Approx(std::pow(n, kSqrt2 - 1.5)).epsilon(1e-12));
  }

  Schedule slow = asym;
  slow.lambda = 0.4;
  CHECK(bbm_normalizers(slow, 1e3).centering == 0.0);

  Schedule on_a = asym;
  on_a.lambda = curve_lambda(Curve::A, 2.0);
  const ScheduleRow row = on_a.evaluate(1e3);
  CHECK(bbm_normalizers(on_a, 1e3).centering ==
        doctest::Approx(0.5 * std::exp(row.mu + std::log(1e3) + row.t * row.t / 2.0)).epsilon(1e-12));

  Schedule clt;
  clt.lambda = 5.0;
  const LossMoments m = loss_moments(clt, 1e3);
  CHECK(bbm_normalizers(clt, 1e3).scale == doctest::Approx(std::sqrt(m.variance)).epsilon(1e-10));
  Schedule boundary;
  boundary.lambda = 4.0;
  const LossMoments mb = loss_moments(boundary, 1e3);
  CHECK(bbm_normalizers(boundary, 1e3).scale == doctest::Approx(std::sqrt(mb.variance / 2.0)).epsilon(1e-10));
}

TEST_CASE("loss moments with a common factor") {
  Schedule s;
  s.c0 = 1.0;
  const double n = 100.0;
  const ScheduleRow row = s.evaluate(n);
  const double s2 = row.t * row.t;
  const double cell_var = std::exp(2.0 * row.mu + s2) * std::expm1(s2);
  const double cov = std::exp(2.0 * row.mu + s2) * std::expm1(row.rho_n * s2);
  const LossMoments m = loss_moments(s, n);
  CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.variance == doctest::Approx(n * cell_var + n * (n - 1.0) * cov).epsilon(1e-12));
}

TEST_CASE("regime classification") {
  const RegimeReport lognormal = classify_regime({2.0, 2.0});
  CHECK(lognormal.alpha == doctest::Approx(kSqrt2));
  CHECK(lognormal.region == Region::LLN_ONLY);
  CHECK(lognormal.variance_class == VarianceClass::FINITE);
  CHECK(lognormal.diversification == Diversification::NEGATIVE);
  CHECK(lognormal.curve_lambdas.c == 2.0);

  const RegimeReport clt = classify_regime({2.0, 5.0});
  CHECK(clt.alpha == doctest::Approx(std::sqrt(5.0)));
  CHECK(clt.region == Region::CLT);
  CHECK(clt.variance_class == VarianceClass::ZERO);
  CHECK(clt.diversification == Diversification::POSITIVE);
  CHECK(std::isnan(clt.eps_var_exponent));

  const RegimeReport slow = classify_regime({2.0, 0.4});
  CHECK(slow.alpha == doctest::Approx(std::sqrt(0.4)));
  CHECK(slow.region == Region::NO_LLN);
  CHECK(slow.variance_class == VarianceClass::INFINITE);
  CHECK(slow.diversification == Diversification::NEGATIVE);

  CHECK(classify_regime({2.0, 4.0}).region == Region::CLT);
  CHECK(classify_regime({2.0, 1.0}).region == Region::LLN_ONLY);

  // Negative diversification inside the Gaussian domain: rho > 2 between curves B and D.
  const RegimeReport between = classify_regime({3.0, 2.0});
  CHECK(between.region == Region::CLT);
  CHECK(between.diversification == Diversification::NEGATIVE);

  CHECK(std::string(to_string(Region::LLN_ONLY)) == "LLN_ONLY");
  CHECK(std::string(to_string(VarianceClass::INFINITE)) == "INFINITE");
  CHECK(std::string(to_string(Diversification::POSITIVE)) == "POSITIVE");
}

TEST_CASE("diversification flips at curve D") {
  for (double rho : {1.3, 2.0, 3.5, 7.0}) {
    const double d = curve_lambda(Curve::D, rho);
    CHECK(classify_regime({rho, d * (1.0 - 1e-9)}).diversification == Diversification::NEGATIVE);
    CHECK(classify_regime({rho, d}).diversification == Diversification::NEGATIVE);
    CHECK(classify_regime({rho, d * (1.0 + 1e-9)}).diversification == Diversification::POSITIVE);
  }
}

TEST_CASE("phase grid") {
  const auto rows = phase_grid(1.5, 4.0, 6);
  REQUIRE(rows.size() == 6);
  CHECK(rows[1].rho == 2.0);
  CHECK(rows[1].lambda_a == 1.0);
  CHECK(rows[1].lambda_c == 2.0);
  CHECK(rows[1].lambda_b == 4.0);
  CHECK(rows[1].lambda_d == 4.0);
  CHECK(rows.back().rho == 4.0);
  for (const PhaseRow& r : rows) {
    CHECK(r.lambda_a < r.lambda_c);
    CHECK(r.lambda_c < r.lambda_b);
  }
  CHECK_THROWS_AS(phase_grid(2.0, 2.0, 1), DomainError);
  CHECK_THROWS_AS(phase_grid(1.0, 2.0, 5), DomainError);
  CHECK_THROWS_AS(phase_grid(1.5, 2.0, 1), DomainError);
}

TEST_CASE("asymptotic diversification ratio") {
  const SeverityFamily gaussian = SeverityFamily::gaussian();
  double prev = 0.0;
  for (double n = 1e6; n < 1e40; n *= 100.0) {
    const double dr = dr_asymptotic(gaussian, 2.0, 0.99, n);
    CHECK(dr > prev);
    prev = dr;
  }

  const double rho = 1.3;
  const double rp = rho_prime(rho);
  const double lambda = std::pow(1.5, rp) * rp / rho;
  const SeverityFamily weibull = SeverityFamily::weibull(rho);
  REQUIRE(alpha_index({rho, lambda}) == doctest::Approx(1.5).epsilon(1e-14));
  prev = 1e300;
  for (double n = 1e3; n <= 1e9; n *= 10.0) {
    const double dr = dr_asymptotic(weibull, lambda, 0.99, n);
    CHECK(dr < prev);
    prev = dr;
  }

  const double rp22 = rho_prime(2.2);
  CHECK_THROWS_AS(dr_asymptotic(SeverityFamily::weibull(2.2), std::pow(2.5, rp22) * rp22 / 2.2, 0.99, 100.0),
                  DomainError);
  CHECK_THROWS_AS(dr_asymptotic(gaussian, 2.0, 1.0, 100.0), DomainError);

  const double n = 1e4;
  const double t = t_schedule({2.0, 2.0}, n);
  const double x_q = quantile(gaussian, 0.99);
  const double derived = dr_asymptotic(gaussian, 2.0, 0.99, n, SubleadingSign::Derived);
  const double printed = dr_asymptotic(gaussian, 2.0, 0.99, n, SubleadingSign::Printed);
  CHECK(printed / derived == doctest::Approx(std::exp(2.0 * x_q * t)).epsilon(1e-12));
}

TEST_CASE("Lindeberg margin") {
  for (double n : {2.0, 1e3, 1e12}) {
    CHECK(lindeberg_margin(std::sqrt(std::log(n)), n) == doctest::Approx(kSqrt2).epsilon(1e-15));
    CHECK(lindeberg_margin(std::sqrt(0.25 * std::log(n)), n) == doctest::Approx(1.0 / kSqrt2).epsilon(1e-15));
    CHECK(lindeberg_margin(std::sqrt(0.5 * std::log(n)), n) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("lognormal pair correlation") {
  CHECK(lognormal_pair_correlation(1.3, 0.0) == 0.0);
  CHECK(lognormal_pair_correlation(1.3, 1.0) == 1.0);
  CHECK(lognormal_pair_correlation(std::sqrt(std::log(2.0)), 0.5) == doctest::Approx(kSqrt2 - 1.0).epsilon(1e-14));
  CHECK_THROWS_AS(lognormal_pair_correlation(0.0, 0.5), DomainError);
}
