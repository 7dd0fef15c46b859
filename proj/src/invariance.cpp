#include "oprisk/invariance.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "oprisk/errors.hpp"
#include "oprisk/stable.hpp"

namespace oprisk {
namespace {

// Relative slack used to snap alpha onto the boundaries 1, 2 and rho.
constexpr double kBoundaryTol = 1e-12;

void require_n(double n, double min_n, const char* what) {
  if (!std::isfinite(n) || n < min_n) {
    std::ostringstream msg;
    msg << what << ": N must be finite and at least " << min_n << " (got " << n << ")";
    throw DomainError(msg.str());
  }
}

// Cumulant function selected by the schedule mode.
double schedule_cgf(const Schedule& schedule, double t) {
  if (schedule.mode == ScheduleMode::Asymptotic) return cgf_asymptotic(schedule.family, t);
  return cgf_exact(schedule.family, t);
}

// ln( N (e^{H(2t)} - e^{2 H(t)}) ), the log variance of S_N(t).
double log_var_sum(double n, double h_t, double h_2t) {
  const double gap = 2.0 * h_t - h_2t;
  if (!(gap < 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(n) + h_2t + std::log(-std::expm1(gap));
}

}  // namespace

ModelPoint::ModelPoint(double rho_, double lambda_) : rho(rho_), lambda(lambda_) {
  if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("tail index rho must exceed 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("speed lambda must be positive");
}

double rho_prime(double rho) {
  if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("rho_prime: rho must exceed 1");
  return rho / (rho - 1.0);
}

double alpha_index(const ModelPoint& point) {
  const double rp = rho_prime(point.rho);
  return std::pow(point.rho * point.lambda / rp, 1.0 / rp);
}

double t_schedule(const ModelPoint& point, double n) {
  require_n(n, 2.0, "t_schedule");
  const double rp = rho_prime(point.rho);
  return std::pow(rp * std::log(n) / point.lambda, 1.0 / rp);
}

void Schedule::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("schedule: lambda must be positive");
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("schedule: target mean a must be positive");
  if (!(c0 >= 0.0) || !std::isfinite(c0)) throw ConfigError("schedule: c0 must be non-negative");
  if (mode == ScheduleMode::ExactLognormal) {
    if (family.kind() != SeverityKind::Gaussian) {
      throw ConfigError("schedule: exact-lognormal mode requires the gaussian family");
    }
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("schedule: target variance b must be positive");
  }
  if (c0 > 0.0 && family.kind() != SeverityKind::Gaussian) {
    throw ConfigError("schedule: correlated cells require the gaussian family");
  }
}

ScheduleRow Schedule::evaluate(double n) const {
  validate();
  require_n(n, min_n(), "schedule");
  ScheduleRow row{n, 0.0, 0.0, c0 == 0.0 ? 0.0 : correlation_schedule(c0, n)};
  switch (mode) {
    case ScheduleMode::Asymptotic:
      row.t = t_schedule(point(), n);
      row.mu = std::log(a) - (lambda + 1.0) / lambda * std::log(n);
      break;
    case ScheduleMode::ExactNormalized:
      row.t = t_schedule(point(), n);
      row.mu = std::log(a) - std::log(n) - cgf_exact(family, row.t);
      break;
    case ScheduleMode::ExactLognormal: {
      const LognormalParams p = lognormal_exact_schedule(a, b, n);
      row.mu = p.mu;
      row.t = p.sigma;
      break;
    }
  }
  return row;
}

double mu_schedule(const Schedule& schedule, double n) { return schedule.evaluate(n).mu; }

LognormalParams lognormal_exact_schedule(double a, double b, double n) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("lognormal_exact_schedule: a and b must be positive");
  }
  require_n(n, 1.0, "lognormal_exact_schedule");
  const double sigma2 = std::log1p(n * b / (a * a));
  return {std::log(a) - std::log(n) - 0.5 * sigma2, std::sqrt(sigma2)};
}

double correlation_schedule(double c0, double n) {
  if (!(c0 >= 0.0) || !std::isfinite(c0)) throw DomainError("correlation_schedule: c0 must be non-negative");
  require_n(n, 2.0, "correlation_schedule");
  return std::min(1.0, c0 / std::log(n));
}

double curve_lambda(Curve curve, double rho, ExponentForm form) {
  const double rp = rho_prime(rho);
  const bool printed = form == ExponentForm::Printed;
  switch (curve) {
    case Curve::A:
      return 1.0 / (rho - 1.0);
    case Curve::B:
      return (printed ? 2.0 * rp : std::pow(2.0, rp)) / (rho - 1.0);
    case Curve::C:
      return printed ? 2.0 * rp - 2.0 : std::pow(2.0, rp) - 2.0;
    case Curve::D:
      return (printed ? rho * rp : std::pow(rho, rp)) / (rho - 1.0);
  }
  throw DomainError("curve_lambda: unknown curve");
}

double var_exponent(const ModelPoint& point, ExponentForm form) {
  const double rp = rho_prime(point.rho);
  const double last = form == ExponentForm::Printed ? 2.0 * rp : std::pow(2.0, rp);
  return 1.0 - 2.0 * (point.lambda + 1.0) / point.lambda + last / point.lambda;
}

double eps_var_exponent(const ModelPoint& point) {
  const double alpha = alpha_index(point);
  if (alpha >= 2.0) throw DomainError("eps_var_exponent: requires alpha < 2");
  return 2.0 * ((point.lambda + 1.0) / point.lambda - point.rho / alpha);
}

Normalizers bbm_normalizers(const Schedule& schedule, double n) {
  const ScheduleRow row = schedule.evaluate(n);
  const ModelPoint point = schedule.point();
  const double alpha = alpha_index(point);
  const double h_t = schedule_cgf(schedule, row.t);
  const double log_n = std::log(n);

  Normalizers out{};
  if (alpha < 1.0 - kBoundaryTol) {
    out.centering = 0.0;
  } else {
    out.centering = std::exp(row.mu + log_n + h_t);
    if (alpha <= 1.0 + kBoundaryTol) out.centering *= 0.5;
  }

  if (alpha < 2.0 * (1.0 - kBoundaryTol)) {
    out.scale = std::exp(row.mu + point.rho / alpha * log_n);
  } else {
    double log_var = log_var_sum(n, h_t, schedule_cgf(schedule, 2.0 * row.t));
    if (alpha <= 2.0 * (1.0 + kBoundaryTol)) log_var -= std::log(2.0);
    out.scale = std::exp(row.mu + 0.5 * log_var);
  }
  return out;
}

LossMoments loss_moments(const Schedule& schedule, double n) {
  const ScheduleRow row = schedule.evaluate(n);
  const double h_t = cgf_exact(schedule.family, row.t);
  const double h_2t = cgf_exact(schedule.family, 2.0 * row.t);
  LossMoments out{};
  out.mean = std::exp(row.mu + std::log(n) + h_t);
  out.variance = std::exp(2.0 * row.mu + log_var_sum(n, h_t, h_2t));
  if (row.rho_n > 0.0) {
    // Gaussian one-factor model: cov(Y_i, Y_j) = e^{2mu + t^2}(e^{rho_N t^2} - 1).
    const double s2 = row.t * row.t;
    out.variance += n * (n - 1.0) * std::exp(2.0 * row.mu + s2) * std::expm1(row.rho_n * s2);
  }
  return out;
}

const char* to_string(Region region) {
  switch (region) {
    case Region::CLT: return "CLT";
    case Region::LLN_ONLY: return "LLN_ONLY";
    case Region::NO_LLN: return "NO_LLN";
  }
  return "?";
}

const char* to_string(VarianceClass variance) {
  switch (variance) {
    case VarianceClass::ZERO: return "ZERO";
    case VarianceClass::FINITE: return "FINITE";
    case VarianceClass::INFINITE: return "INFINITE";
  }
  return "?";
}

const char* to_string(Diversification diversification) {
  return diversification == Diversification::POSITIVE ? "POSITIVE" : "NEGATIVE";
}

RegimeReport classify_regime(const ModelPoint& point, ExponentForm form) {
  RegimeReport report{};
  report.rho_prime = rho_prime(point.rho);
  report.alpha = alpha_index(point);
  if (report.alpha >= 2.0 * (1.0 - kBoundaryTol)) {
    report.region = Region::CLT;
  } else if (report.alpha >= 1.0 - kBoundaryTol) {
    report.region = Region::LLN_ONLY;
  } else {
    report.region = Region::NO_LLN;
  }
  report.var_exponent = var_exponent(point, form);
  if (std::abs(report.var_exponent) <= kBoundaryTol) {
    report.variance_class = VarianceClass::FINITE;
  } else {
    report.variance_class = report.var_exponent > 0.0 ? VarianceClass::INFINITE : VarianceClass::ZERO;
  }
  report.diversification = report.alpha <= point.rho * (1.0 + kBoundaryTol) ? Diversification::NEGATIVE
                                                                          : Diversification::POSITIVE;
  report.curve_lambdas = {curve_lambda(Curve::A, point.rho, form), curve_lambda(Curve::B, point.rho, form),
                          curve_lambda(Curve::C, point.rho, form), curve_lambda(Curve::D, point.rho, form)};
  report.eps_var_exponent = report.region == Region::CLT ? std::numeric_limits<double>::quiet_NaN()
                                                         : eps_var_exponent(point);
  return report;
}

std::vector<PhaseRow> phase_grid(double rho_min, double rho_max, int steps, ExponentForm form) {
  if (!(rho_min > 1.0) || !(rho_max > rho_min) || !std::isfinite(rho_max)) {
    throw DomainError("phase_grid: need 1 < rho_min < rho_max");
  }
  if (steps < 2) throw DomainError("phase_grid: steps must be at least 2");
  std::vector<PhaseRow> rows;
  rows.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double rho = i + 1 == steps ? rho_max : rho_min + (rho_max - rho_min) * i / (steps - 1);
    rows.push_back({rho, curve_lambda(Curve::A, rho, form), curve_lambda(Curve::C, rho, form),
                    curve_lambda(Curve::B, rho, form), curve_lambda(Curve::D, rho, form)});
  }
  return rows;
}

double dr_asymptotic(const SeverityFamily& family, double lambda, double q, double n, SubleadingSign sign) {
  const ModelPoint point(family.rho(), lambda);
  const double alpha = alpha_index(point);
  if (alpha >= 2.0) throw DomainError("dr_asymptotic: requires alpha < 2");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("dr_asymptotic: q must lie in (0, 1)");
  const double t = t_schedule(point, n);
  const double stable_q = stable_quantile(StableDist(alpha), q);
  const double x_q = quantile(family, q);
  const double s = sign == SubleadingSign::Derived ? -1.0 : 1.0;
  return stable_q * std::exp((point.rho / alpha - 1.0) * std::log(n) + s * x_q * t);
}

double lindeberg_margin(double sigma_n, double n) {
  require_n(n, 2.0, "lindeberg_margin");
  if (!(sigma_n > 0.0) || !std::isfinite(sigma_n)) throw DomainError("lindeberg_margin: sigma must be positive");
  return sigma_n / std::sqrt(0.5 * std::log(n));
}

double lognormal_pair_correlation(double sigma, double rho) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("pair correlation: sigma must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("pair correlation: rho must lie in [0, 1]");
  const double s2 = sigma * sigma;
  return std::expm1(rho * s2) / std::expm1(s2);
}

}  // namespace oprisk
