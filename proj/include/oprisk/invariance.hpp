#pragma once

// Closed-form algebra of the invariant model: the exponents rho' and alpha,
// the N-indexed schedules (mu_N, t_N, rho_N), the regime curves in the
// (rho, lambda) plane and the asymptotic diversification ratio.

#include <vector>

#include "oprisk/severity.hpp"

namespace oprisk {

struct ModelPoint {
  double rho;
  double lambda;

  /// Throws DomainError unless rho > 1 and lambda > 0.
  ModelPoint(double rho, double lambda);
};

/// rho' = rho / (rho - 1).
double rho_prime(double rho);
/// alpha = (rho lambda / rho')^{1/rho'}.
double alpha_index(const ModelPoint& point);
/// t_N = (rho' ln N / lambda)^{1/rho'} for N >= 2.
double t_schedule(const ModelPoint& point, double n);

enum class ScheduleMode { Asymptotic, ExactLognormal, ExactNormalized };

struct ScheduleRow {
  double n;
  double mu;
  double t;
  double rho_n;
};

struct Schedule {
  ScheduleMode mode = ScheduleMode::ExactNormalized;
  double lambda = 2.0;
  SeverityFamily family = SeverityFamily::gaussian();
  double a = 1.0;
  double b = 1.0;   // target variance, exact-lognormal mode only
  double c0 = 0.0;  // correlation constant; 0 means independent cells

  /// Throws ConfigError for an inconsistent mode/family/target combination.
  void validate() const;
  ModelPoint point() const { return ModelPoint(family.rho(), lambda); }
  /// Smallest admissible N: 1 for exact-lognormal, 2 otherwise.
  double min_n() const { return mode == ScheduleMode::ExactLognormal ? 1.0 : 2.0; }
  ScheduleRow evaluate(double n) const;
};

double mu_schedule(const Schedule& schedule, double n);

struct LognormalParams {
  double mu;
  double sigma;
};

/// Solves N e^{mu + sigma^2/2} = a and N e^{2mu + sigma^2}(e^{sigma^2} - 1) = b.
LognormalParams lognormal_exact_schedule(double a, double b, double n);

/// rho_N = min(1, c0 / ln N).
double correlation_schedule(double c0, double n);

enum class Curve { A, B, C, D };

/// Derived forms come from inverting alpha and the variance exponent; Printed
/// forms are the alternate typography (2 rho' in place of 2^{rho'}, etc.).
enum class ExponentForm { Derived, Printed };

double curve_lambda(Curve curve, double rho, ExponentForm form = ExponentForm::Derived);

/// Exponent of N in var(L_N).
double var_exponent(const ModelPoint& point, ExponentForm form = ExponentForm::Derived);
/// Exponent of N in var(eps_N) = 2((lambda+1)/lambda - rho/alpha); needs alpha < 2.
double eps_var_exponent(const ModelPoint& point);

struct Normalizers {
  double centering;  // A_val = e^{mu_N} A(t)
  double scale;      // B_val = e^{mu_N} B(t)
};

/// Centering and scale of L_N under which (L_N - A)/B has a nondegenerate limit.
/// The cumulant function follows the schedule: asymptotic or exact.
Normalizers bbm_normalizers(const Schedule& schedule, double n);

struct LossMoments {
  double mean;
  double variance;
};

/// Exact mean and variance of the bank loss at N cells (one-factor model when
/// c0 > 0).
LossMoments loss_moments(const Schedule& schedule, double n);

enum class Region { CLT, LLN_ONLY, NO_LLN };
enum class VarianceClass { ZERO, FINITE, INFINITE };
enum class Diversification { POSITIVE, NEGATIVE };

const char* to_string(Region region);
const char* to_string(VarianceClass variance);
const char* to_string(Diversification diversification);

struct CurveLambdas {
  double a;
  double b;
  double c;
  double d;
};

struct RegimeReport {
  double rho_prime;
  double alpha;
  Region region;
  VarianceClass variance_class;
  Diversification diversification;
  CurveLambdas curve_lambdas;
  double var_exponent;
  double eps_var_exponent;  // NaN when alpha >= 2
};

RegimeReport classify_regime(const ModelPoint& point, ExponentForm form = ExponentForm::Derived);

struct PhaseRow {
  double rho;
  double lambda_a;
  double lambda_c;
  double lambda_b;
  double lambda_d;
};

/// Curves A-D on a uniform rho grid of `steps` points.
std::vector<PhaseRow> phase_grid(double rho_min, double rho_max, int steps,
                                 ExponentForm form = ExponentForm::Derived);

/// Sign of the sub-leading t_N term in the asymptotic diversification ratio.
/// Derived follows from the quantile sum in the denominator; Printed is the
/// opposite sign.
enum class SubleadingSign { Derived, Printed };

/// F_alpha^{-1}(q) exp[(rho/alpha - 1) ln N -/+ x_q t_N], x_q the severity
/// quantile and F_alpha the standard continuous-convention stable law.
double dr_asymptotic(const SeverityFamily& family, double lambda, double q, double n,
                     SubleadingSign sign = SubleadingSign::Derived);

/// sigma_N / sqrt(ln N / 2); above 1 the lognormal sum leaves the Gaussian domain.
double lindeberg_margin(double sigma_n, double n);

/// Pearson correlation (e^{rho sigma^2} - 1)/(e^{sigma^2} - 1) of two one-factor
/// lognormal cells.
double lognormal_pair_correlation(double sigma, double rho);

}  // namespace oprisk
