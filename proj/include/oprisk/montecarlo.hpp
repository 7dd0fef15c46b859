#pragma once

// Replication-parallel simulation of the bank loss
//   L_N = sum_i exp(mu_N + t_N Z_i),  Z_i = sqrt(rho_N) F + sqrt(1 - rho_N) X_i,
// and the studies built on it. Replication r always uses RandomStream(seed, r);
// its first normal draw is the common factor F, whether or not it is used.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oprisk/invariance.hpp"
#include "oprisk/stats.hpp"

namespace oprisk {

struct ModelSpec {
  Schedule schedule;
  double q = 0.99;  // quantile level for value-at-risk studies

  void validate() const;
};

/// `requested` if positive, else OPRISK_WORKERS, else the hardware thread count.
unsigned resolve_workers(unsigned requested);

struct LossSample {
  std::vector<double> loss;       // one entry per replication
  std::vector<double> pair_mean;  // mean of Y_i Y_j over i != j, if requested
  std::size_t overflows = 0;      // replications whose loss was not finite
};

/// Raw per-replication losses for explicit schedule parameters. Throws
/// NumericalError when more than 0.01% of replications overflow.
LossSample simulate_losses(const SeverityFamily& family, const ScheduleRow& row, std::uint64_t n,
                           std::size_t n_reps, std::uint64_t seed, unsigned workers = 0,
                           bool pair_products = false);

struct QuantileEstimate {
  double level;
  double value;
  double se;  // bootstrap
};

struct SimEstimate {
  std::uint64_t n;
  std::size_t n_reps;
  double mean;
  double mean_se;
  double variance;
  double variance_se;
  std::vector<QuantileEstimate> quantiles;
  std::uint64_t seed;
  double elapsed;  // seconds
  std::size_t overflows;
};

SimEstimate simulate_bank_loss(const ModelSpec& spec, std::uint64_t n, std::size_t n_reps,
                               std::uint64_t seed, unsigned workers = 0,
                               std::span<const double> levels = {});

/// Summary moments of a loss sample; replications that overflowed are skipped.
StreamingMoments loss_moments_mc(std::span<const double> losses);

struct FluctuationRow {
  std::uint64_t n;
  double eps_var_mc;
  double eps_var_analytic;
  double ks_stable;
  double ks_normal;
  double gamma_fit;
  double delta_fit;
  double normal_mean;  // trimmed Gaussian fit
  double normal_sd;
};

/// eps_N = (L_N - A)/B with A, B from bbm_normalizers, compared against the
/// stable law of index min(alpha, 2) (quartile fit) and a Gaussian fitted to the
/// 1%-per-tail trimmed sample.
std::vector<FluctuationRow> fluctuation_study(const ModelSpec& spec, std::span<const std::uint64_t> n_list,
                                              std::size_t n_reps, std::uint64_t seed, unsigned workers = 0);

struct NormalFit {
  double mean;
  double sd;
};

/// Moments of the sample trimmed by `tail` in each tail, with the variance
/// rescaled by the truncated-normal factor so a Gaussian sample is unbiased.
NormalFit trimmed_normal_fit(std::span<const double> sorted_samples, double tail = 0.01);

struct DRRow {
  std::uint64_t n;
  double var_bank_mc;  // value at risk of L_N, empirical
  double var_bank_se;
  double sum_cell_var_analytic;
  double dr_mc;
  double dr_se;
  double dr_derived;  // NaN where the asymptotic form does not apply
  double dr_printed;
};

std::vector<DRRow> dr_study(const ModelSpec& spec, std::span<const std::uint64_t> n_list, std::size_t n_reps,
                            std::uint64_t seed, unsigned workers = 0);

/// Sum of the stand-alone cell quantiles, N e^{mu_N + t_N x_q}.
double sum_cell_var(const ModelSpec& spec, double n);

/// N maximizing sum_cell_var over real N; beyond it the sum decreases.
double sum_cell_var_peak(const ModelSpec& spec);

struct CorrRow {
  std::uint64_t n;
  double rho_n;
  double corr_mc;
  double corr_se;
  double corr_closed_form;
  double bank_mean;
  double bank_var;
};

/// Cell-pair correlation. The cross moment E[Y_1 Y_2] is estimated from all
/// within-replication pairs; the cell mean and variance are those of the
/// lognormal marginal, which the schedule fixes exactly.
std::vector<CorrRow> correlation_study(const ModelSpec& spec, std::span<const std::uint64_t> n_list,
                                       std::size_t n_reps, std::uint64_t seed, unsigned workers = 0);

}  // namespace oprisk
