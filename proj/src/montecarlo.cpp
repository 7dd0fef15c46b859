#include "oprisk/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/minima.hpp>

#include "oprisk/errors.hpp"
#include "oprisk/stable.hpp"

namespace oprisk {
namespace {

constexpr std::size_t kChunk = 256;
constexpr std::size_t kBootstrapResamples = 200;
// Stream ids at or above this value are reserved for bootstrap resampling.
constexpr std::uint64_t kBootstrapStream = std::uint64_t{1} << 63;

struct CellParams {
  double mu;
  double common;  // t sqrt(rho_N), multiplies F
  double idio;    // t sqrt(1 - rho_N), multiplies X_i
};

template <SeverityKind Kind>
double replicate(const SeverityFamily& family, const CellParams& p, std::uint64_t n, RandomStream& stream,
                 double* pair_mean) {
  const double f = stream.normal();
  const double shift = p.mu + p.common * f;
  double sum = 0.0;
  double cross = 0.0;  // sum over i < j of Y_i Y_j
  for (std::uint64_t i = 0; i < n; ++i) {
    double x;
    if constexpr (Kind == SeverityKind::Gaussian) {
      x = stream.normal();
    } else {
      x = draw(family, stream);
    }
    const double y = std::exp(shift + p.idio * x);
    if (pair_mean) cross += y * sum;
    sum += y;
  }
  if (pair_mean) {
    const double nd = static_cast<double>(n);
    *pair_mean = n > 1 ? 2.0 * cross / (nd * (nd - 1.0)) : std::numeric_limits<double>::quiet_NaN();
  }
  return sum;
}

template <class Fn>
void parallel_chunks(std::size_t n_items, unsigned workers, Fn&& fn) {
  const std::size_t n_chunks = (n_items + kChunk - 1) / kChunk;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      fn(c * kChunk, std::min(n_items, (c + 1) * kChunk));
    }
  };
  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(workers, n_chunks));
  if (n_threads <= 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads - 1);
  for (unsigned w = 1; w < n_threads; ++w) pool.emplace_back(work);
  work();
  for (std::thread& th : pool) th.join();
}

std::vector<double> sorted_finite(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (std::isfinite(v)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double quantile_bootstrap_se(std::span<const double> samples, double level, std::uint64_t seed,
                             std::uint64_t tag) {
  RandomStream stream(seed, kBootstrapStream + tag);
  return bootstrap_se(samples, [level](std::span<const double> s) { return empirical_quantile(s, level); },
                      kBootstrapResamples, stream);
}

void check_n_list(std::span<const std::uint64_t> n_list, double min_n) {
  if (n_list.empty()) throw PreconditionError("study: N list is empty");
  for (std::uint64_t n : n_list) {
    if (static_cast<double>(n) < min_n) {
      std::ostringstream msg;
      msg << "study: N=" << n << " is below the schedule minimum " << min_n;
      throw DomainError(msg.str());
    }
  }
}

}  // namespace

void ModelSpec::validate() const {
  schedule.validate();
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("model: quantile level q must lie in (0, 1)");
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OPRISK_WORKERS"); env && *env) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value <= 0 || value > 4096) {
      throw ConfigError(std::string("OPRISK_WORKERS must be a positive integer, got '") + env + "'");
    }
    return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

LossSample simulate_losses(const SeverityFamily& family, const ScheduleRow& row, std::uint64_t n,
                           std::size_t n_reps, std::uint64_t seed, unsigned workers, bool pair_products) {
  if (n < 1) throw PreconditionError("simulate: N must be at least 1");
  if (n_reps < 1) throw PreconditionError("simulate: need at least one replication");
  if (!(row.rho_n >= 0.0 && row.rho_n <= 1.0)) throw DomainError("simulate: rho_N must lie in [0, 1]");
  if (row.rho_n > 0.0 && family.kind() != SeverityKind::Gaussian) {
    throw ConfigError("simulate: correlated cells require the gaussian family");
  }
  const CellParams params{row.mu, row.t * std::sqrt(row.rho_n), row.t * std::sqrt(1.0 - row.rho_n)};

  LossSample out;
  out.loss.resize(n_reps);
  if (pair_products) out.pair_mean.resize(n_reps);
  const bool gaussian = family.kind() == SeverityKind::Gaussian;
  parallel_chunks(n_reps, resolve_workers(workers), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      RandomStream stream(seed, r);
      double* pair = pair_products ? &out.pair_mean[r] : nullptr;
      out.loss[r] = gaussian ? replicate<SeverityKind::Gaussian>(family, params, n, stream, pair)
                             : replicate<SeverityKind::Weibull>(family, params, n, stream, pair);
    }
  });

  out.overflows = static_cast<std::size_t>(
      std::count_if(out.loss.begin(), out.loss.end(), [](double v) { return !std::isfinite(v); }));
  if (static_cast<double>(out.overflows) > 1e-4 * static_cast<double>(n_reps)) {
    std::ostringstream msg;
    msg << "simulate: " << out.overflows << " of " << n_reps << " replications overflowed at N=" << n
        << " (mu=" << row.mu << ", t=" << row.t << ")";
    throw NumericalError(msg.str());
  }
  return out;
}

StreamingMoments loss_moments_mc(std::span<const double> losses) {
  // Fixed chunking so the merge order never depends on the caller.
  StreamingMoments total;
  for (std::size_t begin = 0; begin < losses.size(); begin += kChunk) {
    StreamingMoments chunk;
    const std::size_t end = std::min(losses.size(), begin + kChunk);
    for (std::size_t i = begin; i < end; ++i) {
      if (std::isfinite(losses[i])) chunk.add(losses[i]);
    }
    total.merge(chunk);
  }
  return total;
}

SimEstimate simulate_bank_loss(const ModelSpec& spec, std::uint64_t n, std::size_t n_reps, std::uint64_t seed,
                               unsigned workers, std::span<const double> levels) {
  spec.validate();
  if (n_reps < 100) throw PreconditionError("simulate: n_reps must be at least 100");
  const auto start = std::chrono::steady_clock::now();
  const ScheduleRow row = spec.schedule.evaluate(static_cast<double>(n));
  const LossSample sample = simulate_losses(spec.schedule.family, row, n, n_reps, seed, workers);

  const StreamingMoments moments = loss_moments_mc(sample.loss);
  SimEstimate est{};
  est.n = n;
  est.n_reps = n_reps;
  est.mean = moments.mean();
  est.mean_se = moments.standard_error();
  est.variance = moments.variance();
  double m4 = 0.0;
  for (double v : sample.loss) {
    if (!std::isfinite(v)) continue;
    const double d = v - est.mean;
    m4 += d * d * d * d;
  }
  const double count = static_cast<double>(moments.count());
  m4 /= count;
  est.variance_se = std::sqrt(std::max(0.0, m4 - est.variance * est.variance) / count);

  const std::vector<double> sorted = sorted_finite(sample.loss);
  std::vector<double> ordered_levels(levels.begin(), levels.end());
  std::sort(ordered_levels.begin(), ordered_levels.end());
  for (std::size_t i = 0; i < ordered_levels.size(); ++i) {
    const double level = ordered_levels[i];
    est.quantiles.push_back({level, sorted_quantile(sorted, level), quantile_bootstrap_se(sorted, level, seed, i)});
  }
  est.seed = seed;
  est.overflows = sample.overflows;
  est.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return est;
}

NormalFit trimmed_normal_fit(std::span<const double> sorted_samples, double tail) {
  if (!(tail >= 0.0 && tail < 0.25)) throw DomainError("trimmed fit: tail fraction must lie in [0, 0.25)");
  const std::size_t n = sorted_samples.size();
  const auto cut = static_cast<std::size_t>(std::floor(tail * static_cast<double>(n)));
  if (n < 2 * cut + 2) throw PreconditionError("trimmed fit: sample too small");
  StreamingMoments m;
  for (std::size_t i = cut; i < n - cut; ++i) m.add(sorted_samples[i]);
  double factor = 1.0;
  if (tail > 0.0) {
    const boost::math::normal_distribution<double> unit;
    const double z = boost::math::quantile(unit, 1.0 - tail);
    factor = 1.0 - 2.0 * z * boost::math::pdf(unit, z) / (1.0 - 2.0 * tail);
  }
  return {m.mean(), std::sqrt(m.variance() / factor)};
}

std::vector<FluctuationRow> fluctuation_study(const ModelSpec& spec, std::span<const std::uint64_t> n_list,
                                              std::size_t n_reps, std::uint64_t seed, unsigned workers) {
  spec.validate();
  check_n_list(n_list, 2.0);
  if (n_reps < 100) throw PreconditionError("fluctuations: n_reps must be at least 100");
  const double alpha = std::min(2.0, alpha_index(spec.schedule.point()));

  std::vector<FluctuationRow> rows;
  for (std::uint64_t n : n_list) {
    const double nd = static_cast<double>(n);
    const ScheduleRow row = spec.schedule.evaluate(nd);
    const Normalizers norm = bbm_normalizers(spec.schedule, nd);
    LossSample sample = simulate_losses(spec.schedule.family, row, n, n_reps, seed, workers);
    for (double& v : sample.loss) v = (v - norm.centering) / norm.scale;
    const std::vector<double> eps = sorted_finite(sample.loss);

    FluctuationRow out{};
    out.n = n;
    out.eps_var_mc = loss_moments_mc(eps).variance();
    out.eps_var_analytic = loss_moments(spec.schedule, nd).variance / (norm.scale * norm.scale);

    const LocationScale fit = fit_location_scale(eps, alpha);
    out.gamma_fit = fit.gamma;
    out.delta_fit = fit.delta;
    const StableDist stable(alpha, fit.gamma, fit.delta);
    out.ks_stable = ks_statistic(eps, [&](double x) { return stable_cdf(stable, x); });

    const NormalFit normal = trimmed_normal_fit(eps);
    out.normal_mean = normal.mean;
    out.normal_sd = normal.sd;
    out.ks_normal = ks_statistic(eps, [&](double x) { return 0.5 * std::erfc(-(x - normal.mean) / (normal.sd * std::sqrt(2.0))); });
    rows.push_back(out);
  }
  return rows;
}

double sum_cell_var(const ModelSpec& spec, double n) {
  const ScheduleRow row = spec.schedule.evaluate(n);
  return std::exp(std::log(n) + row.mu + row.t * quantile(spec.schedule.family, spec.q));
}

double sum_cell_var_peak(const ModelSpec& spec) {
  spec.validate();
  const double lo = std::log(std::max(spec.schedule.min_n(), 2.0));
  const double hi = 200.0;
  auto negative_log = [&](double u) { return -std::log(sum_cell_var(spec, std::exp(u))); };
  const auto best = boost::math::tools::brent_find_minima(negative_log, lo, hi, 50);
  return std::exp(best.first);
}

std::vector<DRRow> dr_study(const ModelSpec& spec, std::span<const std::uint64_t> n_list, std::size_t n_reps,
                            std::uint64_t seed, unsigned workers) {
  spec.validate();
  check_n_list(n_list, spec.schedule.min_n());
  if (!(spec.q > 0.5 && spec.q < 1.0)) throw PreconditionError("diversification: q must lie in (0.5, 1)");
  if (static_cast<double>(n_reps) < 20.0 / (1.0 - spec.q)) {
    std::ostringstream msg;
    msg << "diversification: n_reps=" << n_reps << " leaves fewer than 20 points beyond q=" << spec.q;
    throw PreconditionError(msg.str());
  }
  const SeverityFamily& family = spec.schedule.family;
  const bool stable_regime = alpha_index(spec.schedule.point()) < 2.0;

  std::vector<DRRow> rows;
  std::uint64_t tag = 0;
  for (std::uint64_t n : n_list) {
    const double nd = static_cast<double>(n);
    DRRow out{};
    out.n = n;
    out.sum_cell_var_analytic = sum_cell_var(spec, nd);
    if (n == 1) {
      // A single cell: the bank quantile is the cell quantile.
      out.var_bank_mc = out.sum_cell_var_analytic;
      out.var_bank_se = 0.0;
    } else {
      const ScheduleRow row = spec.schedule.evaluate(nd);
      const LossSample sample = simulate_losses(family, row, n, n_reps, seed, workers);
      const std::vector<double> sorted = sorted_finite(sample.loss);
      out.var_bank_mc = sorted_quantile(sorted, spec.q);
      out.var_bank_se = quantile_bootstrap_se(sorted, spec.q, seed, tag++);
    }
    out.dr_mc = out.var_bank_mc / out.sum_cell_var_analytic;
    out.dr_se = out.var_bank_se / out.sum_cell_var_analytic;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const bool asymptotic = stable_regime && n >= 2;
    out.dr_derived = asymptotic ? dr_asymptotic(family, spec.schedule.lambda, spec.q, nd, SubleadingSign::Derived) : nan;
    out.dr_printed = asymptotic ? dr_asymptotic(family, spec.schedule.lambda, spec.q, nd, SubleadingSign::Printed) : nan;
    rows.push_back(out);
  }
  return rows;
}

std::vector<CorrRow> correlation_study(const ModelSpec& spec, std::span<const std::uint64_t> n_list,
                                       std::size_t n_reps, std::uint64_t seed, unsigned workers) {
  spec.validate();
  if (spec.schedule.family.kind() != SeverityKind::Gaussian) {
    throw PreconditionError("correlation: requires the gaussian family");
  }
  check_n_list(n_list, 2.0);
  if (n_reps < 100) throw PreconditionError("correlation: n_reps must be at least 100");

  std::vector<CorrRow> rows;
  for (std::uint64_t n : n_list) {
    const double nd = static_cast<double>(n);
    const ScheduleRow row = spec.schedule.evaluate(nd);
    const LossSample sample = simulate_losses(spec.schedule.family, row, n, n_reps, seed, workers, true);

    const double s2 = row.t * row.t;
    const double mean_sq = std::exp(2.0 * row.mu + s2);  // (E Y)^2
    const double cell_var = mean_sq * std::expm1(s2);
    StreamingMoments cross;
    for (std::size_t r = 0; r < n_reps; ++r) {
      if (std::isfinite(sample.loss[r])) cross.add(sample.pair_mean[r]);
    }
    const StreamingMoments bank = loss_moments_mc(sample.loss);

    CorrRow out{};
    out.n = n;
    out.rho_n = row.rho_n;
    out.corr_mc = (cross.mean() - mean_sq) / cell_var;
    out.corr_se = cross.standard_error() / cell_var;
    out.corr_closed_form = lognormal_pair_correlation(row.t, row.rho_n);
    out.bank_mean = bank.mean();
    out.bank_var = bank.variance();
    rows.push_back(out);
  }
  return rows;
}

}  // namespace oprisk
