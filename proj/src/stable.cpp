#include "oprisk/stable.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "oprisk/errors.hpp"
#include "oprisk/stats.hpp"

namespace oprisk {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kRelTol = 1e-10;
constexpr double kAbsTol = 1e-12;

// Globally adaptive Gauss-Kronrod over consecutive panels [cuts[i], cuts[i+1]].
// The panel with the largest error estimate is bisected until the summed
// error meets max(kAbsTol, kRelTol * |integral|).
template <class F>
double integrate(F f, const std::vector<double>& cuts, const char* what) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  struct Panel {
    double lo, hi, value, error;
    bool operator<(const Panel& other) const { return error < other.error; }
  };
  auto make_panel = [&](double lo, double hi) {
    double error = 0.0;
    const double value = Rule::integrate(f, lo, hi, 0, 0.0, &error);
    return Panel{lo, hi, value, error};
  };
  std::priority_queue<Panel> panels;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) panels.push(make_panel(cuts[i], cuts[i + 1]));
  }
  if (panels.empty()) return 0.0;

  constexpr int kMaxPanels = 4000;
  double total = 0.0;
  double error = 0.0;
  auto recount = [&] {
    total = 0.0;
    error = 0.0;
    for (auto copy = panels; !copy.empty(); copy.pop()) {
      total += copy.top().value;
      error += copy.top().error;
    }
  };
  auto converged = [&] { return error <= std::max(kAbsTol, kRelTol * std::abs(total)); };
  recount();
  while (!converged()) {
    if (static_cast<int>(panels.size()) >= kMaxPanels || !std::isfinite(total)) {
      std::ostringstream msg;
      msg << "stable " << what << ": quadrature did not converge (estimate " << total
          << ", error " << error << ")";
      throw NumericalError(msg.str());
    }
    const Panel worst = panels.top();
    panels.pop();
    const double m = 0.5 * (worst.lo + worst.hi);
    const Panel left = make_panel(worst.lo, m);
    const Panel right = make_panel(m, worst.hi);
    panels.push(left);
    panels.push(right);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    if (converged()) recount();  // confirm without incremental drift
  }
  return total;
}

enum class Half { Lower, Upper };
enum class Tail { Lower, Upper };

// Standard (gamma = 1, delta = 0) continuous-convention law with skew +/-1,
// via Nolan's integral representation on theta in (-theta0, pi/2).
//
// The interval is split at its midpoint and each half is integrated in
// w = ln(distance to the nearer endpoint). All trigonometric factors are
// evaluated from that distance directly, so the integrand keeps full relative
// precision where the mass concentrates against an endpoint (far tails).
class StandardKernel {
 public:
  StandardKernel(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (alpha_ == 1.0) {
      length_ = kPi;
      return;
    }
    zeta_ = -beta_ * std::tan(kHalfPi * alpha_);
    exponent_ = alpha_ / (alpha_ - 1.0);
    if (alpha_ < 1.0) {
      theta0_ = beta_ * kHalfPi;
      cos_t0_ = 0.0;
      sin_t0_ = beta_;
      log_cos_a_theta0_ = std::log(std::cos(kHalfPi * alpha_));
      sin_psi_ = std::sin(kPi * alpha_);
      cos_psi_ = std::cos(kPi * alpha_);
    } else {
      theta0_ = beta_ * (kHalfPi - kPi / alpha_);
      cos_t0_ = std::sin(kPi / alpha_);
      sin_t0_ = beta_ * std::cos(kPi / alpha_);
      log_cos_a_theta0_ = std::log(-std::cos(kHalfPi * alpha_));
      if (beta_ > 0.0) {
        sin_psi_ = std::sin(kPi * (alpha_ - 1.0));
        cos_psi_ = std::cos(kPi * (alpha_ - 1.0));
      } else {
        sin_psi_ = 0.0;
        cos_psi_ = -1.0;
      }
    }
    length_ = kHalfPi + theta0_;
    if (alpha_ < 1.0 && beta_ < 0.0) length_ = 0.0;
  }

  double zeta() const { return zeta_; }

  double log_shift(double z) const {
    if (alpha_ == 1.0) return -kHalfPi * z / beta_;
    return exponent_ * std::log(z - zeta_);
  }

  // ln g at distance `d` from the lower (theta = -theta0) or upper (pi/2) end.
  double log_g(Half half, double d, double shift) const {
    if (alpha_ == 1.0) {
      // beta = +1 only.
      double a, cos_theta, tan_theta;
      if (half == Half::Lower) {
        a = d;
        cos_theta = std::sin(d);
        tan_theta = -std::cos(d) / std::sin(d);
      } else {
        a = kPi - d;
        cos_theta = std::sin(d);
        tan_theta = std::cos(d) / std::sin(d);
      }
      return shift + std::log(2.0 / kPi) + std::log(a) - std::log(cos_theta) + a * tan_theta;
    }
    double c, s, k;
    const double ad = alpha_ * d;
    const double bd = (alpha_ - 1.0) * d;
    if (half == Half::Lower) {
      c = std::cos(d) * cos_t0_ + std::sin(d) * sin_t0_;
      s = std::sin(ad);
      k = cos_t0_ * std::cos(bd) - sin_t0_ * std::sin(bd);
    } else {
      c = std::sin(d);
      s = sin_psi_ * std::cos(ad) - cos_psi_ * std::sin(ad);
      // phi = psi - pi/2
      k = sin_psi_ * std::cos(bd) - cos_psi_ * std::sin(bd);
    }
    return shift + log_cos_a_theta0_ / (alpha_ - 1.0) + exponent_ * (std::log(c) - std::log(s)) +
           std::log(k) - std::log(c);
  }

  // Integral over theta of phi(g) on the full interval.
  template <class Phi>
  double integrate_g(Phi phi, double shift, const char* what) const {
    if (!(length_ > 0.0)) return 0.0;
    const double w_max = std::log(0.5 * length_);
    double total = 0.0;
    for (Half half : {Half::Lower, Half::Upper}) {
      auto lg = [&](double w) { return log_g(half, std::exp(w), shift); };
      // Breakpoints where ln g crosses fixed levels. The transition of e^{-g}
      // can be arbitrarily narrow in w (alpha = 1 tails), so it is located
      // explicitly rather than left to the adaptive bisection.
      const double w_end = std::max(w_max - 690.0, -700.0);
      const double lg_end = lg(w_end);
      const double lg_max = lg(w_max);
      std::vector<double> cuts;
      if (!std::isnan(lg_end) && !std::isnan(lg_max)) {
        for (double level : {-40.0, -10.0, -3.0, -1.0, 0.0, 1.0, 2.5, 4.0, 6.5}) {
          if ((lg_end > level) == (lg_max > level)) continue;
          auto residual = [&](double w) {
            const double v = lg(w) - level;
            return std::isnan(v) ? 0.0 : v;
          };
          std::uintmax_t iterations = 100;
          const auto [lo, hi] = boost::math::tools::toms748_solve(
              residual, w_end, w_max, lg_end - level, lg_max - level,
              boost::math::tools::eps_tolerance<double>(40), iterations);
          cuts.push_back(0.5 * (lo + hi));
        }
      }
      std::sort(cuts.begin(), cuts.end());
      double w_min = w_max - 40.0;
      if (!cuts.empty()) w_min = std::min(w_min, cuts.front() - 40.0);
      w_min = std::max(w_min, -700.0);
      cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                                [&](double w) { return !(w > w_min && w < w_max); }),
                 cuts.end());
      cuts.insert(cuts.begin(), w_min);
      cuts.push_back(w_max);
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      auto integrand = [&](double w) {
        const double d = std::exp(w);
        const double value = phi(log_g(half, d, shift));
        return value * d;
      };
      total += integrate(integrand, cuts, what);
    }
    return total;
  }

  // Requires z > zeta for alpha != 1.
  double pdf(double z) const {
    auto phi = [](double lg) {
      if (!(lg < 700.0)) return 0.0;
      const double g = std::exp(lg);
      return g * std::exp(-g);
    };
    const double integral = integrate_g(phi, log_shift(z), "pdf");
    if (alpha_ == 1.0) return 0.5 * integral;
    return alpha_ * integral / (kPi * std::abs(alpha_ - 1.0) * (z - zeta_));
  }

  // One tail probability at z (> zeta for alpha != 1).
  double tail(double z, Tail which) const {
    auto survive = [](double lg) { return lg < 700.0 ? std::exp(-std::exp(lg)) : 0.0; };
    auto hit = [](double lg) { return lg < 700.0 ? -std::expm1(-std::exp(lg)) : 1.0; };
    const double shift = log_shift(z);
    const double c_lower = alpha_ == 1.0 ? 0.0 : (kHalfPi - theta0_) / kPi;
    if (alpha_ <= 1.0) {
      // F = c1 + (1/pi) int e^{-g};  1 - F = (1/pi) int (1 - e^{-g}).
      if (which == Tail::Lower) return c_lower + integrate_g(survive, shift, "cdf") / kPi;
      return integrate_g(hit, shift, "cdf") / kPi;
    }
    // alpha > 1: 1 - F = (1/pi) int e^{-g}.
    if (which == Tail::Lower) return c_lower + integrate_g(hit, shift, "cdf") / kPi;
    return integrate_g(survive, shift, "cdf") / kPi;
  }

  double pdf_at_zeta() const {
    if (alpha_ < 1.0) return 0.0;
    return boost::math::tgamma(1.0 + 1.0 / alpha_) * cos_t0_ /
           (kPi * std::pow(1.0 + zeta_ * zeta_, 0.5 / alpha_));
  }
  double cdf_at_zeta() const { return alpha_ < 1.0 ? 0.0 : (kHalfPi - theta0_) / kPi; }

 private:
  double alpha_;
  double beta_;
  double zeta_ = 0.0;
  double theta0_ = 0.0;
  double cos_t0_ = 0.0;
  double sin_t0_ = 0.0;
  double sin_psi_ = 0.0;  // psi = alpha (theta0 + pi/2)
  double cos_psi_ = 0.0;
  double log_cos_a_theta0_ = 0.0;
  double exponent_ = 0.0;
  double length_ = 0.0;
};

bool near_zeta(double z, double zeta) {
  return std::abs(z - zeta) <= 1e-12 * std::max(1.0, std::abs(zeta));
}

// Within this distance of alpha = 1 (but not at it) the integrand is too
// sharply peaked to resolve; values are interpolated linearly in alpha between
// alpha = 1 and the edge of the band, which is accurate to O(kNearOne^2).
constexpr double kNearOne = 1e-5;

constexpr double kBandLow = 1.0 - kNearOne;
constexpr double kBandHigh = 1.0 + kNearOne;

bool inside_band(double alpha) { return alpha > kBandLow && alpha < kBandHigh && alpha != 1.0; }

template <class F>
double across_one(double alpha, F f) {
  const double edge = alpha < 1.0 ? kBandLow : kBandHigh;
  const double w = (alpha - 1.0) / (edge - 1.0);
  return (1.0 - w) * f(1.0) + w * f(edge);
}

double standard_pdf(double alpha, double z);
double standard_tail(double alpha, double z, Tail which);

double standard_pdf(double alpha, double z) {
  if (inside_band(alpha)) {
    return across_one(alpha, [z](double a) { return standard_pdf(a, z); });
  }
  if (alpha == 2.0) return std::exp(-0.25 * z * z) / (2.0 * std::sqrt(kPi));
  const StandardKernel right(alpha, 1.0);
  if (alpha == 1.0) return right.pdf(z);
  if (near_zeta(z, right.zeta())) return right.pdf_at_zeta();
  if (z > right.zeta()) return right.pdf(z);
  if (alpha < 1.0) return 0.0;
  return StandardKernel(alpha, -1.0).pdf(-z);
}

double standard_tail(double alpha, double z, Tail which) {
  if (inside_band(alpha)) {
    return across_one(alpha, [z, which](double a) { return standard_tail(a, z, which); });
  }
  if (alpha == 2.0) return 0.5 * std::erfc((which == Tail::Lower ? -z : z) / 2.0);
  const StandardKernel right(alpha, 1.0);
  if (alpha == 1.0) return right.tail(z, which);
  if (near_zeta(z, right.zeta())) {
    const double lower = right.cdf_at_zeta();
    return which == Tail::Lower ? lower : 1.0 - lower;
  }
  if (z > right.zeta()) return right.tail(z, which);
  if (alpha < 1.0) return which == Tail::Lower ? 0.0 : 1.0;
  // F(z; beta) = 1 - F(-z; -beta)
  return StandardKernel(alpha, -1.0).tail(-z, which == Tail::Lower ? Tail::Upper : Tail::Lower);
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": argument must be finite");
}

}  // namespace

StableDist::StableDist(double alpha_in, double gamma_in, double delta_in, StableParam param_in)
    : alpha(alpha_in), gamma(gamma_in), delta(delta_in), param(param_in) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("stable alpha must lie in (0, 2]");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("stable gamma must be positive");
  if (!std::isfinite(delta)) throw DomainError("stable delta must be finite");
}

StableDist StableDist::to(StableParam target) const {
  if (target == param) return *this;
  // delta_continuous = delta_classic + shift
  double shift = 0.0;
  if (alpha == 1.0) {
    shift = skew * (2.0 / kPi) * gamma * std::log(gamma);
  } else if (alpha != 2.0) {
    shift = skew * gamma * std::tan(kHalfPi * alpha);
  }
  const double new_delta = target == StableParam::Continuous ? delta + shift : delta - shift;
  return StableDist(alpha, gamma, new_delta, target);
}

double stable_pdf(const StableDist& dist, double x) {
  require_finite(x, "stable_pdf");
  const StableDist s0 = dist.to(StableParam::Continuous);
  return std::max(0.0, standard_pdf(s0.alpha, (x - s0.delta) / s0.gamma) / s0.gamma);
}

double stable_cdf(const StableDist& dist, double x) {
  require_finite(x, "stable_cdf");
  const StableDist s0 = dist.to(StableParam::Continuous);
  return clamp01(standard_tail(s0.alpha, (x - s0.delta) / s0.gamma, Tail::Lower));
}

double stable_sf(const StableDist& dist, double x) {
  require_finite(x, "stable_sf");
  const StableDist s0 = dist.to(StableParam::Continuous);
  return clamp01(standard_tail(s0.alpha, (x - s0.delta) / s0.gamma, Tail::Upper));
}

double stable_quantile(const StableDist& dist, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("stable_quantile: q must lie in (0, 1)");
  const StableDist s0 = dist.to(StableParam::Continuous);
  const double alpha = s0.alpha;
  const bool upper = q > 0.5;
  // Signed residual, increasing in z.
  auto residual = [&](double z) {
    return upper ? (1.0 - q) - standard_tail(alpha, z, Tail::Upper)
                 : standard_tail(alpha, z, Tail::Lower) - q;
  };

  double lo = -1.0;
  double hi = 1.0;
  if (alpha < 1.0) lo = StandardKernel(alpha, 1.0).zeta();
  double r_lo = residual(lo);
  double r_hi = residual(hi);
  for (int i = 0; r_hi < 0.0; ++i) {
    if (i > 200) throw NumericalError("stable_quantile: cannot bracket upper end");
    lo = hi;
    r_lo = r_hi;
    hi *= 4.0;
    r_hi = residual(hi);
  }
  for (int i = 0; r_lo > 0.0; ++i) {
    if (i > 200) throw NumericalError("stable_quantile: cannot bracket lower end");
    hi = lo;
    r_hi = r_lo;
    lo = lo * 4.0 - 1.0;
    r_lo = residual(lo);
  }
  if (r_lo == 0.0) return s0.gamma * lo + s0.delta;
  if (r_hi == 0.0) return s0.gamma * hi + s0.delta;

  std::uintmax_t max_iter = 300;
  const auto [a, b] = boost::math::tools::toms748_solve(
      residual, lo, hi, r_lo, r_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return s0.gamma * (0.5 * (a + b)) + s0.delta;
}

double stable_draw(const StableDist& dist, RandomStream& stream) {
  const StableDist s1 = dist.to(StableParam::Classic);
  const double alpha = s1.alpha;
  const double beta = StableDist::skew;
  const double v = kPi * (stream.uniform() - 0.5);
  const double w = stream.exponential();
  if (alpha == 1.0) {
    const double a = kHalfPi + beta * v;
    const double z = (a * std::tan(v) - beta * std::log(kHalfPi * w * std::cos(v) / a)) / kHalfPi;
    return s1.gamma * z + (2.0 / kPi) * beta * s1.gamma * std::log(s1.gamma) + s1.delta;
  }
  const double tan_pa = std::tan(kHalfPi * alpha);
  const double b = std::atan(beta * tan_pa) / alpha;
  const double s = std::pow(1.0 + beta * beta * tan_pa * tan_pa, 0.5 / alpha);
  const double z = s * std::sin(alpha * (v + b)) / std::pow(std::cos(v), 1.0 / alpha) *
                   std::pow(std::cos(v - alpha * (v + b)) / w, (1.0 - alpha) / alpha);
  return s1.gamma * z + s1.delta;
}

std::vector<double> stable_sample(const StableDist& dist, RandomStream& stream, std::size_t n) {
  if (n == 0) throw PreconditionError("stable_sample: n must be at least 1");
  std::vector<double> out(n);
  for (double& x : out) x = stable_draw(dist, stream);
  return out;
}

LocationScale fit_location_scale(std::span<const double> samples, double alpha) {
  if (samples.size() < 100) throw PreconditionError("fit_location_scale: need at least 100 samples");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("fit_location_scale: alpha must lie in (0, 2]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double e25 = sorted_quantile(sorted, 0.25);
  const double e75 = sorted_quantile(sorted, 0.75);
  if (!(e75 > e25)) throw NumericalError("fit_location_scale: zero interquartile range");
  const StableDist standard(alpha);
  const double z25 = stable_quantile(standard, 0.25);
  const double z75 = stable_quantile(standard, 0.75);
  const double gamma = (e75 - e25) / (z75 - z25);
  return {gamma, e25 - gamma * z25};
}

}  // namespace oprisk
