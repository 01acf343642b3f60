#include "pstein/stein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace pstein {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;  // sqrt(2 pi)
const double kGMax = kSqrt2Pi / 4.0;

}  // namespace

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("normal_quantile: p outside [0, 1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double mills_ratio(double x) {
  if (x < 0.0) throw std::domain_error("mills_ratio: x < 0");
  if (x < 30.0) return kSqrt2Pi * std::exp(0.5 * x * x) * normal_sf(x);
  // Laplace continued fraction 1 / (x + 1 / (x + 2 / (x + 3 / ...))).
  double tail = x;
  for (int n = 60; n >= 1; --n) tail = x + n / tail;
  return 1.0 / tail;
}

SteinSolution::SteinSolution(double s) : s_(s), cdf_s_(normal_cdf(s)) {
  if (!std::isfinite(s)) throw std::domain_error("Stein point s must be finite");
}

double SteinSolution::g(double w) const {
  if (!std::isfinite(w)) throw std::domain_error("g: w must be finite");
  // Each branch only evaluates the Mills ratio at a non-negative argument and
  // only exponentiates non-positive numbers.
  if (w <= s_) {
    if (w <= 0.0) return normal_sf(s_) * mills_ratio(-w);
    return normal_cdf(w) * std::exp(0.5 * (w * w - s_ * s_)) * mills_ratio(s_);
  }
  if (w >= 0.0) return cdf_s_ * mills_ratio(w);
  return normal_sf(w) * std::exp(0.5 * (w * w - s_ * s_)) * mills_ratio(-s_);
}

double SteinSolution::g_prime(double w) const {
  return w * g(w) + (w <= s_ ? 1.0 : 0.0) - cdf_s_;
}

double SteinSolution::g_prime_right(double w) const {
  return w * g(w) + (w < s_ ? 1.0 : 0.0) - cdf_s_;
}

double SteinSolution::g_second(double w) const {
  return g(w) + w * g_prime(w);
}

double stein_g(double s, double w) { return SteinSolution(s).g(w); }

double stein_g_prime(double s, double w) {
  return SteinSolution(s).g_prime(w);
}

SteinReport check_stein_properties(const SteinGrid& grid) {
  if (!(grid.step > 0.0) || !(grid.w_min <= grid.w_max)) {
    throw std::invalid_argument("stein grid requires step > 0, w_min <= w_max");
  }
  SteinReport report;
  report.min_g = std::numeric_limits<double>::infinity();
  report.g_upper_margin = report.g_prime_margin = report.w_g_margin =
      report.g_second_margin = std::numeric_limits<double>::infinity();
  const auto steps =
      static_cast<long>(std::floor((grid.w_max - grid.w_min) / grid.step + 1e-9));
  for (double s : grid.s_values) {
    const SteinSolution sol(s);
    for (long n = 0; n <= steps; ++n) {
      const double w = grid.w_min + static_cast<double>(n) * grid.step;
      const double g = sol.g(w);
      const double gp = sol.g_prime(w);
      ++report.points;
      report.min_g = std::min(report.min_g, g);
      report.g_upper_margin = std::min(report.g_upper_margin, kGMax - g);
      report.g_prime_margin = std::min(report.g_prime_margin, 1.0 - std::abs(gp));
      report.w_g_margin = std::min(report.w_g_margin, 1.0 - std::abs(w * g));
      if (w != s) {
        const double gpp = g + w * gp;
        report.g_second_margin = std::min(
            report.g_second_margin, kGMax + std::abs(w) - std::abs(gpp));
      }
    }
  }
  return report;
}

}  // namespace pstein
