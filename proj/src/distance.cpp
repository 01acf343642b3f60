#include "pstein/distance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pstein/stein.hpp"

namespace pstein {

namespace {

constexpr double kTailTarget = 1e-12;

std::vector<double> sorted_copy(std::span<const double> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("distance requires at least one sample");
  }
  std::vector<double> x(samples.begin(), samples.end());
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite sample");
  }
  std::sort(x.begin(), x.end());
  return x;
}

/// Integral of Phi over (-inf, s].
double lower_antiderivative(double s) {
  return s * normal_cdf(s) + normal_pdf(s);
}

/// Integral of 1 - Phi over [s, inf).
double upper_antiderivative(double s) {
  return normal_pdf(s) - s * normal_sf(s);
}

/// Integral of Phi(s) - p over [a, b], choosing the form without
/// cancellation on each side of zero.
double integral_cdf_minus(double a, double b, double p) {
  if (a >= b) return 0.0;
  if (a >= 0.0) {
    return (1.0 - p) * (b - a) - (upper_antiderivative(a) - upper_antiderivative(b));
  }
  if (b <= 0.0) {
    return (lower_antiderivative(b) - lower_antiderivative(a)) - p * (b - a);
  }
  return integral_cdf_minus(a, 0.0, p) + integral_cdf_minus(0.0, b, p);
}

/// Integral of |Phi(s) - p| over [a, b].
double integral_abs_gap(double a, double b, double p) {
  if (a >= b) return 0.0;
  const double crossing = normal_quantile(p);
  if (crossing <= a) return integral_cdf_minus(a, b, p);
  if (crossing >= b) return -integral_cdf_minus(a, b, p);
  return -integral_cdf_minus(a, crossing, p) +
         integral_cdf_minus(crossing, b, p);
}

/// Chernoff bound on P(Y >= a) for Y ~ Poisson(t), a > t.
double poisson_upper_tail_bound(double t, double a) {
  return std::exp(-t + a * (std::log(t) + 1.0 - std::log(a)));
}

}  // namespace

double empirical_dK(std::span<const double> samples) {
  const std::vector<double> x = sorted_copy(samples);
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double phi = normal_cdf(x[i]);
    const double above = static_cast<double>(i + 1) / n;
    const double below = static_cast<double>(i) / n;
    d = std::max({d, std::abs(above - phi), std::abs(below - phi)});
  }
  return d;
}

double empirical_dW(std::span<const double> samples) {
  const std::vector<double> x = sorted_copy(samples);
  const std::size_t n = x.size();
  double total = lower_antiderivative(x.front()) + upper_antiderivative(x.back());
  for (std::size_t i = 1; i < n; ++i) {
    total += integral_abs_gap(x[i - 1], x[i],
                              static_cast<double>(i) / static_cast<double>(n));
  }
  return total;
}

Estimate bootstrap_estimate(
    std::span<const double> samples,
    const std::function<double(std::span<const double>)>& statistic,
    std::size_t resamples, std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("bootstrap: empty sample");
  const double value = statistic(samples);
  if (resamples < 2) return {value, 0.0};
  Rng rng = make_stream(seed, 0);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<double> resample(samples.size());
  RunningStats stats;
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& v : resample) v = samples[pick(rng)];
    stats.add(statistic(resample));
  }
  return {value, std::sqrt(stats.variance())};
}

PoissonKolmogorov poisson_kolmogorov(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("poisson_exact_dK requires finite t > 0");
  }
  const double root_t = std::sqrt(t);
  auto jump = [&](long long m) { return (static_cast<double>(m) - t) / root_t; };
  auto tail_beyond = [&](long long m) {
    return std::max(poisson_upper_tail_bound(t, static_cast<double>(m + 1)),
                    normal_sf(jump(m)));
  };
  long long last = static_cast<long long>(std::ceil(t + 12.0 * root_t));
  while (tail_beyond(last) >= kTailTarget) ++last;

  PoissonKolmogorov out;
  out.last_jump = last;
  out.tail_bound = tail_beyond(last);
  const double log_t = std::log(t);
  long double cdf = 0.0L;
  for (long long m = 0; m <= last; ++m) {
    const double md = static_cast<double>(m);
    const long double pmf = std::exp(static_cast<long double>(
        -t + md * log_t - std::lgamma(md + 1.0)));
    const double below = static_cast<double>(cdf);
    cdf += pmf;
    const double above = static_cast<double>(std::min(cdf, 1.0L));
    const double phi = normal_cdf(jump(m));
    out.distance =
        std::max({out.distance, std::abs(above - phi), std::abs(below - phi)});
  }
  return out;
}

double poisson_exact_dK(double t) { return poisson_kolmogorov(t).distance; }

}  // namespace pstein
