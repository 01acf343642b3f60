#include "pstein/chaos.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pstein/parallel.hpp"
#include "pstein/ustat.hpp"

namespace pstein {

namespace {

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

Point box_center(const Box& box) {
  Point p = Point::zeros(box.dim());
  for (std::size_t d = 0; d < box.dim(); ++d) {
    p[d] = 0.5 * (box[d].lo + box[d].hi);
  }
  return p;
}

bool has_closed_marginal(const SymmetricKernel& kernel,
                         const IntensitySpec& intensity, std::size_t i,
                         bool absolute) {
  if (i == kernel.order()) return true;
  const std::vector<Point> probe(i, box_center(intensity.box()));
  return absolute ? kernel.abs_marginal(probe, intensity).has_value()
                  : kernel.marginal(probe, intensity).has_value();
}

}  // namespace

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double b = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(b);
}

void check_order(const SymmetricKernel& kernel) {
  if (kernel.order() > kMaxOrder) {
    throw std::invalid_argument("kernel order " +
                                std::to_string(kernel.order()) +
                                " exceeds the supported maximum " +
                                std::to_string(kMaxOrder));
  }
}

ChaosKernel::ChaosKernel(const SymmetricKernel& kernel,
                         const IntensitySpec& intensity, std::size_t index,
                         bool absolute, MarginalOptions options)
    : kernel_(&kernel),
      intensity_(&intensity),
      index_(index),
      absolute_(absolute),
      options_(options) {
  check_order(kernel);
  if (index < 1 || index > kernel.order()) {
    throw std::invalid_argument("chaos index i=" + std::to_string(index) +
                                " outside 1..k=" +
                                std::to_string(kernel.order()));
  }
  binomial_ = binomial(kernel.order(), index);
  source_ = has_closed_marginal(kernel, intensity, index, absolute)
                ? ChaosSource::analytic
                : ChaosSource::monte_carlo;
}

Estimate ChaosKernel::operator()(std::span<const Point> xs) const {
  if (xs.size() != index_) {
    throw std::invalid_argument("chaos kernel expects " +
                                std::to_string(index_) + " arguments");
  }
  const Estimate m =
      marginal_value(*kernel_, *intensity_, xs, absolute_, options_);
  return {binomial_ * m.value, binomial_ * m.std_error};
}

Estimate kernel_f_i(const SymmetricKernel& kernel,
                    const IntensitySpec& intensity, std::size_t i,
                    std::span<const Point> points,
                    const MarginalOptions& options) {
  return ChaosKernel(kernel, intensity, i, false, options)(points);
}

Estimate kernel_empirical(const SymmetricKernel& kernel,
                          const IntensitySpec& intensity, std::size_t n,
                          std::span<const Point> points, std::size_t reps,
                          std::uint64_t seed) {
  if (reps == 0) throw std::invalid_argument("kernel_empirical: reps == 0");
  if (n == 0 || points.size() != n) {
    throw std::invalid_argument("kernel_empirical: need n >= 1 probe points");
  }
  std::vector<double> values(reps);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    const PointConfiguration config = sample_point_process(intensity, rng);
    values[r] = iterated_difference(kernel, config, points);
  });
  RunningStats stats;
  for (double v : values) stats.add(v);
  const double scale = 1.0 / factorial(n);
  return {scale * stats.mean(), scale * stats.std_error()};
}

VarianceResult variance_from_kernels(const SymmetricKernel& kernel,
                                     const IntensitySpec& intensity,
                                     const IntegrationConfig& config) {
  check_order(kernel);
  const std::size_t k = kernel.order();
  VarianceResult out;
  double var = 0.0;
  double var_se2 = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    const double coef = factorial(i) * binomial(k, i) * binomial(k, i);
    const std::uint64_t seed = mix_seed(config.seed, i);
    Estimate norm2;
    if (has_closed_marginal(kernel, intensity, i, false)) {
      norm2 = mc_integral_parallel(
          [&](std::span<const Point> xs, Rng&) {
            const double m = *kernel.marginal(xs, intensity);
            return m * m;
          },
          intensity, i, config.mc_samples, seed);
    } else {
      // x (i args), y (k - i args), y' (k - i args), all independent.
      const std::size_t free_args = k - i;
      norm2 = mc_integral_parallel(
          [&](std::span<const Point> all, Rng&) {
            std::vector<Point> a(all.begin(), all.begin() + k);
            std::vector<Point> b(all.begin(), all.begin() + i);
            b.insert(b.end(), all.begin() + k, all.begin() + k + free_args);
            return kernel.eval(a) * kernel.eval(b);
          },
          intensity, i + 2 * free_args, config.mc_samples, seed);
    }
    const Estimate term{coef * norm2.value, coef * norm2.std_error};
    out.terms.push_back(term);
    var += term.value;
    var_se2 += term.std_error * term.std_error;
  }
  out.variance = {var, std::sqrt(var_se2)};
  return out;
}

double wiener_ito_I1(const PointFunction& g, const PointConfiguration& config,
                     double g_integral) {
  double sum = 0.0;
  for (const auto& x : config) sum += g(x);
  return sum - g_integral;
}

double wiener_ito_I1(const PointFunction& g, const PointConfiguration& config,
                     const IntensitySpec& intensity,
                     std::optional<double> g_integral,
                     const MarginalOptions& options) {
  if (!g_integral) {
    Rng rng = make_stream(options.seed, 0);
    g_integral = mc_integral([&](std::span<const Point> x) { return g(x[0]); },
                             intensity, 1, options.mc_samples, rng)
                     .value;
  }
  return wiener_ito_I1(g, config, *g_integral);
}

}  // namespace pstein
