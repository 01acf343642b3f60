#include "pstein/ustat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pstein/parallel.hpp"

namespace pstein {

namespace {

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

std::uint64_t falling_factorial(std::size_t n, std::size_t k) {
  if (n < k) return 0;
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < k; ++i) v *= n - i;
  return v;
}

/// Calls fn(args) for every m-subset of `points`, with args[offset..] holding
/// the subset in index order. args[0..offset) are left untouched.
template <typename Fn>
void for_each_subset(std::span<const Point> points, std::size_t m,
                     std::vector<Point>& args, std::size_t offset, Fn&& fn) {
  const std::size_t n = points.size();
  if (m > n) return;
  if (m == 0) {
    fn(std::span<const Point>(args));
    return;
  }
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    for (std::size_t i = 0; i < m; ++i) args[offset + i] = points[idx[i]];
    fn(std::span<const Point>(args));
    std::size_t pos = m;
    while (pos > 0 && idx[pos - 1] == n - m + pos - 1) --pos;
    if (pos == 0) return;
    ++idx[pos - 1];
    for (std::size_t i = pos; i < m; ++i) idx[i] = idx[i - 1] + 1;
  }
}

/// Sum of g over unordered pairs at most `radius` apart in the first
/// coordinate; g must vanish beyond `radius` in Euclidean distance.
template <typename Fn>
double pair_sum_sweep(std::span<const Point> points, double radius, Fn&& g) {
  std::vector<Point> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Point& a, const Point& b) { return a[0] < b[0]; });
  double sum = 0.0;
  Point pair[2];
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    pair[0] = sorted[i];
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      if (sorted[j][0] - sorted[i][0] > radius) break;
      pair[1] = sorted[j];
      sum += g(std::span<const Point>(pair, 2));
    }
  }
  return sum;
}

UStatValue evaluate_impl(const SymmetricKernel& kernel,
                         const PointConfiguration& config, bool absolute) {
  const std::size_t k = kernel.order();
  const std::size_t n = config.size();
  UStatValue out{0.0, falling_factorial(n, k)};
  if (n < k) return out;
  auto f = [&](std::span<const Point> a) {
    return absolute ? kernel.abs_eval(a) : kernel.eval(a);
  };
  double sum = 0.0;
  if (k == 2 && kernel.interaction_radius()) {
    sum = pair_sum_sweep(config.points(), *kernel.interaction_radius(), f);
  } else {
    std::vector<Point> args(k);
    for_each_subset(config.points(), k, args, 0,
                    [&](std::span<const Point> a) { sum += f(a); });
  }
  out.value = factorial(k) * sum;
  return out;
}

}  // namespace

UStatValue evaluate(const SymmetricKernel& kernel,
                    const PointConfiguration& config) {
  return evaluate_impl(kernel, config, false);
}

UStatValue evaluate_abs(const SymmetricKernel& kernel,
                        const PointConfiguration& config) {
  return evaluate_impl(kernel, config, true);
}

double add_one_cost(const SymmetricKernel& kernel,
                    const PointConfiguration& config, const Point& z) {
  const std::size_t k = kernel.order();
  std::vector<Point> args(k);
  args[0] = z;
  const auto radius = kernel.interaction_radius();
  double sum = 0.0;
  if (k == 2 && radius) {
    for (const auto& x : config) {
      if (std::abs(x[0] - z[0]) > *radius) continue;
      args[1] = x;
      sum += kernel.eval(args);
    }
  } else {
    for_each_subset(config.points(), k - 1, args, 1,
                    [&](std::span<const Point> a) { sum += kernel.eval(a); });
  }
  return factorial(k) * sum;
}

double iterated_difference(const SymmetricKernel& kernel,
                           const PointConfiguration& config,
                           std::span<const Point> zs) {
  const std::size_t n = zs.size();
  if (n == 0) throw std::invalid_argument("iterated_difference: n == 0");
  if (n > 20) throw std::invalid_argument("iterated_difference: n > 20");
  // delta[I] = F(eta + sum_{i in I} delta_{z_i}) - F(eta). The F(eta) terms
  // cancel in the alternating sum, so they are never formed.
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> delta(subsets, 0.0);
  double result = 0.0;
  for (std::size_t mask = 1; mask < subsets; ++mask) {
    const std::size_t top = std::bit_width(mask) - 1;
    const std::size_t rest = mask & ~(std::size_t{1} << top);
    PointConfiguration grown = config;
    for (std::size_t i = 0; i < top; ++i) {
      if (rest & (std::size_t{1} << i)) grown.add(zs[i]);
    }
    delta[mask] = delta[rest] + add_one_cost(kernel, grown, zs[top]);
    const bool positive = (n - std::popcount(mask)) % 2 == 0;
    result += positive ? delta[mask] : -delta[mask];
  }
  return result;
}

double inverse_ou_pathwise(const SymmetricKernel& kernel,
                           const PointConfiguration& config,
                           const IntensitySpec& intensity,
                           const MarginalOptions& options) {
  const std::size_t k = kernel.order();
  const double total = full_integral(kernel, intensity, false, options).value;
  double result = 0.0;
  for (std::size_t m = 1; m <= k; ++m) {
    double tuple_sum = 0.0;
    if (m == k) {
      tuple_sum = evaluate(kernel, config).value;
    } else {
      std::vector<Point> args(m);
      double subset_sum = 0.0;
      for_each_subset(config.points(), m, args, 0,
                      [&](std::span<const Point> a) {
                        subset_sum +=
                            marginal_value(kernel, intensity, a, false, options)
                                .value;
                      });
      tuple_sum = factorial(m) * subset_sum;
    }
    result += (tuple_sum - total) / static_cast<double>(m);
  }
  return result;
}

double inverse_ou_add_one_cost(const SymmetricKernel& kernel,
                               const PointConfiguration& config,
                               const Point& z, const IntensitySpec& intensity,
                               const MarginalOptions& options) {
  const std::size_t k = kernel.order();
  double result = add_one_cost(kernel, config, z) / static_cast<double>(k);
  for (std::size_t m = 1; m < k; ++m) {
    std::vector<Point> args(m);
    args[0] = z;
    double subset_sum = 0.0;
    for_each_subset(config.points(), m - 1, args, 1,
                    [&](std::span<const Point> a) {
                      subset_sum +=
                          marginal_value(kernel, intensity, a, false, options)
                              .value;
                    });
    result += factorial(m - 1) * subset_sum;
  }
  return result;
}

std::vector<double> replicate(const SymmetricKernel& kernel,
                              const IntensitySpec& intensity, std::size_t reps,
                              std::uint64_t seed) {
  std::vector<double> out(reps);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    out[r] = evaluate(kernel, sample_point_process(intensity, rng)).value;
  });
  return out;
}

}  // namespace pstein
