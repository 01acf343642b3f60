#pragma once

// Wiener-Ito chaos kernels of U-statistics, the variance identity and the
// pathwise first-order Wiener-Ito integral.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pstein/kernels.hpp"
#include "pstein/measure.hpp"

namespace pstein {

/// Largest U-statistic order handled by the chaos and bound computations.
inline constexpr std::size_t kMaxOrder = 4;

enum class ChaosSource { analytic, monte_carlo };

/// f_i (or the |f| kernel f-bar_i) of a fixed U-statistic:
///   f_i(x_1..x_i) = C(k, i) * integral f(x_1..x_i, y_1..y_{k-i}) dmu^{k-i}.
class ChaosKernel {
 public:
  ChaosKernel(const SymmetricKernel& kernel, const IntensitySpec& intensity,
              std::size_t index, bool absolute = false,
              MarginalOptions options = {});

  std::size_t index() const { return index_; }
  bool absolute() const { return absolute_; }
  /// analytic when the kernel has a closed-form marginal for this intensity.
  ChaosSource source() const { return source_; }

  Estimate operator()(std::span<const Point> xs) const;

 private:
  const SymmetricKernel* kernel_;
  const IntensitySpec* intensity_;
  std::size_t index_;
  bool absolute_;
  MarginalOptions options_;
  double binomial_;
  ChaosSource source_;
};

double binomial(std::size_t n, std::size_t k);

/// f_i at one i-tuple. Throws std::invalid_argument unless 1 <= i <= k <= 4.
Estimate kernel_f_i(const SymmetricKernel& kernel,
                    const IntensitySpec& intensity, std::size_t i,
                    std::span<const Point> points,
                    const MarginalOptions& options = {});

/// (1/n!) E D^n_{points} F over `reps` configurations. Replication r uses
/// stream (seed, r), so repeated calls with one seed share random numbers.
Estimate kernel_empirical(const SymmetricKernel& kernel,
                          const IntensitySpec& intensity, std::size_t n,
                          std::span<const Point> points, std::size_t reps,
                          std::uint64_t seed);

struct IntegrationConfig {
  std::size_t mc_samples = 200'000;
  std::uint64_t seed = 1;
  MarginalOptions marginal{};
};

struct VarianceResult {
  Estimate variance;
  /// terms[i - 1] = i! * ||f_i||^2
  std::vector<Estimate> terms;
};

/// Var F = sum_i i! ||f_i||^2. With a closed-form marginal each norm is a
/// Monte Carlo integral of the squared marginal over box^i; otherwise the
/// unbiased form integral f(x, y) f(x, y') over box^{2k - i} is used.
VarianceResult variance_from_kernels(const SymmetricKernel& kernel,
                                     const IntensitySpec& intensity,
                                     const IntegrationConfig& config = {});

using PointFunction = std::function<double(const Point&)>;

/// I_1(g) = sum_{x in eta} g(x) - integral g dmu.
double wiener_ito_I1(const PointFunction& g, const PointConfiguration& config,
                     double g_integral);

/// As above, integrating g by Monte Carlo when no integral is supplied.
double wiener_ito_I1(const PointFunction& g, const PointConfiguration& config,
                     const IntensitySpec& intensity,
                     std::optional<double> g_integral = std::nullopt,
                     const MarginalOptions& options = {});

void check_order(const SymmetricKernel& kernel);

}  // namespace pstein
