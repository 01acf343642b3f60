#pragma once

// Pathwise U-statistics and their Malliavin operators.

#include <cstdint>
#include <span>
#include <vector>

#include "pstein/kernels.hpp"
#include "pstein/measure.hpp"

namespace pstein {

struct UStatValue {
  double value = 0.0;
  /// Ordered k-tuples of distinct points: n (n - 1) ... (n - k + 1).
  std::uint64_t tuple_count = 0;
};

/// F(eta) = sum of f over ordered k-tuples of distinct points, computed as
/// k! times the sum over unordered k-subsets.
UStatValue evaluate(const SymmetricKernel& kernel,
                    const PointConfiguration& config);

/// The U-statistic of |f|.
UStatValue evaluate_abs(const SymmetricKernel& kernel,
                        const PointConfiguration& config);

/// D_z F = F(eta + delta_z) - F(eta), via the (k-1)-subsets of eta only.
double add_one_cost(const SymmetricKernel& kernel,
                    const PointConfiguration& config, const Point& z);

/// D^n_{z_1..z_n} F by inclusion-exclusion over all 2^n subsets of zs.
/// Throws std::invalid_argument for n == 0 or n > 20.
double iterated_difference(const SymmetricKernel& kernel,
                           const PointConfiguration& config,
                           std::span<const Point> zs);

/// -L^{-1}(F - EF)(eta) =
///   sum_{m=1..k} (1/m) [ sum over ordered m-tuples of the (k-m)-marginal
///                        - integral of f over box^k ].
double inverse_ou_pathwise(const SymmetricKernel& kernel,
                           const PointConfiguration& config,
                           const IntensitySpec& intensity,
                           const MarginalOptions& options = {});

/// -D_z L^{-1}(F - EF)(eta), the add-one cost of inverse_ou_pathwise:
///   sum_{m=1..k} (m-1)! sum over (m-1)-subsets c of eta of marginal_m(z, c).
double inverse_ou_add_one_cost(const SymmetricKernel& kernel,
                               const PointConfiguration& config,
                               const Point& z, const IntensitySpec& intensity,
                               const MarginalOptions& options = {});

/// F evaluated on `reps` independent configurations; replication r uses
/// stream (seed, r).
std::vector<double> replicate(const SymmetricKernel& kernel,
                              const IntensitySpec& intensity, std::size_t reps,
                              std::uint64_t seed);

}  // namespace pstein
