#pragma once

// Distances between a law on the real line and the standard normal.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "pstein/measure.hpp"

namespace pstein {

/// sup_s |F_n(s) - Phi(s)| for the empirical CDF F_n, taken over both
/// one-sided limits at every sample. Throws std::invalid_argument if empty.
double empirical_dK(std::span<const double> samples);

/// Integral of |F_n(s) - Phi(s)| over the real line, exact up to rounding:
/// piecewise antiderivatives of Phi between order statistics, split where
/// Phi crosses the empirical level. Throws std::invalid_argument if empty.
double empirical_dW(std::span<const double> samples);

/// A statistic of a sample with a bootstrap standard error.
Estimate bootstrap_estimate(
    std::span<const double> samples,
    const std::function<double(std::span<const double>)>& statistic,
    std::size_t resamples, std::uint64_t seed);

struct PoissonKolmogorov {
  double distance = 0.0;
  /// Certified bound on |P(Y <= m) - Phi((m - t)/sqrt t)| beyond last_jump.
  double tail_bound = 0.0;
  long long last_jump = 0;
};

/// Exact d_K((Y - t)/sqrt(t), N) for Y ~ Poisson(t). Throws for t <= 0.
PoissonKolmogorov poisson_kolmogorov(double t);
double poisson_exact_dK(double t);

}  // namespace pstein
