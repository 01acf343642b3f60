#pragma once

// Symmetric U-statistic kernels with optional closed-form marginal integrals.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "pstein/measure.hpp"

namespace pstein {

/// Name plus parameter map; the serialized form of a built-in kernel.
struct KernelDescriptor {
  std::string name;
  std::map<std::string, double> params;
};

class SymmetricKernel {
 public:
  using Eval = std::function<double(std::span<const Point>)>;
  /// Integral of f with the leading xs.size() arguments fixed, taken over the
  /// remaining k - xs.size() arguments against mu_t. No binomial factor.
  /// Returns nullopt when there is no closed form for `intensity`.
  using Marginal = std::function<std::optional<double>(
      std::span<const Point> xs, const IntensitySpec& intensity)>;

  /// abs_eval defaults to |eval|. Missing marginals mean Monte Carlo fallback.
  SymmetricKernel(KernelDescriptor descriptor, std::size_t order, Eval eval,
                  Eval abs_eval = {}, Marginal marginal = {},
                  Marginal abs_marginal = {});

  std::size_t order() const { return order_; }
  const KernelDescriptor& descriptor() const { return descriptor_; }
  const std::string& name() const { return descriptor_.name; }
  std::uint64_t id() const { return id_; }

  double eval(std::span<const Point> args) const { return eval_(args); }
  double abs_eval(std::span<const Point> args) const { return abs_eval_(args); }

  std::optional<double> marginal(std::span<const Point> xs,
                                 const IntensitySpec& intensity) const;
  std::optional<double> abs_marginal(std::span<const Point> xs,
                                     const IntensitySpec& intensity) const;

  /// f vanishes whenever two arguments are farther apart than this radius.
  /// Enables neighbour-grid evaluation for order-2 kernels.
  std::optional<double> interaction_radius() const { return radius_; }
  void set_interaction_radius(double r) { radius_ = r; }

  /// Declared f >= 0 (so abs_eval == eval).
  bool nonnegative() const { return nonnegative_; }
  void set_nonnegative(bool v) { nonnegative_ = v; }

 private:
  KernelDescriptor descriptor_;
  std::size_t order_;
  Eval eval_;
  Eval abs_eval_;
  Marginal marginal_;
  Marginal abs_marginal_;
  std::optional<double> radius_;
  bool nonnegative_ = false;
  std::uint64_t id_;
};

/// Built-ins:
///   count                      k = 1, f = 1
///   constant {c, k}            f = c
///   geometric_indicator {r}    k = 2, f(x, y) = 1(|x - y| <= r)
///   product {k, a, b}          f = prod_i (a + b * x_i[0])
/// Throws std::invalid_argument for unknown names, k < 1 or r <= 0.
SymmetricKernel make_kernel(const KernelDescriptor& descriptor);

/// A user-supplied kernel without closed-form marginals.
SymmetricKernel make_user_kernel(std::string name, std::size_t order,
                                 SymmetricKernel::Eval eval);

/// The kernel c * f, with marginals scaled accordingly.
SymmetricKernel scaled(const SymmetricKernel& kernel, double c);

/// True iff eval agrees, to relative tolerance 1e-12, under every permutation
/// of `trials` random argument tuples drawn uniformly from `box`.
bool symmetry_check(const SymmetricKernel& kernel, const Box& box,
                    std::size_t trials, Rng& rng);

/// Monte Carlo settings for marginals without a closed form. Every call
/// restarts the stream from `seed`, so different probe points share common
/// random numbers.
struct MarginalOptions {
  std::size_t mc_samples = 4096;
  std::uint64_t seed = 0x6d617267ULL;
};

/// Marginal (or |f| marginal) with Monte Carlo fallback; exact results carry
/// a zero standard error.
Estimate marginal_value(const SymmetricKernel& kernel,
                        const IntensitySpec& intensity,
                        std::span<const Point> xs, bool absolute,
                        const MarginalOptions& options = {});

/// Integral of f (or |f|) over box^k, cached per (kernel, intensity, options).
Estimate full_integral(const SymmetricKernel& kernel,
                       const IntensitySpec& intensity, bool absolute,
                       const MarginalOptions& options = {});

}  // namespace pstein
