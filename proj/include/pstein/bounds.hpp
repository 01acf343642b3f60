#pragma once

// Normal-approximation bounds for U-statistics of Poisson processes:
// the partition integrals M_ij, the Kolmogorov and Wasserstein bounds built
// from them, the fourth-moment bound, R_ij, and Monte Carlo estimates of the
// general Malliavin-Stein Kolmogorov bound terms.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "pstein/chaos.hpp"
#include "pstein/kernels.hpp"
#include "pstein/measure.hpp"

namespace pstein {

struct MijEstimate {
  Estimate value;
  std::size_t partitions = 0;
  /// std_error / estimate > 0.5 (or a non-positive estimate with noise):
  /// the integral may be infinite.
  bool unreliable = false;
};

using MMatrix = std::vector<std::vector<MijEstimate>>;

struct MOptions {
  /// Monte Carlo samples per partition.
  std::size_t mc_samples = 200'000;
  std::uint64_t seed = 1;
  /// Inner draws per |f| factor when no closed-form marginal exists; each
  /// factor gets independent draws, so the product stays unbiased.
  std::size_t inner_samples = 1;
};

/// M_ij = sum over the partition class of (i, i, j, j) of the integral of
/// the contracted tensor product fbar_i x fbar_i x fbar_j x fbar_j.
MijEstimate compute_Mij(const SymmetricKernel& kernel,
                        const IntensitySpec& intensity, std::size_t i,
                        std::size_t j, const MOptions& options = {});

/// All k x k entries.
MMatrix compute_M(const SymmetricKernel& kernel, const IntensitySpec& intensity,
                  const MOptions& options = {});

struct BoundValue {
  double value = 0.0;
  double std_error = 0.0;
  /// min(value, 1): a Kolmogorov distance never exceeds one.
  double effective = 0.0;
};

/// 19 k^5 sum_{i,j} sqrt(M_ij) / Var F. Throws std::domain_error if Var <= 0.
BoundValue dK_bound(std::size_t k, const Estimate& var_f, const MMatrix& m);

/// 2 k^{7/2} sum_{i <= j} sqrt(M_ij) / Var F.
BoundValue dW_bound(std::size_t k, const Estimate& var_f, const MMatrix& m);

/// k^2 sum_{i,j} M_ij + 3 k^2 (Var F)^2, bounding E (F - EF)^4.
Estimate fourth_moment_bound(std::size_t k, const Estimate& var_f,
                             const MMatrix& m);

struct ROptions {
  std::size_t reps = 2000;
  std::size_t z_samples = 64;
  std::uint64_t seed = 1;
  MarginalOptions marginal{};
};

/// R_ij = Var( integral I_{i-1}(f_i(z, .)) I_{j-1}(f_j(z, .)) dmu(z) ) for
/// k <= 2. Each replication integrates over fresh z samples; the average
/// within-replication Monte Carlo variance is subtracted, which keeps the
/// estimator unbiased (and allows small negative values).
Estimate estimate_Rij(const SymmetricKernel& kernel,
                      const IntensitySpec& intensity, std::size_t i,
                      std::size_t j, const ROptions& options = {});

struct Theorem1Options {
  std::size_t reps = 10'000;
  std::size_t z_samples = 64;
  std::uint64_t seed = 1;
  /// Kolmogorov test points for the sup term; defaults to 41 points on [-4, 4].
  std::vector<double> s_grid;
  MarginalOptions marginal{};
  IntegrationConfig variance{};
};

/// Terms of the Kolmogorov bound for the standardized G = (F - EF)/sqrt(Var F)
///   T1 + 2 c(F) sqrt(T2) + sup_s E<D 1(G > s), DG |DL^{-1} G|>,
/// all estimated over independent configurations. Inner products over z are
/// Monte Carlo integrals; E<DG, DG>^2 uses the unbiased U-estimator of a
/// squared integral.
struct Theorem1Terms {
  Estimate t1;           // E|1 - <DG, -DL^{-1}G>|
  Estimate t2;           // E<(DG)^2, (DL^{-1}G)^2>
  Estimate dg_fourth;    // E<(DG)^2, (DG)^2>
  Estimate dg_norm_sq;   // E<DG, DG>^2
  Estimate g_fourth;     // E G^4
  Estimate c_f;
  /// Grid maximum over s: a lower estimate of the supremum.
  Estimate sup_term;
  double sup_argmax = 0.0;
  Estimate bound;
  Estimate var_f;
  double mean_f = 0.0;
};

Theorem1Terms estimate_theorem1_terms(const SymmetricKernel& kernel,
                                      const IntensitySpec& intensity,
                                      const Theorem1Options& options = {});

std::vector<double> default_s_grid();

struct ReportOptions {
  std::uint64_t seed = 1;
  IntegrationConfig variance{};
  MOptions m{};
  bool with_r = false;
  ROptions r{};
  bool with_theorem1 = false;
  Theorem1Options theorem1{};
};

struct BoundReport {
  std::size_t k = 0;
  KernelDescriptor kernel;
  double t = 0.0;
  Estimate mass;
  Estimate var_f;
  std::vector<Estimate> var_terms;
  MMatrix m;
  BoundValue dk;
  BoundValue dw;
  Estimate fourth_moment;
  std::optional<std::vector<std::vector<Estimate>>> r;
  std::optional<Theorem1Terms> theorem1;

  bool any_unreliable() const;
};

BoundReport compute_bound_report(const SymmetricKernel& kernel,
                                 const IntensitySpec& intensity,
                                 const ReportOptions& options);

/// Field names: var_f, m, r, dk_bound, dw_bound, fourth_moment_bound, t1, t2,
/// c_f, sup_term. Monte Carlo quantities are {"value", "stderr"} objects.
nlohmann::json to_json(const BoundReport& report);

nlohmann::json to_json(const Estimate& e);

}  // namespace pstein
