#include "pstein/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pstein/parallel.hpp"
#include "pstein/partitions.hpp"
#include "pstein/ustat.hpp"

namespace pstein {

namespace {

constexpr std::size_t kMaxIntegrationDim = 8;
constexpr double kUnreliableRatio = 0.5;

void check_pair(const SymmetricKernel& kernel, std::size_t i, std::size_t j) {
  check_order(kernel);
  const std::size_t k = kernel.order();
  if (i < 1 || j < 1 || i > k || j > k) {
    throw std::invalid_argument("indices (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") outside 1..k=" +
                                std::to_string(k));
  }
}

/// |f| chaos kernel fbar_a with an unbiased single-draw fallback.
class AbsChaosFactor {
 public:
  AbsChaosFactor(const SymmetricKernel& kernel, const IntensitySpec& intensity,
                 std::size_t arity, std::size_t inner_samples)
      : kernel_(kernel),
        intensity_(intensity),
        arity_(arity),
        inner_samples_(std::max<std::size_t>(1, inner_samples)),
        coef_(binomial(kernel.order(), arity)) {
    const ChaosKernel probe(kernel, intensity, arity, true);
    closed_ = probe.source() == ChaosSource::analytic;
    free_mass_ = std::pow(intensity.mass().value,
                          static_cast<double>(kernel.order() - arity));
  }

  double operator()(std::span<const Point> xs, Rng& rng) const {
    if (closed_) return coef_ * *kernel_.abs_marginal(xs, intensity_);
    std::array<Point, kMaxOrder> args;
    std::copy(xs.begin(), xs.end(), args.begin());
    const std::span<const Point> full(args.data(), kernel_.order());
    double sum = 0.0;
    for (std::size_t s = 0; s < inner_samples_; ++s) {
      for (std::size_t a = arity_; a < kernel_.order(); ++a) {
        args[a] = sample_location(intensity_, rng);
      }
      sum += kernel_.abs_eval(full);
    }
    return coef_ * free_mass_ * sum / static_cast<double>(inner_samples_);
  }

 private:
  const SymmetricKernel& kernel_;
  const IntensitySpec& intensity_;
  std::size_t arity_;
  std::size_t inner_samples_;
  double coef_;
  bool closed_ = false;
  double free_mass_ = 1.0;
};

double safe_sqrt(double x) { return x > 0.0 ? std::sqrt(x) : 0.0; }

/// S = sum sqrt(M_ij) / Var over the selected entries, with a first-order
/// standard error.
Estimate sqrt_sum_ratio(const Estimate& var_f, const MMatrix& m,
                        bool upper_triangle) {
  if (!(var_f.value > 0.0)) {
    throw std::domain_error("bound requires Var F > 0");
  }
  double sum = 0.0;
  double se2 = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = upper_triangle ? i : 0; j < m[i].size(); ++j) {
      const Estimate& e = m[i][j].value;
      if (!std::isfinite(e.value)) {
        throw std::domain_error("bound requires finite M_ij");
      }
      const double root = safe_sqrt(e.value);
      sum += root;
      if (e.std_error > 0.0) {
        const double d = root > 0.0 ? e.std_error / (2.0 * root)
                                    : std::sqrt(e.std_error);
        se2 += d * d;
      }
    }
  }
  const double s = sum / var_f.value;
  const double se =
      std::sqrt(se2 / (var_f.value * var_f.value) +
                std::pow(s * var_f.std_error / var_f.value, 2.0));
  return {s, se};
}

/// c * sum / Var, multiplied before dividing so exact inputs stay exact.
BoundValue scaled_bound(double c, const Estimate& var_f, const MMatrix& m,
                        bool upper_triangle) {
  const Estimate s = sqrt_sum_ratio(var_f, m, upper_triangle);
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = upper_triangle ? i : 0; j < m[i].size(); ++j) {
      sum += safe_sqrt(m[i][j].value.value);
    }
  }
  const double value = c * sum / var_f.value;
  return {value, c * s.std_error, value};
}

struct RepSums {
  double mean = 0.0;
  double within = 0.0;
};

}  // namespace

MijEstimate compute_Mij(const SymmetricKernel& kernel,
                        const IntensitySpec& intensity, std::size_t i,
                        std::size_t j, const MOptions& options) {
  check_pair(kernel, i, j);
  const auto partitions =
      enumerate_partitions(static_cast<int>(i), static_cast<int>(j));
  const std::array<std::size_t, 4> arity{i, i, j, j};
  const AbsChaosFactor fbar_i(kernel, intensity, i, options.inner_samples);
  const AbsChaosFactor fbar_j(kernel, intensity, j, options.inner_samples);
  const std::uint64_t pair_seed = mix_seed(options.seed, 16 * i + j);

  MijEstimate out;
  out.partitions = partitions.size();
  double se2 = 0.0;
  for (std::size_t p = 0; p < partitions.size(); ++p) {
    const Partition& pi = partitions[p];
    const std::size_t dims = pi.size();
    if (dims > kMaxIntegrationDim) {
      throw std::invalid_argument("partition integral of dimension " +
                                  std::to_string(dims) + " exceeds 8");
    }
    // slot_block[g][s]: integration variable replacing x^{(g+1)}_{s+1}.
    std::array<std::vector<std::size_t>, 4> slot_block;
    for (std::size_t g = 0; g < 4; ++g) slot_block[g].resize(arity[g]);
    for (std::size_t b = 0; b < dims; ++b) {
      for (const auto& v : pi.blocks[b]) {
        slot_block[v.group - 1][v.slot - 1] = b;
      }
    }
    auto integrand = [&](std::span<const Point> vars, Rng& rng) {
      std::array<Point, kMaxOrder> args;
      double product = 1.0;
      for (std::size_t g = 0; g < 4 && product != 0.0; ++g) {
        for (std::size_t s = 0; s < arity[g]; ++s) {
          args[s] = vars[slot_block[g][s]];
        }
        const std::span<const Point> xs(args.data(), arity[g]);
        product *= g < 2 ? fbar_i(xs, rng) : fbar_j(xs, rng);
      }
      return product;
    };
    const Estimate e = mc_integral_parallel(integrand, intensity, dims,
                                            options.mc_samples,
                                            mix_seed(pair_seed, p));
    out.value.value += e.value;
    se2 += e.std_error * e.std_error;
  }
  out.value.std_error = std::sqrt(se2);
  const double est = out.value.value;
  const double se = out.value.std_error;
  out.unreliable = se > 0.0 && (est <= 0.0 || se / est > kUnreliableRatio);
  return out;
}

MMatrix compute_M(const SymmetricKernel& kernel, const IntensitySpec& intensity,
                  const MOptions& options) {
  check_order(kernel);
  const std::size_t k = kernel.order();
  MMatrix m(k, std::vector<MijEstimate>(k));
  for (std::size_t i = 1; i <= k; ++i) {
    for (std::size_t j = 1; j <= k; ++j) {
      m[i - 1][j - 1] = compute_Mij(kernel, intensity, i, j, options);
    }
  }
  return m;
}

BoundValue dK_bound(std::size_t k, const Estimate& var_f, const MMatrix& m) {
  BoundValue b =
      scaled_bound(19.0 * std::pow(static_cast<double>(k), 5.0), var_f, m, false);
  b.effective = std::min(b.value, 1.0);
  return b;
}

BoundValue dW_bound(std::size_t k, const Estimate& var_f, const MMatrix& m) {
  return scaled_bound(2.0 * std::pow(static_cast<double>(k), 3.5), var_f, m,
                      true);
}

Estimate fourth_moment_bound(std::size_t k, const Estimate& var_f,
                             const MMatrix& m) {
  const double k2 = static_cast<double>(k * k);
  double sum = 0.0;
  double se2 = 0.0;
  for (const auto& row : m) {
    for (const auto& e : row) {
      sum += e.value.value;
      se2 += e.value.std_error * e.value.std_error;
    }
  }
  const double value = k2 * sum + 3.0 * k2 * var_f.value * var_f.value;
  const double var_term = 6.0 * k2 * var_f.value * var_f.std_error;
  return {value, std::sqrt(k2 * k2 * se2 + var_term * var_term)};
}

Estimate estimate_Rij(const SymmetricKernel& kernel,
                      const IntensitySpec& intensity, std::size_t i,
                      std::size_t j, const ROptions& options) {
  const std::size_t k = kernel.order();
  if (k > 2) throw std::invalid_argument("estimate_Rij supports k <= 2 only");
  check_pair(kernel, i, j);
  if (options.reps < 2 || options.z_samples < 2) {
    throw std::invalid_argument("estimate_Rij needs reps >= 2, z_samples >= 2");
  }
  const double mass = intensity.mass().value;
  const double coef1 = binomial(k, 1);
  // I_{a-1}(f_a(z, .)) at one configuration.
  auto chaos_integral = [&](std::size_t a, const Point& z,
                            const PointConfiguration& config) {
    const std::array<Point, 1> zs{z};
    const double marginal =
        marginal_value(kernel, intensity, zs, false, options.marginal).value;
    if (a == 1) return coef1 * marginal;
    std::array<Point, 2> pair{z, z};
    double sum = 0.0;
    for (const auto& x : config) {
      pair[1] = x;
      sum += kernel.eval(pair);
    }
    return sum - marginal;
  };

  std::vector<RepSums> reps(options.reps);
  parallel_for(options.reps, [&](std::size_t r) {
    Rng rng = make_stream(options.seed, r);
    const PointConfiguration config = sample_point_process(intensity, rng);
    RunningStats stats;
    for (std::size_t l = 0; l < options.z_samples; ++l) {
      const Point z = sample_location(intensity, rng);
      stats.add(mass * chaos_integral(i, z, config) *
                chaos_integral(j, z, config));
    }
    reps[r] = {stats.mean(), stats.variance() / static_cast<double>(stats.count())};
  });

  RunningStats means;
  RunningStats within;
  for (const auto& r : reps) {
    means.add(r.mean);
    within.add(r.within);
  }
  const double n = static_cast<double>(options.reps);
  double m4 = 0.0;
  for (const auto& r : reps) m4 += std::pow(r.mean - means.mean(), 4.0);
  m4 /= n;
  const double v = means.variance();
  const double se_var = std::sqrt(std::max(0.0, m4 - v * v) / n);
  return {v - within.mean(), std::hypot(se_var, within.std_error())};
}

std::vector<double> default_s_grid() {
  std::vector<double> grid(41);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    grid[n] = (static_cast<double>(n) - 20.0) / 5.0;
  }
  return grid;
}

Theorem1Terms estimate_theorem1_terms(const SymmetricKernel& kernel,
                                      const IntensitySpec& intensity,
                                      const Theorem1Options& options) {
  check_order(kernel);
  if (options.reps < 2 || options.z_samples < 2) {
    throw std::invalid_argument("theorem-1 terms need reps >= 2, z_samples >= 2");
  }
  const std::vector<double> grid =
      options.s_grid.empty() ? default_s_grid() : options.s_grid;
  Theorem1Terms out;
  out.var_f = variance_from_kernels(kernel, intensity, options.variance).variance;
  const double var = out.var_f.value;
  if (!(var > 0.0)) throw std::domain_error("Var F estimate is not positive");
  const double sd = std::sqrt(var);
  out.mean_f = full_integral(kernel, intensity, false, options.marginal).value;
  const double mass = intensity.mass().value;
  const double z_count = static_cast<double>(options.z_samples);

  struct Rep {
    double t1, t2, dg4, dg_sq, g4;
    std::vector<double> sup;
  };
  std::vector<Rep> reps(options.reps);
  parallel_for(options.reps, [&](std::size_t r) {
    Rng rng = make_stream(options.seed, r);
    const PointConfiguration config = sample_point_process(intensity, rng);
    const double g = (evaluate(kernel, config).value - out.mean_f) / sd;
    double sum_ab = 0.0, sum_a2b2 = 0.0, sum_a2 = 0.0, sum_a4 = 0.0;
    std::vector<double> sup(grid.size(), 0.0);
    for (std::size_t l = 0; l < options.z_samples; ++l) {
      const Point z = sample_location(intensity, rng);
      const double a = add_one_cost(kernel, config, z);
      const double b =
          inverse_ou_add_one_cost(kernel, config, z, intensity, options.marginal);
      sum_ab += a * b;
      sum_a2b2 += a * a * b * b;
      sum_a2 += a * a;
      sum_a4 += a * a * a * a;
      const double g_plus = g + a / sd;
      for (std::size_t s = 0; s < grid.size(); ++s) {
        const double jump =
            (g_plus > grid[s] ? 1.0 : 0.0) - (g > grid[s] ? 1.0 : 0.0);
        sup[s] += jump * a * std::abs(b);
      }
    }
    Rep rep;
    rep.t1 = std::abs(1.0 - (mass / var) * (sum_ab / z_count));
    rep.t2 = (mass / (var * var)) * (sum_a2b2 / z_count);
    rep.dg4 = (mass / (var * var)) * (sum_a4 / z_count);
    rep.dg_sq = (mass * mass / (var * var)) *
                ((sum_a2 * sum_a2 - sum_a4) / (z_count * (z_count - 1.0)));
    rep.g4 = g * g * g * g;
    for (auto& v : sup) v *= (mass / var) / z_count;
    rep.sup = std::move(sup);
    reps[r] = std::move(rep);
  });

  RunningStats t1, t2, dg4, dg_sq, g4;
  std::vector<RunningStats> sup(grid.size());
  for (const auto& rep : reps) {
    t1.add(rep.t1);
    t2.add(rep.t2);
    dg4.add(rep.dg4);
    dg_sq.add(rep.dg_sq);
    g4.add(rep.g4);
    for (std::size_t s = 0; s < grid.size(); ++s) sup[s].add(rep.sup[s]);
  }
  out.t1 = t1.estimate();
  out.t2 = t2.estimate();
  out.dg_fourth = dg4.estimate();
  out.dg_norm_sq = dg_sq.estimate();
  out.g_fourth = g4.estimate();
  std::size_t best = 0;
  for (std::size_t s = 1; s < grid.size(); ++s) {
    if (sup[s].mean() > sup[best].mean()) best = s;
  }
  out.sup_term = sup[best].estimate();
  out.sup_argmax = grid[best];

  // c(F) = sqrt(A) + B^{1/4} (C^{1/4} + 1), first-order error propagation.
  const double a = std::max(out.dg_fourth.value, 0.0);
  const double b = std::max(out.dg_norm_sq.value, 0.0);
  const double c = std::max(out.g_fourth.value, 0.0);
  const double root_a = std::sqrt(a);
  const double b4 = std::pow(b, 0.25);
  const double c4 = std::pow(c, 0.25);
  out.c_f.value = root_a + b4 * (c4 + 1.0);
  const double da = root_a > 0.0 ? out.dg_fourth.std_error / (2.0 * root_a) : 0.0;
  const double db =
      b > 0.0 ? 0.25 * b4 / b * out.dg_norm_sq.std_error * (c4 + 1.0) : 0.0;
  const double dc = c > 0.0 ? 0.25 * b4 * c4 / c * out.g_fourth.std_error : 0.0;
  out.c_f.std_error = std::sqrt(da * da + db * db + dc * dc);

  const double root_t2 = std::sqrt(std::max(out.t2.value, 0.0));
  out.bound.value = out.t1.value + 2.0 * out.c_f.value * root_t2 +
                    out.sup_term.value;
  const double d_t2 =
      root_t2 > 0.0 ? out.c_f.value * out.t2.std_error / root_t2 : 0.0;
  out.bound.std_error =
      std::sqrt(out.t1.std_error * out.t1.std_error +
                std::pow(2.0 * root_t2 * out.c_f.std_error, 2.0) + d_t2 * d_t2 +
                out.sup_term.std_error * out.sup_term.std_error);
  return out;
}

bool BoundReport::any_unreliable() const {
  for (const auto& row : m) {
    for (const auto& e : row) {
      if (e.unreliable) return true;
    }
  }
  return false;
}

BoundReport compute_bound_report(const SymmetricKernel& kernel,
                                 const IntensitySpec& intensity,
                                 const ReportOptions& options) {
  check_order(kernel);
  BoundReport report;
  report.k = kernel.order();
  report.kernel = kernel.descriptor();
  report.t = intensity.scale();
  report.mass = intensity.mass();

  IntegrationConfig var_config = options.variance;
  var_config.seed = mix_seed(options.seed, 1);
  const VarianceResult var = variance_from_kernels(kernel, intensity, var_config);
  report.var_f = var.variance;
  report.var_terms = var.terms;

  MOptions m_options = options.m;
  m_options.seed = mix_seed(options.seed, 2);
  report.m = compute_M(kernel, intensity, m_options);
  report.dk = dK_bound(report.k, report.var_f, report.m);
  report.dw = dW_bound(report.k, report.var_f, report.m);
  report.fourth_moment = fourth_moment_bound(report.k, report.var_f, report.m);

  if (options.with_r && report.k <= 2) {
    ROptions r_options = options.r;
    std::vector<std::vector<Estimate>> r(report.k,
                                         std::vector<Estimate>(report.k));
    for (std::size_t i = 1; i <= report.k; ++i) {
      for (std::size_t j = 1; j <= report.k; ++j) {
        r_options.seed = mix_seed(mix_seed(options.seed, 3), 16 * i + j);
        r[i - 1][j - 1] = estimate_Rij(kernel, intensity, i, j, r_options);
      }
    }
    report.r = std::move(r);
  }
  if (options.with_theorem1) {
    Theorem1Options t_options = options.theorem1;
    t_options.seed = mix_seed(options.seed, 4);
    t_options.variance = var_config;
    report.theorem1 = estimate_theorem1_terms(kernel, intensity, t_options);
  }
  return report;
}

nlohmann::json to_json(const Estimate& e) {
  return {{"value", e.value}, {"stderr", e.std_error}};
}

nlohmann::json to_json(const BoundReport& report) {
  using nlohmann::json;
  auto bound_json = [](const BoundValue& b) {
    return json{{"value", b.value}, {"stderr", b.std_error},
                {"effective", b.effective}};
  };
  json m = json::array();
  for (const auto& row : report.m) {
    json jrow = json::array();
    for (const auto& e : row) {
      jrow.push_back({{"value", e.value.value},
                      {"stderr", e.value.std_error},
                      {"partitions", e.partitions},
                      {"unreliable", e.unreliable}});
    }
    m.push_back(std::move(jrow));
  }
  json var_terms = json::array();
  for (const auto& e : report.var_terms) var_terms.push_back(to_json(e));

  json out{
      {"k", report.k},
      {"kernel", {{"name", report.kernel.name}, {"params", report.kernel.params}}},
      {"t", report.t},
      {"mass", to_json(report.mass)},
      {"var_f", to_json(report.var_f)},
      {"var_terms", var_terms},
      {"m", m},
      {"dk_bound", bound_json(report.dk)},
      {"dw_bound", bound_json(report.dw)},
      {"fourth_moment_bound", to_json(report.fourth_moment)},
      {"r", nullptr},
      {"t1", nullptr},
      {"t2", nullptr},
      {"c_f", nullptr},
      {"sup_term", nullptr},
      {"metadata",
       {{"unreliable_m", report.any_unreliable()},
        {"sup_term_is_grid_lower_estimate", true}}},
  };
  if (report.r) {
    json r = json::array();
    for (const auto& row : *report.r) {
      json jrow = json::array();
      for (const auto& e : row) jrow.push_back(to_json(e));
      r.push_back(std::move(jrow));
    }
    out["r"] = std::move(r);
  }
  if (report.theorem1) {
    const Theorem1Terms& t = *report.theorem1;
    out["t1"] = to_json(t.t1);
    out["t2"] = to_json(t.t2);
    out["c_f"] = to_json(t.c_f);
    out["sup_term"] = to_json(t.sup_term);
    out["sup_term"]["argmax_s"] = t.sup_argmax;
    out["theorem1"] = {{"dg_fourth", to_json(t.dg_fourth)},
                       {"dg_norm_sq", to_json(t.dg_norm_sq)},
                       {"g_fourth", to_json(t.g_fourth)},
                       {"bound", to_json(t.bound)}};
  }
  return out;
}

}  // namespace pstein
