// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pstein/bounds.hpp"
#include "pstein/distance.hpp"
#include "pstein/partitions.hpp"
#include "pstein/stein.hpp"
#include "pstein/ustat.hpp"

using namespace pstein;

namespace {

/// Relative floor for comparisons whose standard error is exactly zero.
constexpr double kExactFloor = 1e-12;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

bool within(double value, double target, double tol) {
  return std::abs(value - target) <= tol + kExactFloor * std::max(1.0, std::abs(target));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome berry_esseen() {
  Outcome o;
  double worst = 0.0;
  for (double t = 1.0; t <= 1024.0; t *= 2.0) {
    const double d = poisson_exact_dK(t);
    const double limit = 8.0 / std::sqrt(t);
    worst = std::max(worst, d / limit);
    o.require(d <= limit, "dK(" + fmt(t) + ") = " + fmt(d) + " > 8/sqrt(t)");
  }
  o.detail << "max dK / (8/sqrt t) = " << fmt(worst) << " over t = 1..1024";
  return o;
}

Outcome partition_oracle() {
  Outcome o;
  std::size_t pairs = 0;
  std::size_t total = 0;
  for (int i = 1; i <= kMaxPartitionOrder; ++i) {
    for (int j = 1; j <= kMaxPartitionOrder; ++j) {
      if (2 * i + 2 * j > 12) continue;
      const auto expected = oracle::brute_force_partitions(i, j);
      const auto list = enumerate_partitions(i, j);
      bool same = list.size() == expected.size();
      for (std::size_t n = 0; same && n < list.size(); ++n) {
        same = restricted_growth_string(list[n], i, j) == expected[n];
      }
      o.require(same, "mismatch at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      ++pairs;
      total += list.size();
    }
  }
  o.require(count_partitions(1, 1) == 1, "count(1,1) != 1");
  o.detail << pairs << " (i,j) pairs, " << total
           << " partitions, element-by-element equal";
  return o;
}

Outcome counting_kernel() {
  Outcome o;
  const SymmetricKernel count = make_kernel({"count", {}});
  for (double t : {1.0, 25.0, 400.0}) {
    const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(1), t);
    const MMatrix m = compute_M(count, intensity);
    const Estimate& m11 = m[0][0].value;
    o.require(within(m11.value, t, 4.0 * m11.std_error), "M11 != t");
    const Estimate var = variance_from_kernels(count, intensity).variance;
    o.require(std::abs(dK_bound(1, var, m).value - 19.0 / std::sqrt(t)) <= 1e-12,
              "dK bound != 19/sqrt t");
    o.require(std::abs(dW_bound(1, var, m).value - 2.0 / std::sqrt(t)) <= 1e-12,
              "dW bound != 2/sqrt t");
    const double fourth = fourth_moment_bound(1, var, m).value;
    o.require(within(fourth, t + 3.0 * t * t, 0.0), "fourth-moment bound != t + 3t^2");
  }
  const double t = 25.0;
  const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(1), t);
  const std::vector<double> f = replicate(count, intensity, 100'000, 301);
  RunningStats fourth;
  for (double v : f) fourth.add(std::pow(v - t, 4.0));
  const double target = t + 3.0 * t * t;
  o.require(within(fourth.mean(), target, 4.0 * fourth.std_error()),
            "empirical fourth moment off");
  o.detail << "M11 = t, dK = 19/sqrt t, dW = 2/sqrt t exact; E(N-t)^4 at t=25: "
           << fmt(fourth.mean()) << " +- " << fmt(fourth.std_error()) << " vs "
           << fmt(target);
  return o;
}

Outcome variance_identity() {
  Outcome o;
  const SymmetricKernel ones = make_kernel({"constant", {{"c", 1.0}, {"k", 2.0}}});
  const double t = 1.0;
  const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(1), t);
  const Estimate var = variance_from_kernels(ones, intensity).variance;
  o.require(within(var.value, 6.0, var.std_error), "Var != 6");
  o.require(within(var.value, 4 * t * t * t + 2 * t * t, 0.0), "Var != 4t^3 + 2t^2");
  const std::vector<double> f = replicate(ones, intensity, 10'000, 401);
  RunningStats s;
  for (double v : f) s.add(v);
  double m4 = 0.0;
  for (double v : f) m4 += std::pow(v - s.mean(), 4.0);
  m4 /= static_cast<double>(f.size());
  const double se = std::sqrt((m4 - s.variance() * s.variance()) / f.size());
  o.require(within(s.variance(), var.value, 4.0 * std::hypot(se, var.std_error)),
            "sample variance disagrees");
  o.detail << "Var from kernels = " << fmt(var.value) << " +- " << fmt(var.std_error)
           << ", sample variance = " << fmt(s.variance()) << " +- " << fmt(se);
  return o;
}

Outcome bound_certification() {
  Outcome o;
  const SymmetricKernel geo = make_kernel({"geometric_indicator", {{"r", 0.05}}});
  std::uint64_t seed = 501;
  for (double t : {50.0, 100.0, 200.0}) {
    const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(1), t);
    ReportOptions options;
    options.seed = seed++;
    const BoundReport report = compute_bound_report(geo, intensity, options);
    const double mean = full_integral(geo, intensity, false).value;
    const double sd = std::sqrt(report.var_f.value);
    std::vector<double> g = replicate(geo, intensity, 10'000, seed++);
    for (double& v : g) v = (v - mean) / sd;
    const Estimate dk = bootstrap_estimate(g, empirical_dK, 200, seed++);
    const Estimate dw = bootstrap_estimate(g, empirical_dW, 200, seed++);
    o.require(dk.value <= report.dk.value + 4.0 * (dk.std_error + report.dk.std_error),
              "empirical dK above bound at t=" + fmt(t));
    o.require(dw.value <= report.dw.value + 4.0 * (dw.std_error + report.dw.std_error),
              "empirical dW above bound at t=" + fmt(t));
    o.require(dk.value <= 2.0 * std::sqrt(dw.value), "dK > 2 sqrt(dW)");
    o.detail << "t=" << fmt(t) << ": dK " << fmt(dk.value) << " <= " << fmt(report.dk.value)
             << ", dW " << fmt(dw.value) << " <= " << fmt(report.dw.value) << "; ";
  }
  return o;
}

Outcome theorem1_poisson() {
  Outcome o;
  const double t = 25.0;
  const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(1), t);
  Theorem1Options options;
  options.reps = 10'000;
  options.seed = 601;
  const Theorem1Terms terms =
      estimate_theorem1_terms(make_kernel({"count", {}}), intensity, options);
  o.require(within(terms.t1.value, 0.0, 3.0 * terms.t1.std_error), "T1 != 0");
  o.require(within(terms.t2.value, 1.0 / t, 4.0 * terms.t2.std_error), "T2 != 1/t");
  o.require(within(terms.g_fourth.value, 3.0 + 1.0 / t, 4.0 * terms.g_fourth.std_error),
            "E G^4 != 3 + 1/t");
  o.detail << "T1 = " << fmt(terms.t1.value) << " +- " << fmt(terms.t1.std_error)
           << ", T2 = " << fmt(terms.t2.value) << " +- " << fmt(terms.t2.std_error)
           << ", E G^4 = " << fmt(terms.g_fourth.value) << " +- "
           << fmt(terms.g_fourth.std_error) << " (t = 25)";
  return o;
}

Outcome r_versus_m() {
  Outcome o;
  const SymmetricKernel geo = make_kernel({"geometric_indicator", {{"r", 0.1}}});
  const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(1), 20.0);
  MOptions m_options;
  m_options.seed = 701;
  const MMatrix m = compute_M(geo, intensity, m_options);
  ROptions options;
  for (std::size_t i = 1; i <= 2; ++i) {
    for (std::size_t j = i; j <= 2; ++j) {
      options.seed = 710 + 10 * i + j;
      const Estimate r = estimate_Rij(geo, intensity, i, j, options);
      const Estimate& mij = m[i - 1][j - 1].value;
      o.require(r.value <= mij.value + 4.0 * std::hypot(r.std_error, mij.std_error),
                "R" + std::to_string(i) + std::to_string(j) + " > M");
      o.detail << "R" << i << j << " = " << fmt(r.value) << " +- " << fmt(r.std_error)
               << " <= M" << i << j << " = " << fmt(mij.value) << "; ";
    }
  }
  const IntensitySpec count_intensity = IntensitySpec::uniform(Box::unit(1), 20.0);
  const Estimate r_count =
      estimate_Rij(make_kernel({"count", {}}), count_intensity, 1, 1, options);
  o.require(std::abs(r_count.value) <= 1e-10, "count R11 != 0");
  o.detail << "count R11 = " << fmt(r_count.value);
  return o;
}

Outcome stein_properties() {
  Outcome o;
  std::mt19937_64 rng(801);
  std::uniform_real_distribution<double> us(-3.0, 3.0);
  std::uniform_real_distribution<double> uw(-5.0, 5.0);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const double s = us(rng);
    const double w = uw(rng);
    worst = std::max(worst, std::abs(stein_g(s, w) - oracle::stein_g(s, w)));
  }
  o.require(worst <= 1e-8, "closed form vs quadrature");
  const SteinReport report = check_stein_properties();
  o.require(report.all_pass(), "grid bounds");
  double worst_jump = 0.0;
  const double h = 1e-7;
  for (double s : {-2.0, 0.0, 1.0}) {
    const SteinSolution sol(s);
    const double right = (sol.g(s + h) - sol.g(s)) / h;
    const double left = (sol.g(s) - sol.g(s - h)) / h;
    worst_jump = std::max(worst_jump, std::abs(right - left + 1.0));
  }
  o.require(worst_jump <= 1e-5, "jump relation");
  o.detail << "max |g - quadrature| = " << fmt(worst) << ", grid margins >= "
           << fmt(std::min({report.g_upper_margin, report.g_prime_margin,
                            report.w_g_margin, report.g_second_margin}))
           << ", jump error " << fmt(worst_jump);
  return o;
}

Outcome rate_check() {
  Outcome o;
  const SymmetricKernel count = make_kernel({"count", {}});
  for (double t = 1.0; t <= 1024.0; t *= 2.0) {
    const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(1), t);
    const MMatrix m = compute_M(count, intensity);
    const Estimate var = variance_from_kernels(count, intensity).variance;
    o.require(std::abs(dK_bound(1, var, m).value * std::sqrt(t) - 19.0) <= 1e-12,
              "count dK sqrt(t) != 19 at t=" + fmt(t));
  }
  const SymmetricKernel geo = make_kernel({"geometric_indicator", {{"r", 0.05}}});
  std::vector<double> scaled;
  std::uint64_t seed = 901;
  for (double t : {100.0, 200.0, 400.0}) {
    const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(1), t);
    ReportOptions options;
    options.seed = seed++;
    const BoundReport report = compute_bound_report(geo, intensity, options);
    scaled.push_back(report.dk.value * std::sqrt(t));
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  const double spread = *hi / *lo - 1.0;
  o.require(spread < 0.1, "geometric spread >= 10%");
  o.detail << "count: dK sqrt(t) = 19 for t = 1..1024; geometric dK sqrt(t) = "
           << fmt(scaled[0]) << ", " << fmt(scaled[1]) << ", " << fmt(scaled[2])
           << " (spread " << fmt(100.0 * spread) << "%)";
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "berry-esseen", 5.0, berry_esseen},
      {2, "partition-oracle", 60.0, partition_oracle},
      {3, "counting-kernel", 30.0, counting_kernel},
      {4, "variance-identity", 30.0, variance_identity},
      {5, "bound-certification", 180.0, bound_certification},
      {6, "theorem1-poisson", 60.0, theorem1_poisson},
      {7, "r-versus-m", 60.0, r_versus_m},
      {8, "stein-properties", 5.0, stein_properties},
      {9, "rate-check", 120.0, rate_check},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(seconds <= c.budget_seconds, "runtime over " + fmt(c.budget_seconds) + " s");
    if (!o.pass) ++failures;
    std::printf("[%s] %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                seconds, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
