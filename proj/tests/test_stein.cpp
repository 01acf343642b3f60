#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pstein/stein.hpp"

namespace pstein {
namespace {

const double kGMax = std::sqrt(2.0 * std::numbers::pi) / 4.0;

TEST(NormalCdf, KnownValues) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.96), 0.9750021049, 1e-10);
  EXPECT_NEAR(normal_cdf(1.96), static_cast<double>(oracle::normal_cdf(1.96L)),
              1e-15);
}

TEST(NormalCdf, MatchesSeriesOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int n = 0; n < 500; ++n) {
    const double x = u(rng);
    EXPECT_NEAR(normal_cdf(x), static_cast<double>(oracle::normal_cdf(x)), 1e-13)
        << x;
  }
}

TEST(NormalCdf, Symmetry) {
  for (double x = -10.0; x <= 10.0; x += 0.037) {
    EXPECT_NEAR(normal_cdf(-x), 1.0 - normal_cdf(x), 1e-13);
    EXPECT_NEAR(normal_sf(x), normal_cdf(-x), 1e-16);
  }
}

TEST(NormalQuantile, InvertsCdf) {
  for (double p : {1e-10, 0.001, 0.2, 0.5, 0.77, 0.999999}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14 + 1e-12 * p);
  }
  EXPECT_TRUE(std::isinf(normal_quantile(0.0)));
  EXPECT_THROW(normal_quantile(1.5), std::domain_error);
}

TEST(MillsRatio, ContinuousAcrossBranches) {
  EXPECT_NEAR(mills_ratio(0.0), std::sqrt(std::numbers::pi / 2.0), 1e-15);
  const double below = mills_ratio(std::nextafter(30.0, 0.0));
  const double above = mills_ratio(30.0);
  EXPECT_NEAR(below, above, 1e-13 * above);
  // R(x) ~ 1/x - 1/x^3 + 3/x^5 for large x.
  const double x = 1e3;
  EXPECT_NEAR(mills_ratio(x), 1 / x - 1 / (x * x * x) + 3 / std::pow(x, 5), 1e-18);
}

TEST(SteinG, ClosedFormAtOrigin) {
  EXPECT_NEAR(stein_g(0.0, 0.0), kGMax, 1e-16);
}

TEST(SteinG, MatchesQuadrature) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> us(-3.0, 3.0);
  std::uniform_real_distribution<double> uw(-5.0, 5.0);
  for (int n = 0; n < 100; ++n) {
    const double s = us(rng);
    const double w = uw(rng);
    EXPECT_NEAR(stein_g(s, w), oracle::stein_g(s, w), 1e-8)
        << "s=" << s << " w=" << w;
  }
}

TEST(SteinG, TailsAndOverflowSafety) {
  for (double s : {-2.0, 0.0, 1.0}) {
    const double far_left = stein_g(s, -60.0);
    EXPECT_GT(far_left, 0.0);
    EXPECT_LT(far_left, 0.02);
    EXPECT_LT(stein_g(s, -60.0), stein_g(s, -20.0));
    const double far_right = stein_g(s, 500.0);
    EXPECT_GT(far_right, 0.0);
    EXPECT_TRUE(std::isfinite(stein_g(s, 1e6)));
  }
  EXPECT_THROW(SteinSolution(NAN), std::domain_error);
  EXPECT_THROW(stein_g(0.0, INFINITY), std::domain_error);
}

TEST(SteinGPrime, SolvesSteinEquation) {
  const SteinSolution sol(0.7);
  for (double w = -6.0; w <= 6.0; w += 0.1) {
    const double residual =
        sol.g_prime(w) - w * sol.g(w) - ((w <= 0.7 ? 1.0 : 0.0) - normal_cdf(0.7));
    EXPECT_NEAR(residual, 0.0, 1e-15);
  }
}

TEST(SteinGPrime, MatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> us(-3.0, 3.0);
  std::uniform_real_distribution<double> uw(-5.0, 5.0);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 200) {
    const double s = us(rng);
    const double w = uw(rng);
    if (std::abs(w - s) <= 1e-3) continue;
    const SteinSolution sol(s);
    const double numeric = (sol.g(w + h) - sol.g(w - h)) / (2.0 * h);
    EXPECT_NEAR(sol.g_prime(w), numeric, 1e-6) << "s=" << s << " w=" << w;
    ++checked;
  }
}

TEST(SteinGPrime, JumpAtS) {
  const double h = 1e-7;
  for (double s : {-2.0, -0.3, 0.0, 1.0, 2.5}) {
    const SteinSolution sol(s);
    const double right = (sol.g(s + h) - sol.g(s)) / h;
    const double left = (sol.g(s) - sol.g(s - h)) / h;
    EXPECT_NEAR(right - left, -1.0, 1e-5) << s;
    EXPECT_NEAR(sol.g_prime(s), sol.g_prime_right(s) + 1.0, 1e-15);
    EXPECT_NEAR(sol.g_prime(s), left, 1e-5);
  }
}

TEST(SteinProperties, DefaultGridPasses) {
  const SteinReport r = check_stein_properties();
  EXPECT_EQ(r.points, 3u * 1601u);
  EXPECT_GT(r.min_g, 0.0);
  EXPECT_GE(r.g_upper_margin, -1e-15);
  EXPECT_GT(r.g_prime_margin, 0.0);
  EXPECT_GT(r.w_g_margin, 0.0);
  EXPECT_GT(r.g_second_margin, 0.0);
  EXPECT_TRUE(r.all_pass());
}

TEST(SteinProperties, EqualityEdges) {
  const SteinSolution sol(0.0);
  EXPECT_EQ(0.0 * sol.g(0.0), 0.0);
  // Left-limit second derivative at w = s = 0: g(0) + 0 = sqrt(2 pi)/4.
  EXPECT_LE(std::abs(sol.g_second(0.0)), kGMax + 1e-15);
  EXPECT_NEAR(std::abs(sol.g_second(0.0)), kGMax, 1e-15);
}

TEST(SteinProperties, RejectsBadGrid) {
  SteinGrid grid;
  grid.step = 0.0;
  EXPECT_THROW(check_stein_properties(grid), std::invalid_argument);
}

}  // namespace
}  // namespace pstein
