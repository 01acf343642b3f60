#pragma once

// Standard normal CDF and the solution g_s of the Stein equation
//   g'(w) - w g(w) = 1(w <= s) - Phi(s).

#include <vector>

namespace pstein {

double normal_cdf(double x);
double normal_pdf(double x);
/// 1 - Phi(x), accurate in the upper tail.
double normal_sf(double x);
double normal_quantile(double p);

/// Mills ratio (1 - Phi(x)) / phi(x) for x >= 0.
double mills_ratio(double x);

/// The bounded solution for the half-line (-inf, s].
class SteinSolution {
 public:
  explicit SteinSolution(double s);

  double s() const { return s_; }

  /// sqrt(2 pi) e^{w^2/2} Phi(min(w, s)) (1 - Phi(max(w, s))), evaluated in
  /// a form that neither overflows nor underflows for any finite w.
  double g(double w) const;
  /// From Stein's equation; at w == s returns the left limit g'(s-).
  double g_prime(double w) const;
  /// g'(s+) = g'(s-) - 1.
  double g_prime_right(double w) const;
  /// g'' = g + w g' away from s; left limit at w == s.
  double g_second(double w) const;

 private:
  double s_;
  double cdf_s_;
};

double stein_g(double s, double w);
double stein_g_prime(double s, double w);

struct SteinGrid {
  double w_min = -8.0;
  double w_max = 8.0;
  double step = 0.01;
  std::vector<double> s_values{-2.0, 0.0, 1.0};
};

/// Worst margins of the bounds 0 < g <= sqrt(2 pi)/4, |g'| <= 1, |w g| <= 1
/// and |g''| <= sqrt(2 pi)/4 + |w| on a grid (g'' is checked off w == s).
/// A margin is the bound minus the observed value; positive means it holds.
struct SteinReport {
  std::size_t points = 0;
  double min_g = 0.0;
  double g_upper_margin = 0.0;
  double g_prime_margin = 0.0;
  double w_g_margin = 0.0;
  double g_second_margin = 0.0;

  /// The bounds other than g > 0 are attained (g(0) = sqrt(2 pi)/4 for
  /// s = 0), so margins may sit at zero up to rounding.
  bool all_pass(double slack = 1e-14) const {
    return min_g > 0.0 && g_upper_margin >= -slack &&
           g_prime_margin >= -slack && w_g_margin >= -slack &&
           g_second_margin >= -slack;
  }
};

SteinReport check_stein_properties(const SteinGrid& grid = {});

}  // namespace pstein
