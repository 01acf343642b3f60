#pragma once

// State space, intensity measure and Monte Carlo integration over products
// of the state space.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace pstein {

inline constexpr std::size_t kMaxDim = 4;

class Point {
 public:
  Point() = default;
  Point(std::initializer_list<double> coords);

  static Point zeros(std::size_t dim);

  std::size_t dim() const { return dim_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }

  friend bool operator==(const Point& a, const Point& b);

 private:
  std::array<double, kMaxDim> coords_{};
  std::size_t dim_ = 0;
};

double distance(const Point& a, const Point& b);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> sides);

  static Box unit(std::size_t dim);

  std::size_t dim() const { return sides_.size(); }
  const Interval& operator[](std::size_t i) const { return sides_[i]; }
  const std::vector<Interval>& sides() const { return sides_; }
  double volume() const;
  bool contains(const Point& p) const;

 private:
  std::vector<Interval> sides_;
};

/// A Monte Carlo (or exact) value with its standard error. Exact values carry
/// std_error == 0.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Welford accumulator; merge() follows Chan et al. so that chunked
/// reductions are order-deterministic.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased, 0 for count < 2
  double std_error() const;  // of the mean
  Estimate estimate() const { return {mean(), std_error()}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

using Rng = std::mt19937_64;

/// Independent stream for replication `index` of an experiment seeded by
/// `master`. Streams depend only on (master, index), never on scheduling.
Rng make_stream(std::uint64_t master, std::uint64_t index);
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

class IntensitySpec {
 public:
  using Density = std::function<double(const Point&)>;

  /// t times `level` times Lebesgue measure on `box`.
  static IntensitySpec uniform(Box box, double scale, double level = 1.0);

  /// Density must stay within [0, density_sup]; sampling throws
  /// std::domain_error when a probe exceeds the declared sup. Without an
  /// analytic `density_integral` the mass is integrated by Monte Carlo once,
  /// at construction.
  IntensitySpec(Box box, Density density, double density_sup, double scale,
                std::optional<double> density_integral = std::nullopt);

  const Box& box() const { return box_; }
  std::size_t dim() const { return box_.dim(); }
  double scale() const { return scale_; }
  double density_sup() const { return density_sup_; }
  double density(const Point& p) const;

  /// Set when the density is a known constant; analytic marginals rely on it.
  std::optional<double> constant_level() const { return constant_level_; }

  const Estimate& mass() const { return mass_; }

  /// Unique per constructed spec; used as a cache key.
  std::uint64_t id() const { return id_; }

 private:
  Box box_;
  Density density_;
  double density_sup_ = 1.0;
  double scale_ = 1.0;
  std::optional<double> constant_level_;
  Estimate mass_;
  std::uint64_t id_ = 0;
};

/// t * integral of the density over the box.
Estimate total_mass(const IntensitySpec& intensity);

/// A finite realization of the process. Point order carries no meaning.
class PointConfiguration {
 public:
  PointConfiguration() = default;
  explicit PointConfiguration(std::vector<Point> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point> points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  void add(const Point& p) { points_.push_back(p); }
  /// eta + delta_z
  PointConfiguration with(const Point& z) const;

  bool inside(const Box& box) const;

 private:
  std::vector<Point> points_;
};

/// One location drawn from mu_t / total_mass by rejection against the
/// declared density sup.
Point sample_location(const IntensitySpec& intensity, Rng& rng);

PointConfiguration sample_point_process(const IntensitySpec& intensity,
                                        Rng& rng);

using Integrand = std::function<double(std::span<const Point>)>;
/// An integrand that may consume randomness itself (unbiased inner estimates).
using RandomIntegrand = std::function<double(std::span<const Point>, Rng&)>;

/// Plain Monte Carlo estimate of the integral of g over box^n with respect to
/// mu_t^n. Throws std::invalid_argument when samples == 0.
Estimate mc_integral(const Integrand& g, const IntensitySpec& intensity,
                     std::size_t n, std::size_t samples, Rng& rng);

/// Same estimator, split into fixed-size chunks with streams derived from
/// `seed`, evaluated in parallel and reduced in chunk order.
Estimate mc_integral_parallel(const RandomIntegrand& g,
                              const IntensitySpec& intensity, std::size_t n,
                              std::size_t samples, std::uint64_t seed);

}  // namespace pstein
