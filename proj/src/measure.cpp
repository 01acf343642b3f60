#include "pstein/measure.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "pstein/parallel.hpp"

namespace pstein {

namespace {

std::atomic<std::uint64_t> next_intensity_id{1};

constexpr std::size_t kMassSamples = 1'000'000;
constexpr std::uint64_t kMassSeed = 0x6d617373ULL;
constexpr std::size_t kChunk = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Point uniform_in_box(const Box& box, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Point p = Point::zeros(box.dim());
  for (std::size_t d = 0; d < box.dim(); ++d) {
    p[d] = box[d].lo + unit(rng) * box[d].length();
  }
  return p;
}

}  // namespace

Point::Point(std::initializer_list<double> coords) {
  if (coords.size() == 0 || coords.size() > kMaxDim) {
    throw std::invalid_argument("point dimension must be in 1.." +
                                std::to_string(kMaxDim));
  }
  std::size_t i = 0;
  for (double c : coords) coords_[i++] = c;
  dim_ = coords.size();
}

Point Point::zeros(std::size_t dim) {
  if (dim == 0 || dim > kMaxDim) {
    throw std::invalid_argument("point dimension must be in 1.." +
                                std::to_string(kMaxDim));
  }
  Point p;
  p.dim_ = dim;
  return p;
}

bool operator==(const Point& a, const Point& b) {
  if (a.dim_ != b.dim_) return false;
  for (std::size_t i = 0; i < a.dim_; ++i) {
    if (a.coords_[i] != b.coords_[i]) return false;
  }
  return true;
}

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Box::Box(std::vector<Interval> sides) : sides_(std::move(sides)) {
  if (sides_.empty() || sides_.size() > kMaxDim) {
    throw std::invalid_argument("box dimension must be in 1.." +
                                std::to_string(kMaxDim));
  }
  for (const auto& s : sides_) {
    if (!std::isfinite(s.lo) || !std::isfinite(s.hi) || !(s.lo < s.hi)) {
      throw std::invalid_argument("box side requires finite lo < hi");
    }
  }
}

Box Box::unit(std::size_t dim) {
  return Box(std::vector<Interval>(dim, Interval{0.0, 1.0}));
}

double Box::volume() const {
  double v = 1.0;
  for (const auto& s : sides_) v *= s.length();
  return v;
}

bool Box::contains(const Point& p) const {
  if (p.dim() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (p[i] < sides_[i].lo || p[i] > sides_[i].hi) return false;
  }
  return true;
}

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  // Keep exact means when both halves agree (constant integrands).
  mean_ = delta == 0.0 ? mean_ : mean_ + delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double RunningStats::variance() const {
  if (n_ < 2) return 0.0;
  return m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::std_error() const {
  if (n_ < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(n_));
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(~index));
}

Rng make_stream(std::uint64_t master, std::uint64_t index) {
  const std::uint64_t s = mix_seed(master, index);
  std::seed_seq seq{static_cast<std::uint32_t>(s),
                    static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(master)};
  return Rng(seq);
}

IntensitySpec IntensitySpec::uniform(Box box, double scale, double level) {
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw std::invalid_argument("density level must be finite and >= 0");
  }
  const double integral = level * box.volume();
  IntensitySpec spec(
      std::move(box), [level](const Point&) { return level; }, level, scale,
      integral);
  spec.constant_level_ = level;
  return spec;
}

IntensitySpec::IntensitySpec(Box box, Density density, double density_sup,
                             double scale,
                             std::optional<double> density_integral)
    : box_(std::move(box)),
      density_(std::move(density)),
      density_sup_(density_sup),
      scale_(scale),
      id_(next_intensity_id++) {
  if (box_.dim() == 0) throw std::invalid_argument("intensity requires a box");
  if (!density_) throw std::invalid_argument("intensity requires a density");
  if (!std::isfinite(density_sup_) || density_sup_ < 0.0) {
    throw std::invalid_argument("density_sup must be finite and >= 0");
  }
  if (!std::isfinite(scale_) || scale_ < 0.0) {
    throw std::invalid_argument("scale t must be finite and >= 0");
  }
  if (density_integral) {
    if (!std::isfinite(*density_integral) || *density_integral < 0.0) {
      throw std::domain_error("density integral is not finite");
    }
    mass_ = {scale_ * *density_integral, 0.0};
    return;
  }
  Rng rng = make_stream(kMassSeed, 0);
  RunningStats stats;
  for (std::size_t s = 0; s < kMassSamples; ++s) {
    stats.add(this->density(uniform_in_box(box_, rng)));
  }
  const double factor = scale_ * box_.volume();
  mass_ = {factor * stats.mean(), factor * stats.std_error()};
  if (!std::isfinite(mass_.value)) {
    throw std::domain_error("density integral is not finite");
  }
}

double IntensitySpec::density(const Point& p) const {
  const double v = density_(p);
  if (!(v >= 0.0) || v > density_sup_) {
    throw std::domain_error("density value " + std::to_string(v) +
                            " outside [0, declared sup " +
                            std::to_string(density_sup_) + "]");
  }
  return v;
}

Estimate total_mass(const IntensitySpec& intensity) { return intensity.mass(); }

PointConfiguration::PointConfiguration(std::vector<Point> points)
    : points_(std::move(points)) {}

PointConfiguration PointConfiguration::with(const Point& z) const {
  PointConfiguration out = *this;
  out.points_.push_back(z);
  return out;
}

bool PointConfiguration::inside(const Box& box) const {
  for (const auto& p : points_) {
    if (!box.contains(p)) return false;
  }
  return true;
}

Point sample_location(const IntensitySpec& intensity, Rng& rng) {
  if (intensity.constant_level()) return uniform_in_box(intensity.box(), rng);
  if (intensity.density_sup() <= 0.0) {
    throw std::domain_error("cannot sample from a zero density");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    Point p = uniform_in_box(intensity.box(), rng);
    if (unit(rng) * intensity.density_sup() < intensity.density(p)) return p;
  }
}

PointConfiguration sample_point_process(const IntensitySpec& intensity,
                                        Rng& rng) {
  const double mass = intensity.mass().value;
  PointConfiguration config;
  if (mass <= 0.0) return config;
  std::poisson_distribution<long long> count_dist(mass);
  const long long n = count_dist(rng);
  for (long long i = 0; i < n; ++i) config.add(sample_location(intensity, rng));
  return config;
}

Estimate mc_integral(const Integrand& g, const IntensitySpec& intensity,
                     std::size_t n, std::size_t samples, Rng& rng) {
  if (samples == 0) throw std::invalid_argument("mc_integral: samples == 0");
  if (n == 0) throw std::invalid_argument("mc_integral: n == 0");
  const double scale = std::pow(intensity.mass().value, static_cast<double>(n));
  if (scale == 0.0) return {0.0, 0.0};
  std::vector<Point> args(n);
  RunningStats stats;
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& a : args) a = sample_location(intensity, rng);
    const double v = g(args);
    if (!std::isfinite(v)) {
      throw std::domain_error("mc_integral: non-finite integrand value");
    }
    stats.add(v);
  }
  return {scale * stats.mean(), scale * stats.std_error()};
}

Estimate mc_integral_parallel(const RandomIntegrand& g,
                              const IntensitySpec& intensity, std::size_t n,
                              std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("mc_integral: samples == 0");
  if (n == 0) throw std::invalid_argument("mc_integral: n == 0");
  const double scale = std::pow(intensity.mass().value, static_cast<double>(n));
  if (scale == 0.0) return {0.0, 0.0};
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<RunningStats> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = make_stream(seed, c);
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(samples, begin + kChunk);
    std::vector<Point> args(n);
    for (std::size_t s = begin; s < end; ++s) {
      for (auto& a : args) a = sample_location(intensity, rng);
      const double v = g(args, rng);
      if (!std::isfinite(v)) {
        throw std::domain_error("mc_integral: non-finite integrand value");
      }
      partial[c].add(v);
    }
  });
  RunningStats stats;
  for (const auto& p : partial) stats.merge(p);
  return {scale * stats.mean(), scale * stats.std_error()};
}

std::size_t worker_count() {
  if (const char* env = std::getenv("PSTEIN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace pstein
