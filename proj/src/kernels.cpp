#include "pstein/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace pstein {

namespace {

std::atomic<std::uint64_t> next_kernel_id{1};

double param_or(const KernelDescriptor& d, const std::string& key,
                double fallback) {
  auto it = d.params.find(key);
  return it == d.params.end() ? fallback : it->second;
}

double require_param(const KernelDescriptor& d, const std::string& key) {
  auto it = d.params.find(key);
  if (it == d.params.end()) {
    throw std::invalid_argument("kernel '" + d.name + "' requires parameter '" +
                                key + "'");
  }
  return it->second;
}

std::size_t order_param(const KernelDescriptor& d, double fallback) {
  const double k = param_or(d, "k", fallback);
  if (!(k >= 1.0) || k != std::floor(k)) {
    throw std::invalid_argument("kernel order k must be an integer >= 1");
  }
  return static_cast<std::size_t>(k);
}

/// Exact mass, or nullopt when the mass itself is a Monte Carlo estimate.
std::optional<double> exact_mass(const IntensitySpec& intensity) {
  if (intensity.mass().std_error != 0.0) return std::nullopt;
  return intensity.mass().value;
}

/// t * level on a one-dimensional box with constant density.
std::optional<double> line_rate(const IntensitySpec& intensity) {
  if (intensity.dim() != 1 || !intensity.constant_level()) return std::nullopt;
  return intensity.scale() * *intensity.constant_level();
}

SymmetricKernel make_count() {
  auto one = [](std::span<const Point>) { return 1.0; };
  auto marginal = [](std::span<const Point> xs,
                     const IntensitySpec& intensity) -> std::optional<double> {
    if (xs.empty()) return exact_mass(intensity);
    return 1.0;
  };
  SymmetricKernel kernel({"count", {}}, 1, one, one, marginal, marginal);
  kernel.set_nonnegative(true);
  return kernel;
}

SymmetricKernel make_constant(const KernelDescriptor& d) {
  const double c = require_param(d, "c");
  const std::size_t k = order_param(d, 1.0);
  auto marginal_for = [k](double value) {
    return [k, value](std::span<const Point> xs,
                      const IntensitySpec& intensity) -> std::optional<double> {
      const auto mass = exact_mass(intensity);
      if (!mass) return std::nullopt;
      return value * std::pow(*mass, static_cast<double>(k - xs.size()));
    };
  };
  SymmetricKernel kernel(
      {"constant", {{"c", c}, {"k", static_cast<double>(k)}}}, k,
      [c](std::span<const Point>) { return c; },
      [c](std::span<const Point>) { return std::abs(c); }, marginal_for(c),
      marginal_for(std::abs(c)));
  kernel.set_nonnegative(c >= 0.0);
  return kernel;
}

SymmetricKernel make_geometric(const KernelDescriptor& d) {
  const double r = require_param(d, "r");
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("geometric_indicator requires r > 0");
  }
  auto eval = [r](std::span<const Point> a) {
    return distance(a[0], a[1]) <= r ? 1.0 : 0.0;
  };
  auto marginal = [r](std::span<const Point> xs,
                      const IntensitySpec& intensity) -> std::optional<double> {
    const auto rate = line_rate(intensity);
    if (!rate) return std::nullopt;
    const Interval side = intensity.box()[0];
    if (xs.size() == 1) {
      const double x = xs[0][0];
      return *rate * (std::min(x + r, side.hi) - std::max(x - r, side.lo));
    }
    const double len = side.length();
    const double area = r < len ? 2.0 * r * len - r * r : len * len;
    return *rate * *rate * area;
  };
  SymmetricKernel kernel({"geometric_indicator", {{"r", r}}}, 2, eval, eval,
                         marginal, marginal);
  kernel.set_interaction_radius(r);
  kernel.set_nonnegative(true);
  return kernel;
}

/// Integral of |a + b x| over [lo, hi].
double abs_linear_integral(double a, double b, double lo, double hi) {
  auto antiderivative = [a, b](double x) { return a * x + 0.5 * b * x * x; };
  if (b == 0.0) return std::abs(a) * (hi - lo);
  const double root = -a / b;
  if (root <= lo || root >= hi) {
    return std::abs(antiderivative(hi) - antiderivative(lo));
  }
  return std::abs(antiderivative(root) - antiderivative(lo)) +
         std::abs(antiderivative(hi) - antiderivative(root));
}

SymmetricKernel make_product(const KernelDescriptor& d) {
  const std::size_t k = order_param(d, 1.0);
  const double a = param_or(d, "a", 1.0);
  const double b = param_or(d, "b", 0.0);
  auto g = [a, b](const Point& x) { return a + b * x[0]; };
  auto eval = [g](std::span<const Point> xs) {
    double v = 1.0;
    for (const auto& x : xs) v *= g(x);
    return v;
  };
  auto abs_eval = [g](std::span<const Point> xs) {
    double v = 1.0;
    for (const auto& x : xs) v *= std::abs(g(x));
    return v;
  };
  // Closed forms need a constant density; the box may have any dimension.
  auto marginal_for = [k, g, a, b](bool absolute) {
    return [=](std::span<const Point> xs,
               const IntensitySpec& intensity) -> std::optional<double> {
      if (!intensity.constant_level()) return std::nullopt;
      const double rate = intensity.scale() * *intensity.constant_level();
      const Box& box = intensity.box();
      const Interval first = box[0];
      const double cross = box.volume() / first.length();
      const double g_integral =
          absolute ? rate * cross * abs_linear_integral(a, b, first.lo, first.hi)
                   : rate * box.volume() * (a + b * 0.5 * (first.lo + first.hi));
      double v = std::pow(g_integral, static_cast<double>(k - xs.size()));
      for (const auto& x : xs) v *= absolute ? std::abs(g(x)) : g(x);
      return v;
    };
  };
  SymmetricKernel kernel(
      {"product",
       {{"k", static_cast<double>(k)}, {"a", a}, {"b", b}}},
      k, eval, abs_eval, marginal_for(false), marginal_for(true));
  return kernel;
}

}  // namespace

SymmetricKernel::SymmetricKernel(KernelDescriptor descriptor, std::size_t order,
                                 Eval eval, Eval abs_eval, Marginal marginal,
                                 Marginal abs_marginal)
    : descriptor_(std::move(descriptor)),
      order_(order),
      eval_(std::move(eval)),
      abs_eval_(std::move(abs_eval)),
      marginal_(std::move(marginal)),
      abs_marginal_(std::move(abs_marginal)),
      id_(next_kernel_id++) {
  if (order_ < 1) throw std::invalid_argument("kernel order k must be >= 1");
  if (!eval_) throw std::invalid_argument("kernel requires an eval function");
  if (!abs_eval_) {
    abs_eval_ = [f = eval_](std::span<const Point> a) { return std::abs(f(a)); };
  }
}

std::optional<double> SymmetricKernel::marginal(
    std::span<const Point> xs, const IntensitySpec& intensity) const {
  if (xs.size() > order_) {
    throw std::invalid_argument("marginal: more fixed arguments than order");
  }
  if (xs.size() == order_) return eval(xs);
  if (!marginal_) return std::nullopt;
  return marginal_(xs, intensity);
}

std::optional<double> SymmetricKernel::abs_marginal(
    std::span<const Point> xs, const IntensitySpec& intensity) const {
  if (xs.size() > order_) {
    throw std::invalid_argument("marginal: more fixed arguments than order");
  }
  if (xs.size() == order_) return abs_eval(xs);
  if (abs_marginal_) return abs_marginal_(xs, intensity);
  if (nonnegative_) return marginal(xs, intensity);
  return std::nullopt;
}

SymmetricKernel make_kernel(const KernelDescriptor& descriptor) {
  const double scale = param_or(descriptor, "scale", 1.0);
  SymmetricKernel kernel = [&] {
    if (descriptor.name == "count") return make_count();
    if (descriptor.name == "constant") return make_constant(descriptor);
    if (descriptor.name == "geometric_indicator") {
      return make_geometric(descriptor);
    }
    if (descriptor.name == "product") return make_product(descriptor);
    throw std::invalid_argument("unknown kernel '" + descriptor.name + "'");
  }();
  return scale == 1.0 ? kernel : scaled(kernel, scale);
}

SymmetricKernel make_user_kernel(std::string name, std::size_t order,
                                 SymmetricKernel::Eval eval) {
  return SymmetricKernel({std::move(name), {}}, order, std::move(eval));
}

SymmetricKernel scaled(const SymmetricKernel& kernel, double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("scale must be finite");
  KernelDescriptor d = kernel.descriptor();
  d.params["scale"] = param_or(d, "scale", 1.0) * c;
  auto base = std::make_shared<SymmetricKernel>(kernel);
  const double abs_c = std::abs(c);
  SymmetricKernel out(
      std::move(d), kernel.order(),
      [base, c](std::span<const Point> a) { return c * base->eval(a); },
      [base, abs_c](std::span<const Point> a) {
        return abs_c * base->abs_eval(a);
      },
      [base, c](std::span<const Point> xs,
                const IntensitySpec& mu) -> std::optional<double> {
        auto m = base->marginal(xs, mu);
        if (!m) return std::nullopt;
        return c * *m;
      },
      [base, abs_c](std::span<const Point> xs,
                    const IntensitySpec& mu) -> std::optional<double> {
        auto m = base->abs_marginal(xs, mu);
        if (!m) return std::nullopt;
        return abs_c * *m;
      });
  if (auto r = kernel.interaction_radius()) out.set_interaction_radius(*r);
  out.set_nonnegative(kernel.nonnegative() && c >= 0.0);
  return out;
}

bool symmetry_check(const SymmetricKernel& kernel, const Box& box,
                    std::size_t trials, Rng& rng) {
  if (trials == 0) throw std::invalid_argument("symmetry_check: trials == 0");
  const std::size_t k = kernel.order();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> args(k);
  std::vector<Point> permuted(k);
  std::vector<std::size_t> perm(k);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (auto& p : args) {
      p = Point::zeros(box.dim());
      for (std::size_t d = 0; d < box.dim(); ++d) {
        p[d] = box[d].lo + unit(rng) * box[d].length();
      }
    }
    const double reference = kernel.eval(args);
    std::iota(perm.begin(), perm.end(), 0);
    while (std::next_permutation(perm.begin(), perm.end())) {
      for (std::size_t i = 0; i < k; ++i) permuted[i] = args[perm[i]];
      const double v = kernel.eval(permuted);
      const double scale = std::max(std::abs(v), std::abs(reference));
      if (std::abs(v - reference) > 1e-12 * scale) return false;
    }
  }
  return true;
}

Estimate marginal_value(const SymmetricKernel& kernel,
                        const IntensitySpec& intensity,
                        std::span<const Point> xs, bool absolute,
                        const MarginalOptions& options) {
  const auto exact = absolute ? kernel.abs_marginal(xs, intensity)
                              : kernel.marginal(xs, intensity);
  if (exact) return {*exact, 0.0};
  const std::size_t free_args = kernel.order() - xs.size();
  std::vector<Point> args(xs.begin(), xs.end());
  args.resize(kernel.order());
  Rng rng = make_stream(options.seed, xs.size());
  return mc_integral(
      [&](std::span<const Point> ys) {
        std::copy(ys.begin(), ys.end(), args.begin() + xs.size());
        return absolute ? kernel.abs_eval(args) : kernel.eval(args);
      },
      intensity, free_args, options.mc_samples, rng);
}

Estimate full_integral(const SymmetricKernel& kernel,
                       const IntensitySpec& intensity, bool absolute,
                       const MarginalOptions& options) {
  using Key = std::tuple<std::uint64_t, std::uint64_t, bool, std::size_t,
                         std::uint64_t>;
  static std::mutex mutex;
  static std::map<Key, Estimate> cache;
  const Key key{kernel.id(), intensity.id(), absolute, options.mc_samples,
                options.seed};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const Estimate value = marginal_value(kernel, intensity, {}, absolute, options);
  std::lock_guard lock(mutex);
  cache.emplace(key, value);
  return value;
}

}  // namespace pstein
