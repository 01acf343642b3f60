#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "pstein/bounds.hpp"
#include "pstein/distance.hpp"
#include "pstein/kernels.hpp"
#include "pstein/measure.hpp"
#include "pstein/partitions.hpp"
#include "pstein/stein.hpp"
#include "pstein/ustat.hpp"

namespace pstein::cli {

namespace {

using nlohmann::json;

/// Malformed flag values or config files: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct IntensityDesc {
  Box box = Box::unit(1);
  std::string density = "constant";
  double level = 1.0;
  double a = 0.0;
  double b = 0.0;
};

IntensitySpec make_intensity(const IntensityDesc& desc, double t) {
  if (desc.density == "constant") {
    return IntensitySpec::uniform(desc.box, t, desc.level);
  }
  const Interval& x0 = desc.box[0];
  const double at_lo = desc.a + desc.b * x0.lo;
  const double at_hi = desc.a + desc.b * x0.hi;
  const double a = desc.a;
  const double b = desc.b;
  const double integral = desc.box.volume() * (a + b * 0.5 * (x0.lo + x0.hi));
  return IntensitySpec(
      desc.box, [a, b](const Point& p) { return a + b * p[0]; },
      std::max(at_lo, at_hi), t, integral);
}

struct ExperimentConfig {
  KernelDescriptor kernel;
  IntensityDesc intensity;
  std::vector<double> t_values;
  std::optional<std::uint64_t> seed;
  std::size_t reps = 10'000;
  std::size_t mc_samples = 200'000;
  std::size_t z_samples = 64;
  std::size_t bootstrap = 200;
  bool theorem1 = false;
  std::size_t theorem1_reps = 2000;
};

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw UsageError("config field '" + field + "': " + what);
}

double number_field(const json& j, const std::string& field) {
  if (!j.is_number()) bad_field(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad_field(field, "expected a finite number");
  return v;
}

std::size_t count_field(const json& j, const std::string& field) {
  if (!j.is_number_unsigned() || j.get<std::uint64_t>() == 0) {
    bad_field(field, "expected a positive integer");
  }
  return j.get<std::size_t>();
}

KernelDescriptor parse_kernel(const json& j) {
  if (!j.is_object()) bad_field("kernel", "expected an object");
  KernelDescriptor d;
  if (!j.contains("name") || !j["name"].is_string()) {
    bad_field("kernel.name", "expected a string");
  }
  d.name = j["name"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) bad_field("kernel.params", "expected an object");
    for (const auto& [key, value] : j["params"].items()) {
      d.params[key] = number_field(value, "kernel.params." + key);
    }
  }
  try {
    (void)make_kernel(d);
  } catch (const std::invalid_argument& e) {
    bad_field("kernel", e.what());
  }
  return d;
}

IntensityDesc parse_intensity(const json& j) {
  IntensityDesc desc;
  if (!j.is_object()) bad_field("intensity", "expected an object");
  if (j.contains("box")) {
    const json& box = j["box"];
    if (!box.is_array() || box.empty() || box.size() > kMaxDim) {
      bad_field("intensity.box", "expected 1 to " + std::to_string(kMaxDim) +
                                     " [lo, hi] pairs");
    }
    std::vector<Interval> sides;
    for (std::size_t n = 0; n < box.size(); ++n) {
      const std::string field = "intensity.box[" + std::to_string(n) + "]";
      if (!box[n].is_array() || box[n].size() != 2) {
        bad_field(field, "expected [lo, hi]");
      }
      const double lo = number_field(box[n][0], field);
      const double hi = number_field(box[n][1], field);
      if (!(lo < hi)) bad_field(field, "requires lo < hi");
      sides.push_back({lo, hi});
    }
    desc.box = Box(std::move(sides));
  }
  if (j.contains("density")) {
    const json& d = j["density"];
    if (!d.is_object() || !d.contains("type") || !d["type"].is_string()) {
      bad_field("intensity.density", "expected {\"type\": ...}");
    }
    desc.density = d["type"].get<std::string>();
    if (desc.density == "constant") {
      if (d.contains("value")) {
        desc.level = number_field(d["value"], "intensity.density.value");
      }
      if (desc.level < 0.0) bad_field("intensity.density.value", "must be >= 0");
    } else if (desc.density == "linear") {
      if (!d.contains("a") || !d.contains("b")) {
        bad_field("intensity.density", "linear density needs a and b");
      }
      desc.a = number_field(d["a"], "intensity.density.a");
      desc.b = number_field(d["b"], "intensity.density.b");
      const Interval& x0 = desc.box[0];
      if (desc.a + desc.b * x0.lo < 0.0 || desc.a + desc.b * x0.hi < 0.0) {
        bad_field("intensity.density", "a + b x must be >= 0 on the box");
      }
    } else {
      bad_field("intensity.density.type", "expected \"constant\" or \"linear\"");
    }
  }
  return desc;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const std::vector<std::string> known{
      "kernel", "intensity", "t_values", "seed", "reps", "mc_samples",
      "z_samples", "bootstrap", "theorem1", "theorem1_reps"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      bad_field(key, "unknown field");
    }
  }
  ExperimentConfig c;
  if (!j.contains("kernel")) bad_field("kernel", "missing");
  c.kernel = parse_kernel(j["kernel"]);
  if (j.contains("intensity")) c.intensity = parse_intensity(j["intensity"]);
  if (!j.contains("t_values") || !j["t_values"].is_array() ||
      j["t_values"].empty()) {
    bad_field("t_values", "expected a non-empty array of positive numbers");
  }
  for (const auto& t : j["t_values"]) {
    const double v = number_field(t, "t_values");
    if (!(v > 0.0)) bad_field("t_values", "every t must be positive");
    c.t_values.push_back(v);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) {
      bad_field("seed", "expected a non-negative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("reps")) c.reps = count_field(j["reps"], "reps");
  if (j.contains("mc_samples")) {
    c.mc_samples = count_field(j["mc_samples"], "mc_samples");
  }
  if (j.contains("z_samples")) {
    c.z_samples = count_field(j["z_samples"], "z_samples");
    if (c.z_samples < 2) bad_field("z_samples", "must be at least 2");
  }
  if (j.contains("bootstrap")) {
    c.bootstrap = count_field(j["bootstrap"], "bootstrap");
  }
  if (j.contains("theorem1")) {
    if (!j["theorem1"].is_boolean()) bad_field("theorem1", "expected true/false");
    c.theorem1 = j["theorem1"].get<bool>();
  }
  if (j.contains("theorem1_reps")) {
    c.theorem1_reps = count_field(j["theorem1_reps"], "theorem1_reps");
  }
  if (c.reps < 2) bad_field("reps", "must be at least 2");
  return c;
}

KernelDescriptor kernel_from_flags(const std::string& name,
                                   const std::vector<std::string>& params) {
  KernelDescriptor d{name, {}};
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--param expects key=value, got '" + p + "'");
    }
    try {
      std::size_t used = 0;
      const std::string text = p.substr(eq + 1);
      d.params[p.substr(0, eq)] = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw UsageError("--param " + p + ": value is not a number");
    }
  }
  try {
    (void)make_kernel(d);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--kernel: ") + e.what());
  }
  return d;
}

json estimate_json(const Estimate& e) { return to_json(e); }

/// Standardized replications and their empirical distances to N(0, 1).
struct Standardized {
  std::vector<double> f;
  std::vector<double> g;
  double mean_f = 0.0;
  Estimate dk;
  Estimate dw;
};

Standardized standardize(const SymmetricKernel& kernel,
                         const IntensitySpec& intensity, const Estimate& var_f,
                         std::size_t reps, std::size_t bootstrap,
                         std::size_t mc_samples, std::uint64_t seed) {
  if (!(var_f.value > 0.0)) throw std::domain_error("Var F is not positive");
  Standardized s;
  s.mean_f =
      full_integral(kernel, intensity, false, {mc_samples, mix_seed(seed, 0)})
          .value;
  s.f = replicate(kernel, intensity, reps, mix_seed(seed, 1));
  const double sd = std::sqrt(var_f.value);
  s.g.reserve(s.f.size());
  for (double f : s.f) s.g.push_back((f - s.mean_f) / sd);
  s.dk = bootstrap_estimate(s.g, empirical_dK, bootstrap, mix_seed(seed, 2));
  s.dw = bootstrap_estimate(s.g, empirical_dW, bootstrap, mix_seed(seed, 3));
  return s;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed,
                           const std::string& command) {
  if (!seed) throw UsageError(command + " requires --seed");
  return *seed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Normal-approximation bounds for Poisson U-statistics", "pstein"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> mc_samples;
  std::string out_path;
  bool strict = false;
  app.add_option("--seed", seed, "master random seed");
  app.add_option("--reps", reps, "replications")->check(CLI::PositiveNumber);
  app.add_option("--mc-samples", mc_samples, "Monte Carlo samples per integral")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "write results to this file");
  app.add_flag("--strict", strict, "exit 3 when an M_ij estimate is unreliable");

  double t = 1.0;
  std::size_t dim = 1;
  std::string kernel_name;
  std::vector<std::string> params;
  auto add_intensity = [&](CLI::App* cmd) {
    cmd->add_option("--t", t, "intensity scale")->check(CLI::NonNegativeNumber);
    cmd->add_option("--dim", dim, "dimension of the unit cube")
        ->check(CLI::Range(std::size_t{1}, kMaxDim));
  };
  auto add_kernel = [&](CLI::App* cmd) {
    cmd->add_option("--kernel", kernel_name,
                    "count, constant, geometric_indicator or product")
        ->required();
    cmd->add_option("--param", params, "kernel parameter key=value");
  };

  auto* sample = app.add_subcommand("sample", "emit one configuration as CSV");
  add_intensity(sample);

  auto* ustat = app.add_subcommand(
      "ustat", "replicate F, standardize, report empirical distances");
  add_intensity(ustat);
  add_kernel(ustat);
  std::size_t bootstrap = 200;
  ustat->add_option("--bootstrap", bootstrap, "bootstrap resamples")
      ->check(CLI::PositiveNumber);

  auto* bound = app.add_subcommand("bound", "emit the bound report as JSON");
  add_intensity(bound);
  add_kernel(bound);
  bool with_r = false;
  bool with_theorem1 = false;
  std::size_t z_samples = 64;
  bound->add_flag("--with-r", with_r, "estimate R_ij (k <= 2)");
  bound->add_flag("--with-theorem1", with_theorem1,
                  "estimate the general Kolmogorov bound terms");
  bound->add_option("--z-samples", z_samples, "z draws per replication")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));

  auto* partitions = app.add_subcommand("partitions", "count and list partitions");
  int pi = 0;
  int pj = 0;
  partitions->add_option("i", pi)->required()->check(
      CLI::Range(1, kMaxPartitionOrder));
  partitions->add_option("j", pj)->required()->check(
      CLI::Range(1, kMaxPartitionOrder));

  auto* stein = app.add_subcommand("stein-check", "Stein solution property report");
  SteinGrid grid;
  stein->add_option("--w-min", grid.w_min);
  stein->add_option("--w-max", grid.w_max);
  stein->add_option("--step", grid.step)->check(CLI::PositiveNumber);
  stein->add_option("--s", grid.s_values, "points s of the test functions");

  auto* berry = app.add_subcommand("berry-esseen",
                                   "exact Kolmogorov distance of Poisson(t)");
  double tmax = 1024.0;
  berry->add_option("--tmax", tmax, "largest t (t doubles from 1)")
      ->check(CLI::Range(1.0, 1e7));

  auto* experiment = app.add_subcommand("experiment", "t-sweep from a JSON config");
  std::string config_path;
  experiment->add_option("config", config_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::ostringstream result;
  int status = kExitOk;
  try {
    if (*sample) {
      const std::uint64_t s = require_seed(seed, "sample");
      const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(dim), t);
      Rng rng = make_stream(s, 0);
      const PointConfiguration config = sample_point_process(intensity, rng);
      for (std::size_t d = 0; d < dim; ++d) result << (d ? ",x" : "x") << d;
      result << '\n';
      for (const auto& p : config) {
        for (std::size_t d = 0; d < dim; ++d) result << (d ? "," : "") << num(p[d]);
        result << '\n';
      }
    } else if (*ustat) {
      const std::uint64_t s = require_seed(seed, "ustat");
      const SymmetricKernel kernel = make_kernel(kernel_from_flags(kernel_name, params));
      const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(dim), t);
      IntegrationConfig var_config;
      var_config.mc_samples = mc_samples.value_or(var_config.mc_samples);
      var_config.seed = mix_seed(s, 1);
      const Estimate var_f =
          variance_from_kernels(kernel, intensity, var_config).variance;
      const Standardized st =
          standardize(kernel, intensity, var_f, reps.value_or(10'000), bootstrap,
                      var_config.mc_samples, mix_seed(s, 2));
      json j{{"kernel", {{"name", kernel.name()}, {"params", kernel.descriptor().params}}},
             {"t", t},
             {"seed", s},
             {"reps", st.f.size()},
             {"mean_f", st.mean_f},
             {"var_f", estimate_json(var_f)},
             {"dk_emp", estimate_json(st.dk)},
             {"dw_emp", estimate_json(st.dw)},
             {"f", st.f},
             {"g", st.g}};
      result << j.dump(2) << '\n';
    } else if (*bound) {
      const std::uint64_t s = require_seed(seed, "bound");
      const SymmetricKernel kernel = make_kernel(kernel_from_flags(kernel_name, params));
      const IntensitySpec intensity = IntensitySpec::uniform(Box::unit(dim), t);
      ReportOptions options;
      options.seed = s;
      if (mc_samples) {
        options.variance.mc_samples = *mc_samples;
        options.m.mc_samples = *mc_samples;
      }
      options.with_r = with_r;
      options.with_theorem1 = with_theorem1;
      options.r.z_samples = options.theorem1.z_samples = z_samples;
      if (reps) options.r.reps = options.theorem1.reps = *reps;
      const BoundReport report = compute_bound_report(kernel, intensity, options);
      json j = to_json(report);
      j["seed"] = s;
      result << j.dump(2) << '\n';
      if (strict && report.any_unreliable()) {
        err << "error: unreliable M_ij estimate (strict mode)\n";
        status = kExitNumerical;
      }
    } else if (*partitions) {
      const auto list = enumerate_partitions(pi, pj);
      result << "count=" << list.size() << '\n';
      for (const auto& p : list) result << format_partition(p) << '\n';
    } else if (*stein) {
      const SteinReport r = check_stein_properties(grid);
      const json j{{"points", r.points},
                   {"s_values", grid.s_values},
                   {"min_g", r.min_g},
                   {"g_upper_margin", r.g_upper_margin},
                   {"g_prime_margin", r.g_prime_margin},
                   {"w_g_margin", r.w_g_margin},
                   {"g_second_margin", r.g_second_margin},
                   {"all_pass", r.all_pass()}};
      result << j.dump(2) << '\n';
      if (!r.all_pass()) status = kExitNumerical;
    } else if (*berry) {
      result << "t,dk_exact,bound,holds,tail_bound\n";
      for (double tv = 1.0; tv <= tmax; tv *= 2.0) {
        const PoissonKolmogorov pk = poisson_kolmogorov(tv);
        const double limit = 8.0 / std::sqrt(tv);
        const bool holds = pk.distance <= limit;
        if (!holds) status = kExitNumerical;
        result << num(tv) << ',' << num(pk.distance) << ',' << num(limit) << ','
               << (holds ? "true" : "false") << ',' << num(pk.tail_bound) << '\n';
      }
    } else if (*experiment) {
      ExperimentConfig c = parse_config(config_path);
      if (seed) c.seed = seed;
      if (reps) c.reps = *reps;
      if (mc_samples) c.mc_samples = *mc_samples;
      const std::uint64_t s = require_seed(c.seed, "experiment (--seed or config seed)");
      const SymmetricKernel kernel = make_kernel(c.kernel);
      result << "t,var_f,var_f_se,dk_emp,dk_emp_se,dk_bound,dk_bound_se,"
                "dw_emp,dw_emp_se,dw_bound,dw_bound_se,t1,t1_se,t2,t2_se,"
                "sup_term,sup_term_se,m_unreliable\n";
      bool unreliable = false;
      for (std::size_t n = 0; n < c.t_values.size(); ++n) {
        const double tv = c.t_values[n];
        const std::uint64_t base = mix_seed(s, n);
        const IntensitySpec intensity = make_intensity(c.intensity, tv);
        ReportOptions options;
        options.seed = mix_seed(base, 0);
        options.variance.mc_samples = c.mc_samples;
        options.m.mc_samples = c.mc_samples;
        options.with_theorem1 = c.theorem1;
        options.theorem1.reps = c.theorem1_reps;
        options.theorem1.z_samples = c.z_samples;
        const BoundReport report = compute_bound_report(kernel, intensity, options);
        const Standardized st =
            standardize(kernel, intensity, report.var_f, c.reps, c.bootstrap,
                        c.mc_samples, mix_seed(base, 1));
        unreliable = unreliable || report.any_unreliable();
        result << num(tv) << ',' << num(report.var_f.value) << ','
               << num(report.var_f.std_error) << ',' << num(st.dk.value) << ','
               << num(st.dk.std_error) << ',' << num(report.dk.value) << ','
               << num(report.dk.std_error) << ',' << num(st.dw.value) << ','
               << num(st.dw.std_error) << ',' << num(report.dw.value) << ','
               << num(report.dw.std_error);
        if (report.theorem1) {
          const Theorem1Terms& th = *report.theorem1;
          for (const Estimate* e : {&th.t1, &th.t2, &th.sup_term}) {
            result << ',' << num(e->value) << ',' << num(e->std_error);
          }
        } else {
          result << ",,,,,,";
        }
        result << ',' << (report.any_unreliable() ? 1 : 0) << '\n';
      }
      if (strict && unreliable) {
        err << "error: unreliable M_ij estimate (strict mode)\n";
        status = kExitNumerical;
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }

  if (out_path.empty()) {
    out << result.str();
  } else {
    std::ofstream file(out_path, std::ios::binary);
    if (!file) {
      err << "error: cannot write " << out_path << '\n';
      return kExitUsage;
    }
    file << result.str();
  }
  return status;
}

}  // namespace pstein::cli
