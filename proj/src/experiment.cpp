// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include "gibbs/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <system_error>

#include "gibbs/chaos_stats.hpp"
#include "gibbs/fourier.hpp"
#include "gibbs/functionals.hpp"
#include "gibbs/hamiltonian_flow.hpp"
#include "gibbs/parallel.hpp"

namespace gibbs {

using nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::kSample, "sample"},         {ExperimentKind::kFunctionals, "functionals"},
    {ExperimentKind::kCauchyRate, "cauchy_rate"}, {ExperimentKind::kChaos, "chaos"},
    {ExperimentKind::kTails, "tails"},           {ExperimentKind::kKernelSum, "kernel_sum"},
    {ExperimentKind::kFlow, "flow"},             {ExperimentKind::kInvariance, "invariance"},
    {ExperimentKind::kGnLp, "gn_lp"},
};

std::string known_kinds() {
  std::string out;
  for (const auto& k : kKindNames) {
    if (!out.empty()) out += ", ";
    out += k.name;
  }
  return out;
}

// Short builders keep the parameter tables below readable.
ParamSpec base(std::string key, ParamType type, json fallback) {
  ParamSpec s;
  s.key = std::move(key);
  s.type = type;
  s.fallback = std::move(fallback);
  return s;
}

ParamSpec integer(std::string key, long long fallback, double min, double max, std::string help) {
  auto s = base(std::move(key), ParamType::kInt, fallback);
  s.min = min;
  s.max = max;
  s.help = std::move(help);
  return s;
}

ParamSpec real(std::string key, double fallback, double min, double max, std::string help,
               bool min_exclusive = false) {
  auto s = base(std::move(key), ParamType::kReal, fallback);
  s.min = min;
  s.max = max;
  s.min_exclusive = min_exclusive;
  s.help = std::move(help);
  return s;
}

ParamSpec optional_real(std::string key, double min, std::string help) {
  auto s = base(std::move(key), ParamType::kReal, nullptr);
  s.min = min;
  s.nullable = true;
  s.help = std::move(help);
  return s;
}

ParamSpec choice(std::string key, std::string fallback, std::vector<std::string> choices, std::string help) {
  auto s = base(std::move(key), ParamType::kString, fallback);
  s.choices = std::move(choices);
  s.help = std::move(help);
  return s;
}

ParamSpec int_list(std::string key, std::vector<long long> fallback, double min, double max,
                   std::size_t min_items, bool increasing, std::string help) {
  auto s = base(std::move(key), ParamType::kIntList, fallback);
  s.min = min;
  s.max = max;
  s.min_items = min_items;
  s.strictly_increasing = increasing;
  s.help = std::move(help);
  return s;
}

ParamSpec real_list(std::string key, std::vector<double> fallback, double min, std::size_t min_items,
                    bool increasing, std::string help, bool min_exclusive = true) {
  auto s = base(std::move(key), ParamType::kRealList, fallback);
  s.min = min;
  s.min_exclusive = min_exclusive;
  s.min_items = min_items;
  s.strictly_increasing = increasing;
  s.help = std::move(help);
  return s;
}

std::vector<ParamSpec> with_common(std::vector<ParamSpec> specs) {
  auto seed = base("seed", ParamType::kSeed, 1);
  seed.help = "master seed of the counter-based generator";
  auto output = base("output", ParamType::kString, "");
  output.help = "default output directory when --out is not given";
  specs.insert(specs.begin(), seed);
  specs.push_back(output);
  return specs;
}

constexpr double kBig = 1e8;
const std::vector<std::string> kRamps{"linear", "smooth"};

std::map<ExperimentKind, std::vector<ParamSpec>> build_specs() {
  std::map<ExperimentKind, std::vector<ParamSpec>> m;
  m[ExperimentKind::kSample] = with_common({
      integer("N", 4, 0, 4096, "truncation band"),
      integer("count", 10, 1, kBig, "number of samples"),
  });
  m[ExperimentKind::kFunctionals] = with_common({
      int_list("N", {4, 16, 64}, 0, 1024, 1, true, "truncation bands"),
      integer("count", 100, 1, kBig, "samples per band"),
      real("kappa", 1.0, 0.0, kBig, "cutoff radius of the density", true),
      choice("ramp", "linear", kRamps, "cutoff profile"),
      real("tolerance", 1e-10, 0.0, 1.0, "allowed relative gap to the quadrature oracle", true),
  });
  m[ExperimentKind::kCauchyRate] = with_common({
      int_list("N", {8, 16, 32, 64, 128}, 1, 4096, 2, true, "bands N; each is paired with 2N"),
      integer("count", 2000, 100, kBig, "coupled samples"),
      choice("mode", "f_full", {"f_full", "X_only"}, "quantity whose Cauchy differences are measured"),
      optional_real("slope_min", -kBig, "lower end of the accepted slope band (mode default if null)"),
      optional_real("slope_max", -kBig, "upper end of the accepted slope band (mode default if null)"),
  });
  m[ExperimentKind::kChaos] = with_common({
      integer("k", 1, 1, 6, "chaos order"),
      real("p", 4.0, 2.0, 64.0, "moment exponent"),
      integer("d", 16, 1, 64, "number of Gaussians"),
      integer("count", 100000, 2, kBig, "Monte Carlo samples"),
      choice("coefficients", "random", {"random", "g1", "g1g2", "g1_squared"},
             "coefficient table: random complex Gaussian entries or a named single term"),
  });
  m[ExperimentKind::kTails] = with_common({
      choice("observable", "L4_norm", {"L4_norm", "scalar_gaussian", "dx_u_squared_sup"}, "tail observable"),
      integer("N", 32, 0, 1024, "truncation band"),
      integer("count", 1000000, 100, kBig, "samples drawn before conditioning"),
      real("theta", 2.0, 0.0, 2.0, "exponent of lambda in the fit (0.5, 1 or 2)", true),
      real_list("lambdas", {}, 0.0, 0, true, "thresholds; empty selects an automatic grid", false),
      integer("grid_points", 24, 3, 10000, "size of the automatic threshold grid"),
      optional_real("mass_max", 0.0, "keep only samples with L2 norm of Pi_N u at most this value"),
      real("r2_min", 0.9, 0.0, 1.0, "minimum r^2 of the tail fit"),
      real("oracle_z_max", 5.0, 0.0, kBig, "maximum |z| against the erfc oracle (scalar_gaussian)", true),
  });
  m[ExperimentKind::kKernelSum] = with_common({
      int_list("n", {0, 5, 20}, -1e6, 1e6, 1, false, "frequencies n"),
      int_list("N", {4, 8, 16, 32, 64}, 1, 1e6, 1, true, "cutoffs N"),
      real("eps", 0.1, 0.0, 0.5, "loss exponent in (0, 1/2]", true),
      real("ratio_max", 2.0, 0.0, kBig, "allowed max/median of the bound ratio", true),
  });
  m[ExperimentKind::kFlow] = with_common({
      integer("N", 8, 1, 256, "truncation band"),
      real("norm", 0.1, 0.0, kBig, "L2 norm of the initial datum"),
      choice("initial", "random", {"random", "single_mode"}, "initial datum: rescaled Gaussian draw or c e^{ix}"),
      real("T", 1.0, -kBig, kBig, "final time (may be negative)"),
      real("step", 1e-3, 0.0, 1.0, "RK4 step", true),
      integer("record_every", 10, 1, kBig, "store every k-th step"),
      real("abort_drift", 1e-6, 0.0, kBig, "mass drift at which integration aborts", true),
      real("mass_tol", 1e-8, 0.0, kBig, "allowed mass drift", true),
      real("energy_tol", 1e-6, 0.0, kBig, "allowed energy drift", true),
      real("gauge_tol", 1e-12, 0.0, kBig, "allowed |F_u - F_v| along the trajectory", true),
      real("single_mode_tol", 1e-10, 0.0, kBig, "allowed deviation from single-mode dynamics", true),
      real_list("order_steps", {2e-3, 1e-3, 5e-4}, 0.0, 0, false, "steps for the drift order check"),
      real("order_min", 3.5, 0.0, kBig, "minimum observed drift order between consecutive steps"),
  });
  m[ExperimentKind::kInvariance] = with_common({
      integer("N", 4, 0, 64, "truncation band"),
      real("kappa", 1.0, 0.0, kBig, "cutoff radius", true),
      choice("ramp", "linear", kRamps, "cutoff profile"),
      real("t", 0.5, -kBig, kBig, "evolution time"),
      integer("count", 20000, 100, kBig, "samples from the Gaussian measure"),
      real("step", 2e-3, 0.0, 1.0, "RK4 step", true),
      real("max_drift", 1e-6, 0.0, kBig, "mass drift at which a trajectory aborts", true),
  });
  m[ExperimentKind::kGnLp] = with_common({
      int_list("N", {4, 8, 16, 32, 64}, 1, 1024, 1, true, "bands for E[G_N^p]"),
      int_list("pairs", {8, 16, 32}, 1, 512, 0, true, "bands N compared with 2N"),
      real("kappa", 0.3, 0.0, kBig, "cutoff radius", true),
      choice("ramp", "linear", kRamps, "cutoff profile"),
      real("p", 2.0, 1.0, 64.0, "moment exponent"),
      integer("count", 10000, 100, kBig, "samples"),
      real_list("eps", {1e-3, 1e-2, 1e-1}, 0.0, 0, true, "thresholds for the convergence-in-measure table"),
      real("ratio_max", 2.0, 1.0, kBig, "allowed max/min of E[G_N^p] over the upper half of N", true),
      real("sigma", 3.0, 0.0, kBig, "tolerance in binomial standard deviations for the cutoff-ball check", true),
  });
  return m;
}

const std::map<ExperimentKind, std::vector<ParamSpec>>& spec_table() {
  static const auto table = build_specs();
  return table;
}

std::string number_text(double x) { return format_number(x); }

// ---------------------------------------------------------------------------
// Validation

bool integral_number(const json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15;
}

void check_range(const ParamSpec& s, double x, const std::string& where, std::vector<std::string>& errors) {
  if (s.min_exclusive ? !(x > s.min) : !(x >= s.min)) {
    errors.push_back(where + ": " + number_text(x) + (s.min_exclusive ? " must exceed " : " is below the minimum ") +
                     number_text(s.min));
  } else if (!(x <= s.max)) {
    errors.push_back(where + ": " + number_text(x) + " is above the maximum " + number_text(s.max));
  }
}

/// Returns the normalized value, or null after recording violations.
json validate_value(const ParamSpec& s, const json& v, const std::string& where, std::vector<std::string>& errors) {
  if (v.is_null()) {
    if (s.nullable) return nullptr;
    errors.push_back(where + ": must not be null");
    return nullptr;
  }
  switch (s.type) {
    case ParamType::kSeed:
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (integral_number(v) && v.get<double>() >= 0.0) return static_cast<std::uint64_t>(v.get<double>());
      errors.push_back(where + ": seed must be a non-negative integer");
      return nullptr;
    case ParamType::kInt: {
      if (!integral_number(v)) {
        errors.push_back(where + ": expected an integer");
        return nullptr;
      }
      const auto x = static_cast<long long>(v.get<double>());
      const auto before = errors.size();
      check_range(s, static_cast<double>(x), where, errors);
      return errors.size() == before ? json(x) : json(nullptr);
    }
    case ParamType::kReal: {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        errors.push_back(where + ": expected a finite number");
        return nullptr;
      }
      const double x = v.get<double>();
      const auto before = errors.size();
      check_range(s, x, where, errors);
      return errors.size() == before ? json(x) : json(nullptr);
    }
    case ParamType::kString:
      if (!v.is_string()) {
        errors.push_back(where + ": expected a string");
        return nullptr;
      }
      if (!s.choices.empty() && std::find(s.choices.begin(), s.choices.end(), v.get<std::string>()) == s.choices.end()) {
        std::string allowed;
        for (const auto& c : s.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        errors.push_back(where + ": '" + v.get<std::string>() + "' is not one of " + allowed);
        return nullptr;
      }
      return v;
    case ParamType::kBool:
      if (!v.is_boolean()) {
        errors.push_back(where + ": expected true or false");
        return nullptr;
      }
      return v;
    case ParamType::kIntList:
    case ParamType::kRealList: {
      if (!v.is_array()) {
        errors.push_back(where + ": expected a list");
        return nullptr;
      }
      const bool ints = s.type == ParamType::kIntList;
      const auto before = errors.size();
      json out = json::array();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        const auto& e = v[i];
        if (ints ? !integral_number(e) : !(e.is_number() && std::isfinite(e.get<double>()))) {
          errors.push_back(at + (ints ? ": expected an integer" : ": expected a finite number"));
          continue;
        }
        const double x = e.get<double>();
        check_range(s, x, at, errors);
        if (ints) {
          out.push_back(static_cast<long long>(x));
        } else {
          out.push_back(x);
        }
      }
      if (v.size() < s.min_items) {
        errors.push_back(where + ": needs at least " + std::to_string(s.min_items) + " entries, got " +
                         std::to_string(v.size()));
      }
      if (s.strictly_increasing && errors.size() == before) {
        for (std::size_t i = 1; i < out.size(); ++i) {
          if (!(out[i].get<double>() > out[i - 1].get<double>())) {
            errors.push_back(where + ": entries must be strictly increasing");
            break;
          }
        }
      }
      return errors.size() == before ? out : json(nullptr);
    }
  }
  return nullptr;
}

/// Constraints spanning several parameters, checked once each field is valid.
void cross_checks(ExperimentKind kind, const json& p, std::vector<std::string>& errors) {
  auto ok = [&](const char* key) { return p.contains(key) && !p.at(key).is_null(); };
  switch (kind) {
    case ExperimentKind::kCauchyRate:
      if (ok("slope_min") && ok("slope_max") && p["slope_min"].get<double>() > p["slope_max"].get<double>()) {
        errors.push_back("parameters.slope_min: exceeds slope_max");
      }
      break;
    case ExperimentKind::kChaos:
      if (ok("coefficients") && ok("k") && ok("d")) {
        const auto name = p["coefficients"].get<std::string>();
        const int k = p["k"].get<int>();
        const int d = p["d"].get<int>();
        const int want_k = name == "g1" ? 1 : (name == "random" ? k : 2);
        if (k != want_k) {
          errors.push_back("parameters.k: coefficients '" + name + "' is a chaos of order " + std::to_string(want_k) +
                           ", got k = " + std::to_string(k));
        }
        if (name == "g1g2" && d < 2) errors.push_back("parameters.d: 'g1g2' needs d >= 2");
      }
      break;
    case ExperimentKind::kTails:
      if (ok("theta")) {
        const double th = p["theta"].get<double>();
        if (th != 0.5 && th != 1.0 && th != 2.0) {
          errors.push_back("parameters.theta: " + number_text(th) + " is not one of 0.5, 1, 2");
        }
      }
      if (ok("lambdas") && !p["lambdas"].empty() && p["lambdas"].size() < 3) {
        errors.push_back("parameters.lambdas: needs at least 3 thresholds when given");
      }
      break;
    case ExperimentKind::kFlow:
      if (ok("order_steps") && p["order_steps"].size() == 1) {
        errors.push_back("parameters.order_steps: needs 0 or at least 2 steps");
      }
      break;
    default:
      break;
  }
}

std::string describe_violations(const std::vector<std::string>& v) {
  std::string msg = "invalid configuration (" + std::to_string(v.size()) + " problem" + (v.size() == 1 ? "" : "s") + ")";
  for (const auto& e : v) msg += "\n  - " + e;
  return msg;
}

const json& param(const ExperimentConfig& c, const std::string& key) {
  if (!c.parameters.contains(key)) {
    throw PreconditionError("configuration has no parameter '" + key + "' for experiment " +
                            std::string(to_string(c.experiment)));
  }
  return c.parameters.at(key);
}

// ---------------------------------------------------------------------------
// Shared helpers for the runners

Ramp ramp_of(const ExperimentConfig& c) { return c.text("ramp") == "smooth" ? Ramp::kSmooth : Ramp::kLinear; }

void log(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << "[" << "gibbs-dnls" << "] " << msg << '\n';
}

Verdict make_verdict(std::string name, bool pass, double value, std::string limit, std::string detail = {}) {
  return Verdict{std::move(name), pass, value, std::move(limit), std::move(detail)};
}

std::string at_most(double limit) { return "<= " + number_text(limit); }

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double rel_gap(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// ---------------------------------------------------------------------------
// sample

void run_sample(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const int N = c.integer("N");
  const auto count = static_cast<std::size_t>(c.integer("count"));
  log(o, "sampling " + std::to_string(count) + " draws at band " + std::to_string(N));
  const auto ensemble = sample_ensemble(N, count, c.seed(), o.threads);

  Table coeffs{"coefficients", {"sample_index", "n", "re", "im"}, {}};
  std::vector<double> squared_norms;
  bool finite = true;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto& u = ensemble.samples()[i];
    for (int n = -N; n <= N; ++n) {
      coeffs.add_row({static_cast<long long>(i), static_cast<long long>(n), u[n].real(), u[n].imag()});
    }
    finite = finite && u.is_finite();
    squared_norms.push_back(l2_norm(u) * l2_norm(u));
  }
  double expected = 0.0;
  for (int n = -N; n <= N; ++n) expected += 1.0 / (n * static_cast<double>(n) + 1.0);
  const auto stat = estimate_mean(squared_norms, std::nullopt, r.bootstrap_seed);

  r.payload = {{"band", N},
               {"count", count},
               {"mean_squared_norm", number_json(stat.mean)},
               {"mean_squared_norm_se", number_json(stat.std_error)},
               {"expected_squared_norm", expected}};
  r.tables.push_back(std::move(coeffs));
  r.verdicts.push_back(make_verdict("coefficients_finite", finite, finite ? 1.0 : 0.0, "all finite"));
}

// ---------------------------------------------------------------------------
// functionals

void run_functionals(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const auto bands = c.integers("N");
  const auto count = static_cast<std::size_t>(c.integer("count"));
  const double tol = c.real("tolerance");
  const int top = bands.back();

  log(o, "sampling " + std::to_string(count) + " draws at band " + std::to_string(top));
  std::vector<FourierCoeffs> phi(count);
  parallel_for(count, o.threads, [&](std::size_t i) { phi[i] = sample_phi(top, {c.seed(), i}); });

  Table gaps{"oracle_gap", {"N", "max_rel_gap", "mean_f_N", "mean_energy"}, {}};
  r.payload["bands"] = json::array();
  for (int N : bands) {
    const auto grid = QuadratureGrid::exact_for_degree(6 * std::max(N, 1));
    const DensityParams params{c.real("kappa"), N, ramp_of(c)};
    struct Row {
      double mass, momentum, f, energy, G, F, gap;
    };
    std::vector<Row> rows(count);
    parallel_for(count, o.threads, [&](std::size_t i) {
      const auto u = project(phi[i], N);
      const double f = f_quartic(u, N);
      rows[i] = {mass(u),          momentum(u, grid),         f, energy(u, grid), density_G(u, params, grid),
                 gauge_F(u, grid), rel_gap(f, f_quadrature_oracle(u, N, grid))};
    });

    Table t{"functionals_N" + std::to_string(N), {"sample_index", "mass", "momentum", "f_N", "energy", "G_N", "F_u"}, {}};
    double worst = 0.0, f_sum = 0.0, e_sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const auto& w = rows[i];
      t.add_row({static_cast<long long>(i), w.mass, w.momentum, w.f, w.energy, w.G, w.F});
      worst = std::max(worst, w.gap);
      f_sum += w.f;
      e_sum += w.energy;
    }
    const double n = static_cast<double>(count);
    gaps.add_row({static_cast<long long>(N), worst, f_sum / n, e_sum / n});
    r.payload["bands"].push_back({{"N", N}, {"max_rel_gap", worst}});
    r.tables.push_back(std::move(t));
    r.verdicts.push_back(make_verdict("oracle_gap_N" + std::to_string(N), worst <= tol, worst, at_most(tol),
                                      "f_quartic against the quadrature oracle"));
  }
  r.tables.insert(r.tables.begin(), std::move(gaps));
}

// ---------------------------------------------------------------------------
// cauchy_rate

/// sqrt(E|X_{2N} - X_N|^2), exact from the fourth and eighth Gaussian moments.
double x_only_exact(int N) {
  double s = 0.0;
  for (int n = N + 1; n <= 2 * N; ++n) s += 2.0 * n * static_cast<double>(n) / std::pow(n * static_cast<double>(n) + 1.0, 4);
  return std::sqrt(320.0 * s);
}

void run_cauchy_rate(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const auto bands = c.integers("N");
  const auto mode = c.text("mode") == "X_only" ? RateMode::kXOnly : RateMode::kFull;
  const double lo = c.optional_real("slope_min").value_or(mode == RateMode::kFull ? -1.8 : -2.4);
  const double hi = c.optional_real("slope_max").value_or(mode == RateMode::kFull ? -1.2 : -1.6);
  const auto count = static_cast<std::size_t>(c.integer("count"));

  log(o, "coupled Cauchy differences (" + c.text("mode") + "), " + std::to_string(count) + " samples");
  const auto fit = cauchy_rate(bands, count, c.seed(), mode, o.threads);

  r.payload = fit;
  r.payload["slope_band"] = {lo, hi};
  json local = json::array();
  for (std::size_t i = 1; i < bands.size(); ++i) {
    local.push_back(number_json(std::log(fit.values[i] / fit.values[i - 1]) /
                                std::log(static_cast<double>(bands[i]) / bands[i - 1])));
  }
  r.payload["local_slopes"] = local;
  if (mode == RateMode::kXOnly) {
    std::vector<double> x(bands.begin(), bands.end()), exact;
    for (int N : bands) exact.push_back(x_only_exact(N));
    r.payload["exact_values"] = exact;
    r.payload["exact_slope"] = loglog_slope(x, exact);
  }
  r.tables.push_back(rate_table(fit, "rate"));

  std::ostringstream ci;
  ci << "95% bootstrap CI [" << number_text(fit.slope_ci_low) << ", " << number_text(fit.slope_ci_high) << "]";
  r.verdicts.push_back(make_verdict("slope", fit.slope >= lo && fit.slope <= hi, fit.slope,
                                    "in [" + number_text(lo) + ", " + number_text(hi) + "]", ci.str()));
}

// ---------------------------------------------------------------------------
// chaos

/// ||S||_p / ||S||_2 for the named single-term tables, from E|g|^{2m} = m!.
double analytic_chaos_ratio(const std::string& name, double p) {
  const double gp = std::tgamma(1.0 + p / 2.0);  // E|g|^p
  if (name == "g1") return std::pow(gp, 1.0 / p);
  if (name == "g1g2") return std::pow(gp, 2.0 / p);
  return std::pow(std::tgamma(1.0 + p), 1.0 / p) / std::sqrt(2.0);  // g1^2: E|g|^{2p} = Gamma(1+p), E|g|^4 = 2
}

void run_chaos(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const int k = c.integer("k");
  const int d = c.integer("d");
  const double p = c.real("p");
  const auto name = c.text("coefficients");
  const auto indices = enumerate_multi_indices(k, d);

  ChaosTable table{k, d, std::vector<Complex>(indices.size())};
  if (name == "random") {
    // A stream index no sampling path uses, so the table is independent of the draws.
    table.coeffs = sample_gaussian({c.seed(), ~std::uint64_t{0}}, indices.size());
  } else {
    const std::vector<int> target = name == "g1" ? std::vector<int>{1}
                                   : name == "g1g2" ? std::vector<int>{1, 2}
                                                    : std::vector<int>{1, 1};
    const auto it = std::find(indices.begin(), indices.end(), target);
    table.coeffs[static_cast<std::size_t>(it - indices.begin())] = 1.0;
  }

  log(o, "chaos ratio k=" + std::to_string(k) + " p=" + number_text(p) + " (" + name + ")");
  const auto res = chaos_ratio(table, p, static_cast<std::size_t>(c.integer("count")), c.seed(), o.threads);

  r.payload = res;
  r.payload["coefficients"] = name;
  r.payload["terms"] = indices.size();
  const double analytic = name == "random" ? std::numeric_limits<double>::quiet_NaN() : analytic_chaos_ratio(name, p);
  r.payload["analytic_ratio"] = number_json(analytic);

  Table t{"chaos", {"k", "d", "p", "coefficients", "ratio", "std_error", "bound", "analytic"}, {}};
  t.add_row({static_cast<long long>(k), static_cast<long long>(d), p, name, res.ratio, res.std_error, res.bound, analytic});
  r.tables.push_back(std::move(t));

  const double limit = res.bound + 3.0 * res.std_error;
  r.verdicts.push_back(make_verdict("hypercontractive_bound", res.ratio <= limit, res.ratio, at_most(limit),
                                    "bound sqrt(k+1)(p-1)^{k/2} = " + number_text(res.bound) + " plus 3 SE"));
  if (name != "random") {
    const double z = (res.ratio - analytic) / res.std_error;
    r.verdicts.push_back(make_verdict("analytic_value", std::abs(z) <= 3.0, res.ratio,
                                      "within 3 SE of " + number_text(analytic), "z = " + number_text(z)));
  }
}

// ---------------------------------------------------------------------------
// tails

struct Regression {
  double slope = 0.0, intercept = 0.0, r_squared = 0.0;
};

Regression least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  Regression out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return out;
}

void run_tails(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const auto which = c.text("observable");
  const bool scalar = which == "scalar_gaussian";
  const int N = scalar ? 0 : c.integer("N");
  const auto count = static_cast<std::size_t>(c.integer("count"));
  const double theta = c.real("theta");
  const auto mass_max = c.optional_real("mass_max");

  Observable obs;
  if (scalar) {
    obs = [](const FourierCoeffs& u) { return std::abs(u[0].real()); };
  } else if (which == "L4_norm") {
    // Parseval on w = u^2: the fourth power of the L4 norm is sum_k |w_k|^2.
    obs = [](const FourierCoeffs& u) { return std::pow(l2_norm(multiply(u, u)), 0.5); };
  } else {
    const auto grid = QuadratureGrid::oversampled(2 * N);
    obs = [grid](const FourierCoeffs& u) {
      double m = 0.0;
      for (const auto& z : grid.evaluate(derivative(multiply(u, u)))) m = std::max(m, std::abs(z));
      return m;
    };
  }
  Condition cond;
  if (mass_max) {
    const double cap = *mass_max;
    cond = [cap, N](const FourierCoeffs& u) { return l2_norm(project(u, N)) <= cap; };
  }

  log(o, "tail sampling of " + which + " at band " + std::to_string(N) + ", " + std::to_string(count) + " draws");
  const auto values = tail_values(obs, N, count, c.seed(), cond, o.threads);
  r.payload["observable"] = which;
  r.payload["band"] = N;
  r.payload["drawn"] = count;
  r.payload["kept"] = values.size();
  if (values.size() <= 2 * kMinExceedances) {
    throw InsufficientDataError("only " + std::to_string(values.size()) + " of " + std::to_string(count) +
                                " samples satisfy the condition; at least " + std::to_string(2 * kMinExceedances + 1) +
                                " are needed for a tail fit");
  }

  auto lambdas = c.reals("lambdas");
  if (lambdas.empty()) {
    // From the median up to the largest threshold that still leaves kMinExceedances samples above it.
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted[sorted.size() / 2];
    const double hi = sorted[sorted.size() - kMinExceedances - 1];
    if (!(hi > lo)) throw InsufficientDataError("tail values are degenerate above the median");
    const int pts = c.integer("grid_points");
    for (int j = 0; j < pts; ++j) lambdas.push_back(lo + (hi - lo) * j / (pts - 1));
  }
  const auto fit = fit_tail(values, lambdas, theta);
  r.payload["fit"] = fit;
  r.tables.push_back(survival_table(fit, "survival"));

  bool monotone = true;
  for (std::size_t j = 1; j < fit.survival.size(); ++j) monotone = monotone && fit.survival[j] <= fit.survival[j - 1];
  const double r2_min = c.real("r2_min");
  r.verdicts.push_back(make_verdict("fit_quality", fit.r_squared >= r2_min, fit.r_squared, ">= " + number_text(r2_min),
                                    std::to_string(fit.fit_points) + " thresholds in the fit"));
  r.verdicts.push_back(make_verdict("decay", fit.rate() > 0.0, fit.rate(), "> 0",
                                    "fitted c in log P = a - c lambda^" + number_text(theta)));
  r.verdicts.push_back(make_verdict("survival_monotone", monotone, monotone ? 1.0 : 0.0, "non-increasing"));

  if (scalar) {
    // Re c_0 ~ N(0, 1/2), so P(|Re c_0| > lambda) = erfc(lambda).
    Table t{"erfc_oracle", {"lambda", "empirical", "exact", "sigma", "z"}, {}};
    double worst = 0.0;
    std::vector<double> x, y;
    const auto n = static_cast<double>(values.size());
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      const double exact = std::erfc(lambdas[j]);
      const double sigma = std::sqrt(exact * (1.0 - exact) / n);
      const double z = sigma > 0.0 ? (fit.survival[j] - exact) / sigma : 0.0;
      worst = std::max(worst, std::abs(z));
      t.add_row({lambdas[j], fit.survival[j], exact, sigma, z});
      if (fit.exceedances[j] >= kMinExceedances && lambdas[j] > 0.0) {
        x.push_back(std::pow(lambdas[j], theta));
        y.push_back(std::log(exact));
      }
    }
    r.tables.push_back(std::move(t));
    const auto exact_fit = least_squares(x, y);
    r.payload["oracle"] = {{"max_abs_z", worst},
                           {"exact_fit_slope", exact_fit.slope},
                           {"exact_fit_r_squared", exact_fit.r_squared}};
    const double zmax = c.real("oracle_z_max");
    r.verdicts.push_back(make_verdict("erfc_oracle", worst <= zmax, worst, at_most(zmax),
                                      "max |z| of the empirical survival against erfc"));
  }
}

// ---------------------------------------------------------------------------
// kernel_sum

void run_kernel_sum(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const auto ns = c.integers("n");
  const auto Ns = c.integers("N");
  const double eps = c.real("eps");
  log(o, "kernel tail sums over " + std::to_string(ns.size() * Ns.size()) + " (n, N) pairs");

  Table t{"kernel_sum", {"n", "N", "eps", "sum", "bound_ratio"}, {}};
  std::vector<double> ratios;
  bool symmetric = true, monotone = true;
  for (int n : ns) {
    double previous = std::numeric_limits<double>::infinity();
    for (int N : Ns) {
      const auto ks = kernel_tail_sum(n, N, eps);
      symmetric = symmetric && kernel_tail_sum(-n, N, eps).sum == ks.sum;
      monotone = monotone && ks.sum < previous;
      previous = ks.sum;
      ratios.push_back(ks.bound_ratio);
      t.add_row({static_cast<long long>(n), static_cast<long long>(N), eps, ks.sum, ks.bound_ratio});
    }
  }
  const double max_ratio = *std::max_element(ratios.begin(), ratios.end());
  const double min_ratio = *std::min_element(ratios.begin(), ratios.end());
  const double med = median_of(ratios);
  const double ratio_max = c.real("ratio_max");

  r.payload = {{"eps", eps},
               {"max_bound_ratio", max_ratio},
               {"min_bound_ratio", min_ratio},
               {"median_bound_ratio", med},
               {"max_over_median", max_ratio / med}};
  r.tables.push_back(std::move(t));
  r.verdicts.push_back(make_verdict("symmetry", symmetric, symmetric ? 1.0 : 0.0, "sum(n) == sum(-n) exactly"));
  r.verdicts.push_back(make_verdict("monotone_in_N", monotone, monotone ? 1.0 : 0.0, "sum decreases as N grows"));
  r.verdicts.push_back(make_verdict("bounded", max_ratio <= ratio_max * med, max_ratio / med,
                                    at_most(ratio_max) + " (max / median bound ratio)",
                                    "max " + number_text(max_ratio) + ", median " + number_text(med)));
}

// ---------------------------------------------------------------------------
// flow

struct Drift {
  double mass = 0.0, energy = 0.0;
};

Drift max_drift(const Trajectory& traj) {
  Drift d;
  const auto& first = traj.front().invariants;
  for (const auto& s : traj) {
    d.mass = std::max(d.mass, std::abs(s.invariants.mass - first.mass));
    d.energy = std::max(d.energy, std::abs(s.invariants.energy - first.energy));
  }
  return d;
}

void run_flow(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const int N = c.integer("N");
  const double norm = c.real("norm");
  const double T = c.real("T");
  const bool single = c.text("initial") == "single_mode";

  FourierCoeffs u0(N);
  if (single) {
    u0.set(1, norm);
  } else {
    const auto phi = sample_phi(N, {c.seed(), 0});
    const double len = l2_norm(phi);
    if (len > 0.0) u0 = (norm / len) * phi;
  }

  IntegratorConfig cfg;
  cfg.step = c.real("step");
  cfg.max_drift = c.real("abort_drift");
  cfg.record_every = static_cast<std::size_t>(c.integer("record_every"));
  log(o, "integrating band " + std::to_string(N) + " to T = " + number_text(T) + " with h = " + number_text(cfg.step));
  const auto traj = evolve(u0, N, T, cfg);
  const auto drift = max_drift(traj);

  r.payload["initial"] = u0;
  r.payload["steps"] = static_cast<std::size_t>(std::ceil(std::abs(T) / cfg.step));
  r.payload["stored_states"] = traj.size();
  r.payload["max_mass_drift"] = drift.mass;
  r.payload["max_energy_drift"] = drift.energy;
  r.tables.push_back(trajectory_table(traj, "trajectory"));

  const double mass_tol = c.real("mass_tol"), energy_tol = c.real("energy_tol");
  r.verdicts.push_back(make_verdict("mass_drift", drift.mass <= mass_tol, drift.mass, at_most(mass_tol)));
  r.verdicts.push_back(make_verdict("energy_drift", drift.energy <= energy_tol, drift.energy, at_most(energy_tol)));

  // Drift order: each halving of h should shrink the final-time drift by at least 2^order_min.
  const auto steps = c.reals("order_steps");
  if (!steps.empty()) {
    Table t{"order", {"h", "steps", "mass_drift", "energy_drift", "mass_order", "energy_order"}, {}};
    std::vector<Drift> drifts;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < steps.size(); ++i) {
      IntegratorConfig oc = cfg;
      oc.step = steps[i];
      oc.record_every = static_cast<std::size_t>(std::ceil(std::abs(T) / steps[i])) + 1;
      const auto run = evolve(u0, N, T, oc);
      const auto& a = run.front().invariants;
      const auto& b = run.back().invariants;
      drifts.push_back({std::abs(b.mass - a.mass), std::abs(b.energy - a.energy)});
      double mo = std::numeric_limits<double>::quiet_NaN(), eo = mo;
      if (i > 0) {
        const double ratio = std::log(steps[i - 1] / steps[i]);
        mo = std::log(drifts[i - 1].mass / drifts[i].mass) / ratio;
        eo = std::log(drifts[i - 1].energy / drifts[i].energy) / ratio;
        worst = std::min({worst, std::isnan(mo) ? -1.0 : mo, std::isnan(eo) ? -1.0 : eo});
      }
      t.add_row({steps[i], static_cast<long long>(std::ceil(std::abs(T) / steps[i])), drifts[i].mass, drifts[i].energy,
                 mo, eo});
    }
    r.tables.push_back(std::move(t));
    r.payload["min_drift_order"] = number_json(worst);
    const double order_min = c.real("order_min");
    r.verdicts.push_back(make_verdict("drift_order", worst >= order_min, worst, ">= " + number_text(order_min),
                                      "smallest observed order over mass and energy drift"));
  }

  // Gauge transform along the stored trajectory.
  const auto gauged = gauge_transform(traj);
  const auto grid = QuadratureGrid::oversampled(N);
  double f_gap = 0.0, modulus_gap = 0.0, scale = 1.0;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    f_gap = std::max(f_gap, std::abs(traj[j].invariants.gauge_F - gauged[j].invariants.gauge_F));
    const auto uu = grid.evaluate(traj[j].u);
    const auto vv = grid.evaluate(gauged[j].u);
    for (std::size_t q = 0; q < uu.size(); ++q) {
      modulus_gap = std::max(modulus_gap, std::abs(std::abs(vv[q]) - std::abs(uu[q])));
      scale = std::max(scale, std::abs(uu[q]));
    }
  }
  const bool same_start = gauged.front().u == traj.front().u;
  r.payload["gauge"] = {{"max_F_gap", f_gap}, {"max_modulus_gap", modulus_gap}, {"initial_identical", same_start}};
  r.tables.push_back(trajectory_table(gauged, "gauge_trajectory"));
  const double gauge_tol = c.real("gauge_tol");
  r.verdicts.push_back(make_verdict("gauge_F", f_gap <= gauge_tol, f_gap, at_most(gauge_tol), "F_u = F_v along the trajectory"));
  r.verdicts.push_back(make_verdict("gauge_initial", same_start, same_start ? 1.0 : 0.0, "v(0) == u(0) bitwise"));
  r.verdicts.push_back(make_verdict("gauge_modulus", modulus_gap <= 1e-14 * scale, modulus_gap,
                                    at_most(1e-14 * scale), "pointwise ||v| - |u|| on the grid"));

  if (single) {
    double leak = 0.0, amp = 0.0;
    const double a0 = std::abs(traj.front().u[1]);
    for (const auto& s : traj) {
      amp = std::max(amp, std::abs(std::abs(s.u[1]) - a0));
      for (int n = -N; n <= N; ++n) {
        if (n != 1) leak = std::max(leak, std::abs(s.u[n]));
      }
    }
    const double tol = c.real("single_mode_tol");
    r.payload["single_mode"] = {{"max_other_modes", leak}, {"max_amplitude_change", amp}};
    r.verdicts.push_back(make_verdict("single_mode_support", leak <= tol, leak, at_most(tol), "largest coefficient off n = 1"));
    r.verdicts.push_back(make_verdict("single_mode_amplitude", amp <= tol, amp, at_most(tol), "change of |c_1|"));
  }
}

// ---------------------------------------------------------------------------
// invariance

void run_invariance(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const int N = c.integer("N");
  const DensityParams params{c.real("kappa"), N, ramp_of(c)};
  IntegratorConfig cfg;
  cfg.step = c.real("step");
  cfg.max_drift = c.real("max_drift");
  log(o, "weighted invariance test at band " + std::to_string(N));
  const auto rep = invariance_experiment(N, params, c.real("t"), static_cast<std::size_t>(c.integer("count")), c.seed(),
                                         standard_observables(N), cfg, o.threads);
  r.payload = rep;

  Table t{"invariance", {"observable", "before", "before_se", "after", "after_se", "difference", "combined_se", "pass"}, {}};
  for (const auto& s : rep.shifts) {
    t.add_row({s.name, s.before.mean, s.before.std_error, s.after.mean, s.after.std_error, s.difference, s.combined_se,
               static_cast<long long>(s.pass)});
    r.verdicts.push_back(make_verdict("shift_" + s.name, s.pass, std::abs(s.difference), at_most(3.0 * s.combined_se),
                                      "3 combined bootstrap SE"));
  }
  r.tables.push_back(std::move(t));
  r.verdicts.push_back(make_verdict("effective_sample_size", rep.ess >= kMinEffectiveSampleSize, rep.ess,
                                    ">= " + number_text(kMinEffectiveSampleSize)));
}

// ---------------------------------------------------------------------------
// gn_lp

void run_gn_lp(const ExperimentConfig& c, const RunOptions& o, RunRecord& r) {
  const auto bands = c.integers("N");
  const auto pairs = c.integers("pairs");
  const auto eps = c.reals("eps");
  const double p = c.real("p");
  const double kappa = c.real("kappa");
  const auto count = static_cast<std::size_t>(c.integer("count"));
  const Ramp ramp = ramp_of(c);

  std::set<int> needed(bands.begin(), bands.end());
  for (int N : pairs) {
    needed.insert(N);
    needed.insert(2 * N);
  }
  const std::vector<int> all(needed.begin(), needed.end());
  const int top = all.back();
  std::vector<QuadratureGrid> grids;
  for (int N : all) grids.push_back(QuadratureGrid::exact_for_degree(6 * N));

  log(o, "density G_N at " + std::to_string(all.size()) + " bands over " + std::to_string(count) + " coupled samples");
  // G[b][i] and in_ball[b][i] for band all[b] and sample i, all bands from one draw.
  std::vector<std::vector<double>> G(all.size(), std::vector<double>(count));
  std::vector<std::vector<char>> in_ball(all.size(), std::vector<char>(count));
  parallel_for(count, o.threads, [&](std::size_t i) {
    const auto phi = sample_phi(top, {c.seed(), i});
    for (std::size_t b = 0; b < all.size(); ++b) {
      G[b][i] = density_G(phi, DensityParams{kappa, all[b], ramp}, grids[b]);
      in_ball[b][i] = l2_norm(project(phi, all[b])) <= kappa;
    }
  });
  auto slot = [&](int N) { return static_cast<std::size_t>(std::find(all.begin(), all.end(), N) - all.begin()); };

  const double n = static_cast<double>(count);
  const double sigmas = c.real("sigma");
  Table moments{"moments", {"N", "mean_G_p", "std_error", "fraction_positive", "ball_mass", "ball_sigma", "max_G"}, {}};
  json per_band = json::array();
  std::vector<double> means;
  bool any_positive = false;
  for (int N : bands) {
    const auto& g = G[slot(N)];
    std::vector<double> powered(count);
    std::size_t positive = 0, ball = 0;
    for (std::size_t i = 0; i < count; ++i) {
      powered[i] = std::pow(g[i], p);
      positive += g[i] > 0.0;
      ball += in_ball[slot(N)][i] != 0;
    }
    const auto est = estimate_mean(powered, std::nullopt, r.bootstrap_seed);
    const double frac = positive / n, mass = ball / n;
    const double sigma = std::sqrt(mass * (1.0 - mass) / n);
    const double gmax = *std::max_element(g.begin(), g.end());
    any_positive = any_positive || positive > 0;
    means.push_back(est.mean);
    moments.add_row({static_cast<long long>(N), est.mean, est.std_error, frac, mass, sigma, gmax});
    per_band.push_back({{"N", N},
                        {"mean_G_p", number_json(est.mean)},
                        {"std_error", number_json(est.std_error)},
                        {"fraction_positive", frac},
                        {"ball_mass", mass},
                        {"ball_sigma", sigma}});
    const double gap = std::abs(frac - mass);
    r.verdicts.push_back(make_verdict("nontrivial_N" + std::to_string(N), gap <= sigmas * sigma, gap,
                                      at_most(sigmas * sigma) + " (" + number_text(sigmas) + " binomial sigma)",
                                      "fraction G_N > 0 = " + number_text(frac) + ", ball mass = " + number_text(mass)));
  }
  r.payload["kappa"] = kappa;
  r.payload["p"] = p;
  r.payload["moments"] = per_band;
  r.tables.push_back(std::move(moments));

  // Uniform L^p bound over the upper half of the band list.
  const std::size_t from = bands.size() / 2;
  const auto hi = std::max_element(means.begin() + static_cast<std::ptrdiff_t>(from), means.end());
  const auto lo = std::min_element(means.begin() + static_cast<std::ptrdiff_t>(from), means.end());
  const double spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::quiet_NaN();
  const double ratio_max = c.real("ratio_max");
  r.verdicts.push_back(make_verdict("uniform_Lp_bound", spread < ratio_max, spread, "< " + number_text(ratio_max),
                                    *lo > 0.0 ? "max / min of E[G_N^p] from N = " + std::to_string(bands[from])
                                              : "E[G_N^p] is zero at some band: no sample has positive weight"));
  r.verdicts.push_back(make_verdict("positive_weight_observed", any_positive, any_positive ? 1.0 : 0.0,
                                    "some sample has G_N > 0"));

  // Coupled differences and the convergence-in-measure table.
  if (!pairs.empty()) {
    Table cauchy{"cauchy", {"N", "M", "mean_abs_diff", "std_error"}, {}};
    Table measure{"measure_convergence", {"N", "M", "eps", "fraction_exceeding"}, {}};
    std::vector<double> diffs_mean;
    for (int N : pairs) {
      const auto& a = G[slot(N)];
      const auto& b = G[slot(2 * N)];
      std::vector<double> d(count);
      for (std::size_t i = 0; i < count; ++i) d[i] = std::abs(b[i] - a[i]);
      const auto est = estimate_mean(d, std::nullopt, r.bootstrap_seed);
      diffs_mean.push_back(est.mean);
      cauchy.add_row({static_cast<long long>(N), static_cast<long long>(2 * N), est.mean, est.std_error});
      for (double e : eps) {
        const auto above = std::count_if(d.begin(), d.end(), [e](double x) { return x > e; });
        measure.add_row({static_cast<long long>(N), static_cast<long long>(2 * N), e, static_cast<double>(above) / n});
      }
    }
    bool decreasing = diffs_mean.size() >= 2;
    for (std::size_t i = 1; i < diffs_mean.size(); ++i) decreasing = decreasing && diffs_mean[i] < diffs_mean[i - 1];
    r.payload["mean_abs_diff"] = diffs_mean;
    r.tables.push_back(std::move(cauchy));
    r.tables.push_back(std::move(measure));
    const bool all_zero = std::all_of(diffs_mean.begin(), diffs_mean.end(), [](double x) { return x == 0.0; });
    r.verdicts.push_back(make_verdict("cauchy_trend", decreasing, diffs_mean.back(), "E|G_2N - G_N| strictly decreasing in N",
                                      all_zero ? "all differences are zero: no sample has positive weight" : ""));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(ExperimentKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> v;
    for (const auto& k : kKindNames) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

const std::vector<ParamSpec>& parameter_specs(ExperimentKind kind) { return spec_table().at(kind); }

ConfigError::ConfigError(std::vector<std::string> violations)
    : PreconditionError(describe_violations(violations)), violations_(std::move(violations)) {}

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("(document): not valid JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"(document): expected a JSON object"});

  std::vector<std::string> errors;
  for (const auto& [key, value] : doc.items()) {
    if (key != "experiment" && key != "parameters") errors.push_back(key + ": unknown key");
  }

  std::optional<ExperimentKind> kind;
  if (!doc.contains("experiment")) {
    errors.push_back("experiment: missing (expected one of " + known_kinds() + ")");
  } else if (!doc["experiment"].is_string()) {
    errors.push_back("experiment: expected a string");
  } else {
    kind = parse_experiment_kind(doc["experiment"].get<std::string>());
    if (!kind) {
      errors.push_back("experiment: unknown experiment '" + doc["experiment"].get<std::string>() + "' (expected one of " +
                       known_kinds() + ")");
    }
  }

  const json given = doc.contains("parameters") ? doc["parameters"] : json::object();
  if (!given.is_object()) errors.push_back("parameters: expected an object");

  ExperimentConfig config;
  if (kind && given.is_object()) {
    config.experiment = *kind;
    const auto& specs = parameter_specs(*kind);
    for (const auto& [key, value] : given.items()) {
      const bool known = std::any_of(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.key == key; });
      if (!known) errors.push_back("parameters." + key + ": unknown key for experiment " + std::string(to_string(*kind)));
    }
    for (const auto& s : specs) {
      const std::string where = "parameters." + s.key;
      config.parameters[s.key] = given.contains(s.key) ? validate_value(s, given[s.key], where, errors) : s.fallback;
    }
    cross_checks(*kind, config.parameters, errors);
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::filesystem::filesystem_error("cannot open configuration", path,
                                            std::make_error_code(std::errc::no_such_file_or_directory));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::uint64_t ExperimentConfig::seed() const { return param(*this, "seed").get<std::uint64_t>(); }
int ExperimentConfig::integer(const std::string& key) const { return param(*this, key).get<int>(); }
double ExperimentConfig::real(const std::string& key) const { return param(*this, key).get<double>(); }
std::optional<double> ExperimentConfig::optional_real(const std::string& key) const {
  const auto& v = param(*this, key);
  return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
}
std::vector<int> ExperimentConfig::integers(const std::string& key) const {
  return param(*this, key).get<std::vector<int>>();
}
std::vector<double> ExperimentConfig::reals(const std::string& key) const {
  return param(*this, key).get<std::vector<double>>();
}
std::string ExperimentConfig::text(const std::string& key) const { return param(*this, key).get<std::string>(); }
bool ExperimentConfig::flag(const std::string& key) const { return param(*this, key).get<bool>(); }

json to_json(const ExperimentConfig& config) {
  return {{"experiment", std::string(to_string(config.experiment))}, {"parameters", config.parameters}};
}

bool RunRecord::pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

RunRecord run(const ExperimentConfig& config, const RunOptions& options) {
  RunRecord r;
  r.config = config;
  r.generator = std::string(kGeneratorName);
  r.normal_transform = std::string(kNormalTransform);
  r.seed = SeedSpec{config.seed(), 0};
  r.bootstrap_seed = bootstrap_seed_for(config.seed());

  const auto start = std::chrono::steady_clock::now();
  const std::string ctx = std::string(to_string(config.experiment)) + ": ";
  try {
    switch (config.experiment) {
      case ExperimentKind::kSample: run_sample(config, options, r); break;
      case ExperimentKind::kFunctionals: run_functionals(config, options, r); break;
      case ExperimentKind::kCauchyRate: run_cauchy_rate(config, options, r); break;
      case ExperimentKind::kChaos: run_chaos(config, options, r); break;
      case ExperimentKind::kTails: run_tails(config, options, r); break;
      case ExperimentKind::kKernelSum: run_kernel_sum(config, options, r); break;
      case ExperimentKind::kFlow: run_flow(config, options, r); break;
      case ExperimentKind::kInvariance: run_invariance(config, options, r); break;
      case ExperimentKind::kGnLp: run_gn_lp(config, options, r); break;
    }
  } catch (const InsufficientDataError& e) {
    throw InsufficientDataError(ctx + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const PreconditionError& e) {
    throw PreconditionError(ctx + e.what());
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  }
  r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

json to_json(const RunRecord& record) {
  json verdicts = json::array();
  for (const auto& v : record.verdicts) {
    verdicts.push_back({{"name", v.name},
                        {"pass", v.pass},
                        {"value", number_json(v.value)},
                        {"limit", v.limit},
                        {"detail", v.detail}});
  }
  json tables = json::array();
  for (const auto& t : record.tables) {
    tables.push_back({{"name", t.name}, {"file", t.name + ".csv"}, {"columns", t.columns}, {"rows", t.rows.size()}});
  }
  return {{"config", to_json(record.config)},
          {"generator", record.generator},
          {"normal_transform", record.normal_transform},
          {"seed", {{"master_seed", record.seed.master_seed},
                    {"stream_index", record.seed.stream_index},
                    {"bootstrap_seed", record.bootstrap_seed}}},
          {"wall_time_seconds", record.wall_time_seconds},
          {"payload", record.payload},
          {"verdicts", verdicts},
          {"pass", record.pass()},
          {"tables", tables}};
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::filesystem::filesystem_error("cannot open for writing", path, std::error_code(errno, std::generic_category()));
  }
  out << content;
  out.close();
  if (!out) {
    throw std::filesystem::filesystem_error("write failed", path, std::error_code(errno, std::generic_category()));
  }
}

}  // namespace

void emit(const RunRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "run.json", to_json(record).dump(2) + "\n");
  for (const auto& t : record.tables) write_file(dir / (t.name + ".csv"), to_csv(t));
}

std::string format_verdicts(const RunRecord& record) {
  std::string out;
  for (const auto& v : record.verdicts) {
    out += (v.pass ? "PASS " : "FAIL ") + v.name + " = " + format_number(v.value) + " (" + v.limit + ")";
    if (!v.detail.empty()) out += " " + v.detail;
    out += '\n';
  }
  return out;
}

}  // namespace gibbs
