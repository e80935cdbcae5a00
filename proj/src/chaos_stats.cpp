// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include "gibbs/chaos_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "gibbs/error.hpp"
#include "gibbs/functionals.hpp"
#include "gibbs/parallel.hpp"
#include "gibbs/random_field.hpp"

namespace gibbs {

namespace {

constexpr Complex kI{0.0, 1.0};

double bracket_sq(long long n) { return static_cast<double>(n * n + 1); }

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

// ---------------------------------------------------------------------------

double hermite_P(int n, double x) {
  if (n < 0 || n > 30) throw PreconditionError("hermite_P: order must lie in [0, 30], got " + std::to_string(n));
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * x * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<std::vector<int>> enumerate_multi_indices(int k, int d) {
  if (k < 1 || d < 1) throw PreconditionError("enumerate_multi_indices: k and d must be >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> idx(static_cast<std::size_t>(k), 1);
  while (true) {
    out.push_back(idx);
    // Advance to the next non-decreasing tuple in lexicographic order.
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == d) --pos;
    if (pos < 0) break;
    const int v = idx[static_cast<std::size_t>(pos)] + 1;
    for (int q = pos; q < k; ++q) idx[static_cast<std::size_t>(q)] = v;
  }
  return out;
}

namespace {

Complex chaos_value_indexed(const std::vector<std::vector<int>>& indices, std::span<const Complex> coeffs,
                            std::span<const Complex> g) {
  Complex s = 0.0;
  for (std::size_t j = 0; j < indices.size(); ++j) {
    Complex term = coeffs[j];
    for (int n : indices[j]) term *= g[static_cast<std::size_t>(n - 1)];
    s += term;
  }
  return s;
}

void validate_table(const ChaosTable& table, const std::vector<std::vector<int>>& indices) {
  if (table.coeffs.empty()) throw PreconditionError("chaos: empty coefficient table");
  if (table.coeffs.size() != indices.size()) {
    throw PreconditionError("chaos: table has " + std::to_string(table.coeffs.size()) + " coefficients, A(" +
                            std::to_string(table.k) + "," + std::to_string(table.d) + ") has " +
                            std::to_string(indices.size()));
  }
}

}  // namespace

Complex chaos_value(const ChaosTable& table, std::span<const Complex> g) {
  const auto indices = enumerate_multi_indices(table.k, table.d);
  validate_table(table, indices);
  if (g.size() < static_cast<std::size_t>(table.d)) throw PreconditionError("chaos_value: too few Gaussians");
  return chaos_value_indexed(indices, table.coeffs, g);
}

ChaosRatio chaos_ratio(const ChaosTable& table, double p, std::size_t sample_count, std::uint64_t seed,
                       unsigned threads) {
  const auto indices = enumerate_multi_indices(table.k, table.d);
  validate_table(table, indices);
  if (!(p >= 2.0)) throw PreconditionError("chaos_ratio: p must be >= 2");
  if (sample_count < 2) throw PreconditionError("chaos_ratio: need at least 2 samples");

  std::vector<double> abs_p(sample_count);
  std::vector<double> abs_2(sample_count);
  parallel_for(sample_count, threads, [&](std::size_t i) {
    const auto g = sample_gaussian({seed, i}, static_cast<std::size_t>(table.d));
    const double a = std::abs(chaos_value_indexed(indices, table.coeffs, g));
    abs_p[i] = std::pow(a, p);
    abs_2[i] = a * a;
  });

  const auto n = static_cast<double>(sample_count);
  const double A = mean_of(abs_p);
  const double B = mean_of(abs_2);
  if (!(B > 0.0)) throw NumericalError("chaos_ratio: the chaos vanishes on every sample");

  ChaosRatio r;
  r.lp_norm = std::pow(A, 1.0 / p);
  r.l2_norm = std::sqrt(B);
  r.ratio = r.lp_norm / r.l2_norm;
  r.bound = std::sqrt(table.k + 1.0) * std::pow(p - 1.0, 0.5 * table.k);

  // Delta method for R = A^{1/p} B^{-1/2}.
  double var_a = 0.0;
  double var_b = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    var_a += (abs_p[i] - A) * (abs_p[i] - A);
    var_b += (abs_2[i] - B) * (abs_2[i] - B);
    cov += (abs_p[i] - A) * (abs_2[i] - B);
  }
  var_a /= n - 1.0;
  var_b /= n - 1.0;
  cov /= n - 1.0;
  const double ga = r.ratio / (p * A);
  const double gb = -r.ratio / (2.0 * B);
  r.std_error = std::sqrt(std::max(0.0, (ga * ga * var_a + gb * gb * var_b + 2.0 * ga * gb * cov) / n));
  return r;
}

// ---------------------------------------------------------------------------

FDecomposition f_decompose(std::span<const Complex> g) {
  if (g.size() % 2 == 0) throw PreconditionError("f_decompose: expected 2N+1 Gaussians");
  const int N = static_cast<int>(g.size() / 2);
  auto gi = [&](int n) { return g[static_cast<std::size_t>(n + N)]; };

  std::vector<Complex> a(g.size());
  for (int n = -N; n <= N; ++n) a[static_cast<std::size_t>(n + N)] = gi(n) / japanese_bracket(n);
  auto ai = [&](int n) { return a[static_cast<std::size_t>(n + N)]; };

  FDecomposition d{};
  // Enumerate A_N once, routing each quadruple to S1 or S2.
  for (int m1 = -N; m1 <= N; ++m1) {
    for (int m2 = -N; m2 <= N; ++m2) {
      const Complex am = ai(m1) * ai(m2);
      for (int n1 = -N; n1 <= N; ++n1) {
        const int n2 = m1 + m2 - n1;
        if (n2 < -N || n2 > N) continue;
        const Complex term = kI * static_cast<double>(n1 + n2) * am * std::conj(ai(n1)) * std::conj(ai(n2));
        if (m1 == n1 || m1 == n2) {
          d.S1 += term;
        } else {
          d.S2 += term;
        }
      }
    }
  }

  for (int n = -N; n <= N; ++n) {
    const double q = std::norm(gi(n));
    d.X += 4.0 * kI * static_cast<double>(n) * q * q / (bracket_sq(n) * bracket_sq(n));
  }

  for (int n1 = -N; n1 <= N; ++n1) {
    for (int n2 = -N; n2 <= N; ++n2) {
      if (n1 == n2) continue;
      const double w = bracket_sq(n1) * bracket_sq(n2);
      const Complex factor = kI * static_cast<double>(n1 + n2) / w;
      const double G1 = std::norm(gi(n1)) - 1.0;
      const double G2 = std::norm(gi(n2)) - 1.0;
      d.Y1 += factor * (G1 * G2);
      d.Y2 += factor * (G1 + G2);
      // The reflected index pair carries the same weight and the opposite
      // sign, so each pair contributes exactly zero.
      const Complex reflected = kI * static_cast<double>(-n1 - n2) / (bracket_sq(-n1) * bracket_sq(-n2));
      d.Y3 += 0.5 * (factor + reflected);
    }
  }
  return d;
}

FDecomposition f_decompose(int N, std::uint64_t master_seed, std::uint64_t stream_index) {
  if (N < 0) throw PreconditionError("f_decompose: N must be non-negative");
  return f_decompose(gaussians_of(sample_phi(N, {master_seed, stream_index})));
}

double x_diagonal(std::span<const Complex> g, int N) {
  const int band = static_cast<int>(g.size() / 2);
  if (N > band) throw PreconditionError("x_diagonal: N exceeds the available Gaussians");
  double x = 0.0;
  for (int n = -N; n <= N; ++n) {
    const double q = std::norm(g[static_cast<std::size_t>(n + band)]);
    x += 4.0 * n * q * q / (bracket_sq(n) * bracket_sq(n));
  }
  return x;
}

// ---------------------------------------------------------------------------

double coupled_difference(const FourierCoeffs& phi, int N, int M, RateMode mode) {
  if (N < 0 || M < 0 || std::max(N, M) > phi.band()) {
    throw PreconditionError("coupled_difference: truncations must lie within the sample band");
  }
  if (M == N) return 0.0;
  if (mode == RateMode::kFull) return f_quartic(phi, M) - f_quartic(phi, N);
  const auto g = gaussians_of(phi);
  return x_diagonal(g, M) - x_diagonal(g, N);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("loglog_slope: need >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

double percentile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(xs.size() - 1, lo + 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace

RateFit cauchy_rate(const std::vector<int>& bands, std::size_t sample_count, std::uint64_t seed, RateMode mode,
                    unsigned threads) {
  if (bands.size() < 2) throw PreconditionError("cauchy_rate: need at least 2 bands");
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (bands[b] < 1) throw PreconditionError("cauchy_rate: bands must be positive");
    if (b > 0 && bands[b] <= bands[b - 1]) throw PreconditionError("cauchy_rate: bands must be strictly increasing");
  }
  if (sample_count < 100) {
    throw PreconditionError("cauchy_rate: sample_count " + std::to_string(sample_count) + " is below the minimum 100");
  }

  const int top = 2 * bands.back();
  const std::size_t B = bands.size();
  // sq[b * count + i] = (D_{2N_b} - D_{N_b})^2 on draw i.
  std::vector<double> sq(B * sample_count);
  parallel_for(sample_count, threads, [&](std::size_t i) {
    const auto phi = sample_phi(top, {seed, i});
    std::map<int, double> cache;
    const auto g = mode == RateMode::kXOnly ? gaussians_of(phi) : std::vector<Complex>{};
    auto value = [&](int n) {
      auto it = cache.find(n);
      if (it != cache.end()) return it->second;
      const double v = mode == RateMode::kFull ? f_quartic(phi, n) : x_diagonal(g, n);
      cache.emplace(n, v);
      return v;
    };
    for (std::size_t b = 0; b < B; ++b) {
      const double diff = value(2 * bands[b]) - value(bands[b]);
      sq[b * sample_count + i] = diff * diff;
    }
  });

  RateFit fit;
  fit.mode = mode;
  fit.bands = bands;
  fit.sample_count = sample_count;
  fit.seed = seed;
  std::vector<double> x(bands.begin(), bands.end());
  for (std::size_t b = 0; b < B; ++b) {
    const std::span<const double> col(sq.data() + b * sample_count, sample_count);
    const Estimate e = estimate_mean(col, std::nullopt, 0);
    const double norm = std::sqrt(e.mean);
    fit.values.push_back(norm);
    fit.std_errors.push_back(norm > 0.0 ? e.std_error / (2.0 * norm) : 0.0);
  }
  fit.slope = loglog_slope(x, fit.values);

  // Bootstrap over draws: every band shares the resampled index set so the
  // coupling between bands is preserved.
  const std::uint64_t boot_seed = bootstrap_seed_for(seed);
  std::vector<double> slopes;
  slopes.reserve(kBootstrapResamples);
  std::vector<double> boot_values(B);
  for (int r = 0; r < kBootstrapResamples; ++r) {
    std::vector<double> sums(B, 0.0);
    for (std::size_t k = 0; k < sample_count; ++k) {
      const auto idx = std::min(sample_count - 1, static_cast<std::size_t>(uniform_draw({boot_seed, static_cast<std::uint64_t>(r)}, k, 0) *
                                                                           static_cast<double>(sample_count)));
      for (std::size_t b = 0; b < B; ++b) sums[b] += sq[b * sample_count + idx];
    }
    bool positive = true;
    for (std::size_t b = 0; b < B; ++b) {
      boot_values[b] = std::sqrt(sums[b] / static_cast<double>(sample_count));
      positive = positive && boot_values[b] > 0.0;
    }
    if (positive) slopes.push_back(loglog_slope(x, boot_values));
  }
  if (slopes.size() >= 2) {
    fit.slope_ci_low = percentile(slopes, 0.025);
    fit.slope_ci_high = percentile(slopes, 0.975);
  } else {
    fit.slope_ci_low = -kInfinity;
    fit.slope_ci_high = kInfinity;
  }
  return fit;
}

// ---------------------------------------------------------------------------

TailFit fit_tail(std::span<const double> values, const std::vector<double>& lambdas, double theta) {
  if (lambdas.empty()) throw PreconditionError("fit_tail: empty threshold grid");
  if (!(theta > 0.0)) throw PreconditionError("fit_tail: theta must be positive");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!std::isfinite(lambdas[k])) throw PreconditionError("fit_tail: thresholds must be finite");
    if (k > 0 && lambdas[k] <= lambdas[k - 1]) throw PreconditionError("fit_tail: thresholds must be increasing");
  }
  if (theta != std::floor(theta) && lambdas.front() < 0.0) {
    throw PreconditionError("fit_tail: fractional theta needs non-negative thresholds");
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();

  TailFit fit;
  fit.theta = theta;
  fit.lambdas = lambdas;
  fit.sample_count = n;
  for (double lambda : lambdas) {
    const auto above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), lambda));
    fit.exceedances.push_back(above);
    fit.survival.push_back(n == 0 ? 0.0 : static_cast<double>(above) / static_cast<double>(n));
  }
  if (fit.exceedances.front() < kMinExceedances) {
    throw InsufficientDataError("fit_tail: only " + std::to_string(fit.exceedances.front()) + " of " +
                                std::to_string(n) + " samples exceed the smallest threshold (need " +
                                std::to_string(kMinExceedances) + ")");
  }

  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 0; k < lambdas.size() && fit.exceedances[k] >= kMinExceedances; ++k) {
    xs.push_back(std::pow(lambdas[k], theta));
    ys.push_back(std::log(fit.survival[k]));
  }
  fit.fit_points = xs.size();
  if (xs.size() < 3) {
    throw InsufficientDataError("fit_tail: only " + std::to_string(xs.size()) +
                                " thresholds have enough exceedances (need 3)");
  }

  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (fit.intercept + fit.slope * xs[k]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 0.0;
  return fit;
}

std::vector<double> tail_values(const Observable& observable, int N, std::size_t sample_count,
                                std::uint64_t seed, const Condition& condition, unsigned threads) {
  if (N < 0) throw PreconditionError("tail_values: N must be non-negative");
  std::vector<double> raw(sample_count);
  std::vector<char> keep(sample_count, 1);
  parallel_for(sample_count, threads, [&](std::size_t i) {
    const auto phi = sample_phi(N, {seed, i});
    if (condition && !condition(phi)) {
      keep[i] = 0;
      return;
    }
    raw[i] = observable(phi);
  });
  std::vector<double> out;
  out.reserve(sample_count);
  for (std::size_t i = 0; i < sample_count; ++i) {
    if (keep[i]) out.push_back(raw[i]);
  }
  return out;
}

TailFit tail_survival(const Observable& observable, int N, const std::vector<double>& lambdas,
                      std::size_t sample_count, std::uint64_t seed, double theta, const Condition& condition,
                      unsigned threads) {
  const auto values = tail_values(observable, N, sample_count, seed, condition, threads);
  return fit_tail(values, lambdas, theta);
}

std::optional<double> largest_admissible_lambda(std::span<const double> values, std::span<const double> grid,
                                                std::size_t min_exceedances) {
  std::optional<double> best;
  for (double lambda : grid) {
    const auto above = static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [&](double v) { return v > lambda; }));
    if (above >= min_exceedances && (!best || lambda > *best)) best = lambda;
  }
  return best;
}

// ---------------------------------------------------------------------------

KernelSum kernel_tail_sum(int n, int N, double eps) {
  if (N < 1) throw PreconditionError("kernel_tail_sum: N must be >= 1");
  if (!(eps > 0.0 && eps <= 0.5)) throw PreconditionError("kernel_tail_sum: eps must lie in (0, 1/2]");

  const long long nn = n;
  const long long NN = N;
  auto admissible = [&](long long j) { return std::llabs(j) >= NN && std::llabs(nn - j) >= NN; };
  auto term = [&](long long j) { return admissible(j) ? 1.0 / (bracket_sq(j) * bracket_sq(nn - j)) : 0.0; };

  constexpr double kTermFloor = 1e-15;
  long long K = std::llabs(nn) + NN + 1;
  while (1.0 / (bracket_sq(K) * bracket_sq(nn - K)) >= kTermFloor ||
         1.0 / (bracket_sq(-K) * bracket_sq(nn + K)) >= kTermFloor) {
    ++K;
  }
  // Smallest terms first; j and -j are added as a pair so that the result is
  // bitwise symmetric under n -> -n.
  double sum = 0.0;
  for (long long k = K; k >= 1; --k) sum += term(k) + term(-k);
  sum += term(0);

  const double ratio = sum * std::pow(static_cast<double>(N), 1.5 - eps) * std::pow(japanese_bracket(n), 1.5 + eps);
  return {sum, ratio};
}

// ---------------------------------------------------------------------------

std::string to_string(RateMode mode) { return mode == RateMode::kFull ? "f_full" : "X_only"; }

void to_json(nlohmann::json& j, const RateFit& fit) {
  j = nlohmann::json{{"mode", to_string(fit.mode)},
                     {"bands", fit.bands},
                     {"values", nlohmann::json::array()},
                     {"std_errors", nlohmann::json::array()},
                     {"slope", number_json(fit.slope)},
                     {"slope_ci", {number_json(fit.slope_ci_low), number_json(fit.slope_ci_high)}},
                     {"sample_count", fit.sample_count},
                     {"seed", fit.seed}};
  for (double v : fit.values) j["values"].push_back(number_json(v));
  for (double v : fit.std_errors) j["std_errors"].push_back(number_json(v));
}

void to_json(nlohmann::json& j, const TailFit& fit) {
  j = nlohmann::json{{"theta", fit.theta},
                     {"lambdas", nlohmann::json::array()},
                     {"survival", nlohmann::json::array()},
                     {"exceedances", fit.exceedances},
                     {"intercept", number_json(fit.intercept)},
                     {"slope", number_json(fit.slope)},
                     {"rate", number_json(fit.rate())},
                     {"r_squared", number_json(fit.r_squared)},
                     {"fit_points", fit.fit_points},
                     {"sample_count", fit.sample_count}};
  for (double v : fit.lambdas) j["lambdas"].push_back(number_json(v));
  for (double v : fit.survival) j["survival"].push_back(number_json(v));
}

void to_json(nlohmann::json& j, const ChaosRatio& r) {
  j = nlohmann::json{{"ratio", number_json(r.ratio)},
                     {"std_error", number_json(r.std_error)},
                     {"bound", number_json(r.bound)},
                     {"lp_norm", number_json(r.lp_norm)},
                     {"l2_norm", number_json(r.l2_norm)}};
}

void to_json(nlohmann::json& j, const FDecomposition& d) {
  auto c = [](Complex z) { return nlohmann::json{number_json(z.real()), number_json(z.imag())}; };
  j = nlohmann::json{{"S1", c(d.S1)}, {"S2", c(d.S2)}, {"X", c(d.X)},
                     {"Y1", c(d.Y1)}, {"Y2", c(d.Y2)}, {"Y3", c(d.Y3)}};
}

Table rate_table(const RateFit& fit, const std::string& name) {
  Table t{name, {"N", "M", "value", "std_error"}, {}};
  for (std::size_t b = 0; b < fit.bands.size(); ++b) {
    t.add_row({static_cast<long long>(fit.bands[b]), static_cast<long long>(2 * fit.bands[b]), fit.values[b],
               fit.std_errors[b]});
  }
  return t;
}

Table survival_table(const TailFit& fit, const std::string& name) {
  Table t{name, {"lambda", "lambda_pow_theta", "exceedances", "survival", "in_fit"}, {}};
  for (std::size_t k = 0; k < fit.lambdas.size(); ++k) {
    t.add_row({fit.lambdas[k], std::pow(fit.lambdas[k], fit.theta), static_cast<long long>(fit.exceedances[k]),
               fit.survival[k], static_cast<long long>(k < fit.fit_points ? 1 : 0)});
  }
  return t;
}

}  // namespace gibbs
