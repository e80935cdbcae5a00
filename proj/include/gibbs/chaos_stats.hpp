// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibbs/fourier.hpp"
#include "gibbs/table.hpp"
#include "json.hpp"

namespace gibbs {

// ---------------------------------------------------------------------------
// Hermite polynomials and Wiener chaos

/// Physicists' Hermite polynomial P_n(x) = (-1)^n e^{x^2} d^n/dx^n e^{-x^2},
/// orthogonal under e^{-x^2}. Throws PreconditionError for n > 30.
double hermite_P(int n, double x);

/// Non-decreasing multi-indices (n_1 <= ... <= n_k) with entries in 1..d, in
/// lexicographic order. The coefficient table of a chaos is aligned with it.
std::vector<std::vector<int>> enumerate_multi_indices(int k, int d);

/// Homogeneous chaos S_k = sum_{A(k,d)} c(n) g_{n_1} ... g_{n_k}.
struct ChaosTable {
  int k = 1;
  int d = 1;
  std::vector<Complex> coeffs;  ///< aligned with enumerate_multi_indices(k, d)
};

/// Evaluates S_k for one vector of Gaussians g_1..g_d (g[0] is g_1).
Complex chaos_value(const ChaosTable& table, std::span<const Complex> g);

struct ChaosRatio {
  double ratio = 0.0;     ///< ||S_k||_p / ||S_k||_2 from the sample
  double std_error = 0.0; ///< delta-method standard error of `ratio`
  double bound = 0.0;     ///< sqrt(k+1) (p-1)^{k/2}
  double lp_norm = 0.0;
  double l2_norm = 0.0;
};

/// Monte Carlo estimate of the L^p / L^2 moment ratio of S_k. Sample i draws
/// g_1..g_d from stream i of `seed`.
ChaosRatio chaos_ratio(const ChaosTable& table, double p, std::size_t sample_count, std::uint64_t seed,
                       unsigned threads = 0);

// ---------------------------------------------------------------------------
// Decomposition of the quartic functional

/// Pieces of int conj(phi_N^2) d/dx(phi_N^2) = S1 + S2 computed from the
/// Gaussians of one draw. S1 sums the quadruples with m_1 in {n_1, n_2}
/// (each quadruple once); S2 the rest. X, Y1, Y2, Y3 are the diagonal and
/// off-diagonal sub-sums, related to S1 by S1 = X/2 + 2(Y1 + Y2 + Y3).
struct FDecomposition {
  Complex S1, S2, X, Y1, Y2, Y3;
};

/// Decomposition for the draw phi_N(seed).
FDecomposition f_decompose(int N, std::uint64_t master_seed, std::uint64_t stream_index = 0);

/// Decomposition for an explicit vector g_{-N}..g_N.
FDecomposition f_decompose(std::span<const Complex> g);

/// X_N = sum_{|n| <= N} 4 i n |g_n|^4 / <n>^4, returned as its imaginary part.
double x_diagonal(std::span<const Complex> g, int N);

// ---------------------------------------------------------------------------
// Cauchy rate

enum class RateMode { kFull, kXOnly };

struct RateFit {
  RateMode mode = RateMode::kFull;
  std::vector<int> bands;
  std::vector<double> values;     ///< ||D_{2N} - D_N||_{L^2} estimates
  std::vector<double> std_errors; ///< delta-method SE of each value
  double slope = 0.0;             ///< least-squares slope of log value vs log N
  double slope_ci_low = 0.0;      ///< 2.5% bootstrap percentile
  double slope_ci_high = 0.0;     ///< 97.5% bootstrap percentile
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
};

/// Difference D_M - D_N evaluated on one draw (the same Gaussians enter both
/// truncations). D is f_N for kFull, X_N for kXOnly. Zero when M == N.
double coupled_difference(const FourierCoeffs& phi, int N, int M, RateMode mode);

/// Estimates ||D_{2N} - D_N||_{L^2(dmu)} for each N in `bands` from coupled
/// draws of phi at band 2 max(bands), fits the log-log slope and a bootstrap
/// CI. Requires >= 2 strictly increasing positive bands and >= 100 samples.
RateFit cauchy_rate(const std::vector<int>& bands, std::size_t sample_count, std::uint64_t seed, RateMode mode,
                    unsigned threads = 0);

/// Slope of the ordinary least-squares line through (log x_i, log y_i).
double loglog_slope(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Tails

inline constexpr std::size_t kMinExceedances = 50;

/// Empirical survival P(X > lambda) and a least-squares fit of
/// log P = intercept + slope * lambda^theta over thresholds with at least
/// kMinExceedances exceedances. The decay rate c of the model
/// log P ~ a - c lambda^theta is -slope.
struct TailFit {
  std::vector<double> lambdas;
  std::vector<double> survival;
  std::vector<std::size_t> exceedances;
  double theta = 1.0;
  double intercept = 0.0;
  double slope = 0.0;
  double rate() const { return -slope; }
  double r_squared = 0.0;
  std::size_t fit_points = 0;
  std::size_t sample_count = 0;  ///< samples that passed the condition
};

/// Fits the survival curve of `values` over `lambdas` (strictly increasing).
/// Throws InsufficientDataError if fewer than kMinExceedances values exceed
/// the smallest lambda or fewer than 3 thresholds are admissible.
TailFit fit_tail(std::span<const double> values, const std::vector<double>& lambdas, double theta);

using Observable = std::function<double(const FourierCoeffs&)>;
using Condition = std::function<bool(const FourierCoeffs&)>;

/// observable(phi_N) for samples i < sample_count of `seed` that satisfy the
/// optional condition, in stream order.
std::vector<double> tail_values(const Observable& observable, int N, std::size_t sample_count,
                                std::uint64_t seed, const Condition& condition = {}, unsigned threads = 0);

TailFit tail_survival(const Observable& observable, int N, const std::vector<double>& lambdas,
                      std::size_t sample_count, std::uint64_t seed, double theta,
                      const Condition& condition = {}, unsigned threads = 0);

/// Largest threshold on `grid` with at least `min_exceedances` values above.
std::optional<double> largest_admissible_lambda(std::span<const double> values, std::span<const double> grid,
                                                std::size_t min_exceedances = kMinExceedances);

// ---------------------------------------------------------------------------
// Deterministic kernel sum

struct KernelSum {
  double sum = 0.0;
  double bound_ratio = 0.0;  ///< sum * N^{3/2 - eps} * <n>^{3/2 + eps}
};

/// sum over n_1 with |n_1| >= N and |n - n_1| >= N of <n_1>^{-2} <n - n_1>^{-2}.
/// Summation stops once the remaining terms are below 1e-15.
KernelSum kernel_tail_sum(int n, int N, double eps);

// ---------------------------------------------------------------------------
// Serialization

std::string to_string(RateMode mode);
void to_json(nlohmann::json& j, const RateFit& fit);
void to_json(nlohmann::json& j, const TailFit& fit);
void to_json(nlohmann::json& j, const ChaosRatio& r);
void to_json(nlohmann::json& j, const FDecomposition& d);

/// Column order: N, M, value, std_error.
Table rate_table(const RateFit& fit, const std::string& name);
/// Column order: lambda, lambda_pow_theta, exceedances, survival, in_fit.
Table survival_table(const TailFit& fit, const std::string& name);

}  // namespace gibbs
