// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "json.hpp"

namespace gibbs {

using Complex = std::complex<double>;

/// Japanese bracket <n> = sqrt(n^2 + 1).
inline double japanese_bracket(double n) { return std::sqrt(n * n + 1.0); }

/// Complex Fourier coefficients c_n, n in [-band, band], of a trigonometric
/// polynomial u(x) = sum_n c_n e^{inx} on the circle.
///
/// Reading a mode outside the band yields zero, so values with different bands
/// compare equal when they agree on the union band.
class FourierCoeffs {
 public:
  /// The zero polynomial with band 0.
  FourierCoeffs() : coeffs_(1, Complex{}) {}

  /// The zero polynomial with the given band.
  explicit FourierCoeffs(int band);

  /// Takes ownership of 2*band+1 coefficients ordered n = -band..band.
  /// Throws PreconditionError on size mismatch or non-finite entries.
  FourierCoeffs(int band, std::vector<Complex> coeffs);

  /// value * e^{inx}.
  static FourierCoeffs mode(int n, Complex value = 1.0);

  int band() const { return band_; }

  /// Coefficient of e^{inx}; zero outside the band.
  Complex operator[](int n) const {
    return (n < -band_ || n > band_) ? Complex{} : coeffs_[index(n)];
  }

  /// Sets a coefficient inside the band. Rejects non-finite values.
  void set(int n, Complex value);

  std::span<const Complex> coeffs() const { return coeffs_; }

  bool is_finite() const;

  FourierCoeffs& operator+=(const FourierCoeffs& other);
  FourierCoeffs& operator-=(const FourierCoeffs& other);
  FourierCoeffs& operator*=(Complex scalar);

  friend bool operator==(const FourierCoeffs& a, const FourierCoeffs& b);

 private:
  std::size_t index(int n) const { return static_cast<std::size_t>(n + band_); }

  int band_ = 0;
  std::vector<Complex> coeffs_;
};

FourierCoeffs operator+(FourierCoeffs a, const FourierCoeffs& b);
FourierCoeffs operator-(FourierCoeffs a, const FourierCoeffs& b);
FourierCoeffs operator*(Complex scalar, FourierCoeffs u);
FourierCoeffs operator-(FourierCoeffs u);

/// Largest coefficientwise modulus of a - b over the union band.
double max_abs_difference(const FourierCoeffs& a, const FourierCoeffs& b);

/// Largest coefficient modulus.
double max_abs(const FourierCoeffs& u);

/// Equispaced trapezoidal nodes x_j = 2 pi j / M on [0, 2 pi).
///
/// The mean over nodes integrates e^{ikx} exactly (in exact arithmetic) for
/// |k| < M, so any trigonometric polynomial of degree d is integrated exactly
/// once M >= d + 1. The root table is shared between copies.
class QuadratureGrid {
 public:
  explicit QuadratureGrid(std::size_t points);

  /// Smallest grid that integrates degree-d polynomials exactly.
  static QuadratureGrid exact_for_degree(int degree);

  /// Default grid for sup norms and non-even L^p norms: M = 8 band + 8.
  static QuadratureGrid oversampled(int band);

  std::size_t size() const { return points_; }
  double node(std::size_t j) const;

  /// u(x_j) for every node.
  std::vector<Complex> evaluate(const FourierCoeffs& u) const;

  /// (d/dx u)(x_j) for every node, using the coefficients i n c_n.
  std::vector<Complex> evaluate_derivative(const FourierCoeffs& u) const;

  /// Normalized integral (1/M) sum_j f_j.
  static Complex mean(std::span<const Complex> values);

  /// Discrete Fourier coefficients of grid values, keeping |k| <= band.
  /// Exact re-transformation when the sampled function has degree < M - band.
  FourierCoeffs to_coeffs(std::span<const Complex> values, int band) const;

 private:
  Complex root(long long k) const;

  std::size_t points_;
  std::shared_ptr<const std::vector<Complex>> roots_;
};

/// Pi_M u: keeps |n| <= M; the result has band M.
FourierCoeffs project(const FourierCoeffs& u, int M);

/// (1 - Pi_M) u, with the band of u.
FourierCoeffs project_complement(const FourierCoeffs& u, int M);

/// Sets c_0 to zero.
FourierCoeffs zero_mean(const FourierCoeffs& u);

/// c_n -> i n c_n.
FourierCoeffs derivative(const FourierCoeffs& u);

/// Mean-zero antiderivative: c_n -> c_n / (i n) for n != 0, c_0 -> 0.
FourierCoeffs antiderivative(const FourierCoeffs& u);

/// Exact product by dense convolution; band(uv) = band(u) + band(v).
FourierCoeffs multiply(const FourierCoeffs& u, const FourierCoeffs& v);

/// Coefficients of the complex conjugate function: c_n -> conj(c_{-n}).
FourierCoeffs conjugate(const FourierCoeffs& u);

/// Parity x -> -x: c_n -> c_{-n}.
FourierCoeffs reflect(const FourierCoeffs& u);

/// Normalized mean (1/2pi) int u = c_0.
inline Complex integral(const FourierCoeffs& u) { return u[0]; }

/// <f, g> = (1/2pi) int f conj(g) = sum_n f_n conj(g_n).
Complex inner_product_hermitian(const FourierCoeffs& f, const FourierCoeffs& g);

/// (1/2pi) int f g = sum_n f_n g_{-n}; no conjugation.
Complex pairing_bilinear(const FourierCoeffs& f, const FourierCoeffs& g);

/// Normalized L^p norm on the grid. For even integer p the grid must satisfy
/// M > p band(u) and the result is exact; otherwise (including p = infinity)
/// M must be at least the oversampling floor 8 band + 8, and the sup norm is
/// the grid maximum. Throws PreconditionError for p < 1 or a too coarse grid.
double lp_norm(const FourierCoeffs& u, double p, const QuadratureGrid& grid);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// (sum_n <n>^{2 sigma} |c_n|^2)^{1/2}.
double sobolev_norm(const FourierCoeffs& u, double sigma);

/// Parseval L^2 norm (sum |c_n|^2)^{1/2}.
double l2_norm(const FourierCoeffs& u);

void to_json(nlohmann::json& j, const FourierCoeffs& u);
void from_json(const nlohmann::json& j, FourierCoeffs& u);

}  // namespace gibbs
