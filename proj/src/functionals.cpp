// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include "gibbs/functionals.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "gibbs/error.hpp"

namespace gibbs {

namespace {

void require_exact(const QuadratureGrid& grid, int degree, const char* what) {
  if (grid.size() < static_cast<std::size_t>(degree) + 1) {
    throw PreconditionError(std::string(what) + ": grid of " + std::to_string(grid.size()) +
                            " nodes is not exact for degree " + std::to_string(degree));
  }
}

double smooth_step(double t) {
  // 1 at t <= 0, 0 at t >= 1, C-infinity in between.
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - t));
  const double b = std::exp(-1.0 / t);
  return a / (a + b);
}

// Normalized integral of |u|^p over grid values for even integer p.
double mean_abs_power(const std::vector<Complex>& values, int half_power) {
  double sum = 0.0;
  for (const auto& v : values) {
    const double sq = std::norm(v);
    double term = 1.0;
    for (int k = 0; k < half_power; ++k) term *= sq;
    sum += term;
  }
  return sum / static_cast<double>(values.size());
}

}  // namespace

double mass(const FourierCoeffs& u) { return l2_norm(u); }

double momentum(const FourierCoeffs& u, const QuadratureGrid& grid) {
  require_exact(grid, 4 * u.band(), "momentum");
  const auto values = grid.evaluate(u);
  const auto dvalues = grid.evaluate_derivative(u);
  std::vector<Complex> integrand(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) integrand[j] = std::conj(values[j]) * dvalues[j];
  return 0.5 * mean_abs_power(values, 2) - QuadratureGrid::mean(integrand).imag();
}

double f_quartic(const FourierCoeffs& u, int N) {
  const auto uN = project(u, N);
  const auto w = multiply(uN, uN);
  double f = 0.0;
  for (int k = -w.band(); k <= w.band(); ++k) f += k * std::norm(w[k]);
  return f;
}

double f_quadrature_oracle(const FourierCoeffs& u, int N, const QuadratureGrid& grid) {
  require_exact(grid, 4 * N, "f_quadrature_oracle");
  const auto uN = project(u, N);
  const auto values = grid.evaluate(uN);
  const auto dvalues = grid.evaluate_derivative(uN);
  std::vector<Complex> integrand(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    const Complex w = values[j] * values[j];
    const Complex dw = 2.0 * values[j] * dvalues[j];
    integrand[j] = std::conj(w) * dw;
  }
  return QuadratureGrid::mean(integrand).imag();
}

double energy(const FourierCoeffs& u, const QuadratureGrid& grid) {
  require_exact(grid, 6 * u.band(), "energy");
  double kinetic = 0.0;
  for (int n = -u.band(); n <= u.band(); ++n) kinetic += static_cast<double>(n) * n * std::norm(u[n]);
  const double sextic = mean_abs_power(grid.evaluate(u), 3);
  return kinetic - 0.75 * f_quartic(u, u.band()) + 0.5 * sextic;
}

double chi(double x, const DensityParams& params) {
  const double r = std::abs(x);
  const double half = 0.5 * params.kappa;
  if (r <= half) return 1.0;
  if (r >= params.kappa) return 0.0;
  const double t = (r - half) / half;
  return params.ramp == Ramp::kLinear ? 1.0 - t : smooth_step(t);
}

double density_exponent(const FourierCoeffs& u, int N, const QuadratureGrid& grid) {
  require_exact(grid, 6 * N, "density_G");
  const auto uN = project(u, N);
  return 0.75 * f_quartic(uN, N) - 0.5 * mean_abs_power(grid.evaluate(uN), 3);
}

double density_G(const FourierCoeffs& u, const DensityParams& params, const QuadratureGrid& grid) {
  if (!(params.kappa > 0.0)) throw PreconditionError("density_G: kappa must be positive");
  const double cutoff = chi(l2_norm(project(u, params.band)), params);
  if (cutoff == 0.0) return 0.0;
  const double exponent = density_exponent(u, params.band, grid);
  if (exponent > 700.0) {
    throw NumericalError("density_G: exponent " + std::to_string(exponent) + " would overflow");
  }
  return cutoff * std::exp(exponent);
}

double gauge_F(const FourierCoeffs& u, const QuadratureGrid& grid) {
  require_exact(grid, 4 * u.band(), "gauge_F");
  const auto values = grid.evaluate(u);
  const auto dconj = grid.evaluate_derivative(conjugate(u));
  std::vector<Complex> integrand(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) integrand[j] = values[j] * dconj[j];
  return 2.0 * QuadratureGrid::mean(integrand).imag() + 1.5 * mean_abs_power(values, 2);
}

namespace {

struct PairGridValues {
  std::vector<Complex> u, v, du, dv;
};

PairGridValues pair_values(const FourierCoeffs& u, const FourierCoeffs& v, const QuadratureGrid& grid) {
  require_exact(grid, 3 * (u.band() + v.band()), "hamiltonian_H2");
  return {grid.evaluate(u), grid.evaluate(v), grid.evaluate_derivative(u), grid.evaluate_derivative(v)};
}

}  // namespace

Complex hamiltonian_H2(const FourierCoeffs& u, const FourierCoeffs& v, const QuadratureGrid& grid) {
  const auto g = pair_values(u, v, grid);
  const Complex I{0.0, 1.0};
  std::vector<Complex> integrand(g.u.size());
  for (std::size_t j = 0; j < integrand.size(); ++j) {
    const Complex d_u2 = 2.0 * g.u[j] * g.du[j];
    const Complex uv = g.u[j] * g.v[j];
    integrand[j] = g.du[j] * g.dv[j] + 0.75 * I * g.v[j] * g.v[j] * d_u2 + 0.5 * uv * uv * uv;
  }
  return QuadratureGrid::mean(integrand);
}

Complex hamiltonian_H2_form2(const FourierCoeffs& u, const FourierCoeffs& v, const QuadratureGrid& grid) {
  const auto g = pair_values(u, v, grid);
  const auto d2u = grid.evaluate(derivative(derivative(u)));
  const Complex I{0.0, 1.0};
  std::vector<Complex> integrand(g.u.size());
  for (std::size_t j = 0; j < integrand.size(); ++j) {
    const Complex d_u2 = 2.0 * g.u[j] * g.du[j];
    const Complex uv = g.u[j] * g.v[j];
    integrand[j] = -d2u[j] * g.v[j] + 0.75 * I * g.v[j] * g.v[j] * d_u2 + 0.5 * uv * uv * uv;
  }
  return QuadratureGrid::mean(integrand);
}

Complex hamiltonian_H2_form3(const FourierCoeffs& u, const FourierCoeffs& v, const QuadratureGrid& grid) {
  const auto g = pair_values(u, v, grid);
  const auto d2v = grid.evaluate(derivative(derivative(v)));
  const Complex I{0.0, 1.0};
  std::vector<Complex> integrand(g.u.size());
  for (std::size_t j = 0; j < integrand.size(); ++j) {
    const Complex d_v2 = 2.0 * g.v[j] * g.dv[j];
    const Complex uv = g.u[j] * g.v[j];
    integrand[j] = -g.u[j] * d2v[j] - 0.75 * I * g.u[j] * g.u[j] * d_v2 + 0.5 * uv * uv * uv;
  }
  return QuadratureGrid::mean(integrand);
}

}  // namespace gibbs
