// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gibbs/fourier.hpp"

namespace gibbs {

/// Shape of the cutoff profile chi between kappa/2 and kappa.
enum class Ramp {
  kLinear,  ///< straight line from 1 at kappa/2 to 0 at kappa
  kSmooth,  ///< C-infinity transition built from exp(-1/t)
};

/// Cutoff radius, truncation and chi profile of the Gibbs density G_N.
struct DensityParams {
  double kappa = 1.0;
  int band = 1;
  Ramp ramp = Ramp::kLinear;
};

/// M(u) = ||u||_{L^2} by Parseval.
double mass(const FourierCoeffs& u);

/// P(u) = 1/2 int |u|^4 - Im int conj(u) u'. The grid must integrate
/// degree-4 band(u) polynomials exactly.
double momentum(const FourierCoeffs& u, const QuadratureGrid& grid);

/// f_N(u) = Im int conj(w) w' with w = (Pi_N u)^2, evaluated in closed form.
///
/// With w = sum_k w_k e^{ikx}, int conj(w) w' = sum_k conj(w_k) (ik) w_k
/// = i sum_k k |w_k|^2, so f_N(u) = sum_k k |w_k|^2.
double f_quartic(const FourierCoeffs& u, int N);

/// f_N(u) from grid values: w = u_N^2 and w' = 2 u_N u_N' pointwise, then the
/// normalized mean of conj(w) w'. Needs a grid exact for degree 4N.
double f_quadrature_oracle(const FourierCoeffs& u, int N, const QuadratureGrid& grid);

/// H(u) = int |u'|^2 - (3/4) f_{band}(u) + 1/2 int |u|^6. The grid must be
/// exact for degree 6 band(u).
double energy(const FourierCoeffs& u, const QuadratureGrid& grid);

/// Even cutoff: 1 on [0, kappa/2], ramp down to 0 at kappa, 0 beyond.
double chi(double x, const DensityParams& params);

/// G_N(u) = chi(||u_N||) exp((3/4) f_N(u) - 1/2 int |u_N|^6), u_N = Pi_N u.
/// Returns 0 without touching the exponential outside the cutoff; throws
/// NumericalError if the exponent exceeds 700. The grid must be exact for
/// degree 6N.
double density_G(const FourierCoeffs& u, const DensityParams& params, const QuadratureGrid& grid);

/// Exponent (3/4) f_N(u) - 1/2 int |u_N|^6 of the Gibbs density.
double density_exponent(const FourierCoeffs& u, int N, const QuadratureGrid& grid);

/// F_u = 2 Im int u conj(u)' + (3/2) int |u|^4; grid exact for degree 4 band(u).
double gauge_F(const FourierCoeffs& u, const QuadratureGrid& grid);

/// H(u, v) = int u' v' + (3/4) i int v^2 (u^2)' + 1/2 int u^3 v^3 for
/// independent u, v. The grid must be exact for degree 3(band(u) + band(v)).
Complex hamiltonian_H2(const FourierCoeffs& u, const FourierCoeffs& v, const QuadratureGrid& grid);

/// The two alternative forms of H(u, v) obtained by integrating by parts:
/// -int u'' v + ... and -int u v'' - (3/4) i int u^2 (v^2)' + ...
Complex hamiltonian_H2_form2(const FourierCoeffs& u, const FourierCoeffs& v, const QuadratureGrid& grid);
Complex hamiltonian_H2_form3(const FourierCoeffs& u, const FourierCoeffs& v, const QuadratureGrid& grid);

}  // namespace gibbs
