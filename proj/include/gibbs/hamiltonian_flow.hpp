// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gibbs/fourier.hpp"
#include "gibbs/functionals.hpp"
#include "gibbs/random_field.hpp"
#include "gibbs/table.hpp"
#include "json.hpp"

namespace gibbs {

/// A point (u, v) of the doubled phase space; v = conj(u) on the real slice.
struct FlowPair {
  FourierCoeffs u;
  FourierCoeffs v;
};

/// (mass, energy of Pi_N u, F_u) recorded at each stored time.
struct FlowInvariants {
  double mass = 0.0;
  double energy = 0.0;
  double gauge_F = 0.0;
};

struct FlowState {
  FourierCoeffs u;
  double t = 0.0;
  FlowInvariants invariants;
};

using Trajectory = std::vector<FlowState>;

enum class Scheme { kRK4 };

struct IntegratorConfig {
  double step = 1e-3;
  Scheme scheme = Scheme::kRK4;
  double max_drift = 1e-6;     ///< allowed |mass(t) - mass(0)| before evolve aborts
  std::size_t record_every = 1;  ///< store every k-th step (the final state is always stored)
};

// ---------------------------------------------------------------------------
// Hamiltonian structure

/// (dH/du, dH/dv) of H(u, v), evaluated exactly in coefficient space:
///   dH/du = -v'' - (3/2) i u (v^2)' + (3/2) u^2 v^3
///   dH/dv = -u'' + (3/2) i v (u^2)' + (3/2) u^3 v^2
/// Both outputs have band 5 max(band u, band v).
FlowPair variational_derivatives(const FourierCoeffs& u, const FourierCoeffs& v);

/// (z1, z2) = K(u, v)(w1, w2) with
///   z1 = -u D(u w1) - i w2 + u D(v w2)
///   z2 =  i w1 + v D(u w1) - v D(v w2),   D the mean-free antiderivative.
FlowPair apply_K(const FourierCoeffs& u, const FourierCoeffs& v, const FourierCoeffs& w1, const FourierCoeffs& w2);

/// Truncated vector field Pi_N K(u_N, v_N) Pi_N grad H(u_N, v_N) in the
/// independent coordinates. Both components have band N.
FlowPair rhs_pair(const FourierCoeffs& u, const FourierCoeffs& v, int N);

/// First component of rhs_pair on the real slice v = conj(u).
FourierCoeffs rhs_hamiltonian(const FourierCoeffs& u, int N);

/// The closed-form truncated equation assembled term by term,
///   d_t u = i u'' + Pi_N (|u|^2 u)' - i u F_u - i R_N(u),
///   R_N = (3/2) B_cubic + (3/2) i B_quintic,
/// where B_cubic = Pi_N(u D[u Q(u (conj u^2)') + conj u Q(conj u (u^2)')])
/// and B_quintic = Pi_N(u D[u Q(|u|^4 conj u) - conj u Q(|u|^4 u)]) with
/// Q = 1 - Pi_N. Compared coefficientwise against rhs_hamiltonian.
struct RhsExpansion {
  FourierCoeffs reference;  ///< rhs_hamiltonian
  FourierCoeffs expanded;   ///< closed form above
  FourierCoeffs remainder;  ///< R_N
  FourierCoeffs linear;     ///< i u''
  FourierCoeffs cubic;      ///< Pi_N (|u|^2 u)'
  FourierCoeffs gauge;      ///< -i u F_u
  FourierCoeffs bracket_cubic;
  FourierCoeffs bracket_quintic;
  double discrepancy = 0.0;      ///< max_n |expanded_n - reference_n|
  double reference_scale = 0.0;  ///< max_n |reference_n|
  /// Least-squares a, b in reference - (linear + cubic + gauge) = a B_cubic + b B_quintic.
  /// The closed form predicts a = -(3/2) i and b = 3/2. NaN when the brackets vanish.
  Complex fitted_cubic = 0.0;
  Complex fitted_quintic = 0.0;
  double fit_residual = 0.0;
};

RhsExpansion rhs_expanded(const FourierCoeffs& u, int N);

/// Column order: n, reference_re, reference_im, expanded_re, expanded_im, abs_diff, remainder_re, remainder_im.
Table rhs_comparison_table(const RhsExpansion& e, const std::string& name);

// ---------------------------------------------------------------------------
// Time integration

/// Grid exact for the sextic term of the energy at band N.
QuadratureGrid invariant_grid(int N);

FlowInvariants measure_invariants(const FourierCoeffs& u, int N);

/// One classical RK4 step of length h (may be negative) on rhs_hamiltonian.
/// Throws NumericalError if the new state is not finite.
FlowState step(const FlowState& state, int N, double h);
FlowState step(const FlowState& state, int N, const IntegratorConfig& config);

/// Integrates from Pi_N u0 over [0, T] (T may be negative) with
/// n = ceil(|T| / step) equal steps. Throws NumericalError naming the time at
/// which the mass drift first exceeds config.max_drift.
Trajectory evolve(const FourierCoeffs& u0, int N, double T, const IntegratorConfig& config);

/// The same integration applied to the pair form (u, v), without imposing v = conj(u).
FlowPair evolve_pair(const FlowPair& start, int N, double T, double step);

/// v(t) = exp(i int_0^t F_u) u(t), phase integral by the trapezoidal rule
/// over the stored times. Invariants are recomputed on v.
Trajectory gauge_transform(const Trajectory& traj);

/// Column order: t, mass, energy, F_u.
Table trajectory_table(const Trajectory& traj, const std::string& name);

/// One JSON object {"t", "u"} per line for every `every`-th state (and the last).
void write_snapshots(const Trajectory& traj, const std::filesystem::path& path, std::size_t every);

// ---------------------------------------------------------------------------
// Invariance of the weighted Gibbs measure

struct NamedObservable {
  std::string name;
  std::function<double(const FourierCoeffs&)> fn;
};

/// {L4_fourth, re_c1, dx_L2_squared, f_N} evaluated at band N.
std::vector<NamedObservable> standard_observables(int N);

struct ObservableShift {
  std::string name;
  Estimate before;
  Estimate after;
  double difference = 0.0;
  double combined_se = 0.0;
  bool pass = false;  ///< |difference| <= 3 combined_se
};

struct InvarianceReport {
  int N = 0;
  DensityParams params;
  double t = 0.0;
  std::size_t count = 0;
  std::size_t evolved = 0;  ///< samples with nonzero weight
  std::uint64_t seed = 0;
  double ess = 0.0;
  double max_mass_drift = 0.0;
  std::vector<ObservableShift> shifts;
  bool pass() const;
};

/// Samples mu_N, weights by G_N, evolves the weighted samples to time t and
/// compares self-normalized means before and after. Throws
/// InsufficientDataError when the effective sample size is below 100.
InvarianceReport invariance_experiment(int N, const DensityParams& params, double t, std::size_t count,
                                       std::uint64_t seed, const std::vector<NamedObservable>& observables,
                                       const IntegratorConfig& config, unsigned threads = 0);

inline constexpr double kMinEffectiveSampleSize = 100.0;

void to_json(nlohmann::json& j, const InvarianceReport& r);
void to_json(nlohmann::json& j, const RhsExpansion& e);

}  // namespace gibbs
