// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include "gibbs/hamiltonian_flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gibbs/error.hpp"
#include "gibbs/parallel.hpp"

namespace gibbs {

namespace {

constexpr Complex kI{0.0, 1.0};

std::string time_string(double t) {
  std::ostringstream os;
  os.precision(17);
  os << t;
  return os.str();
}

}  // namespace

FlowPair variational_derivatives(const FourierCoeffs& u, const FourierCoeffs& v) {
  const int out_band = 5 * std::max(u.band(), v.band());
  const auto u2 = multiply(u, u);
  const auto v2 = multiply(v, v);

  auto du = -derivative(derivative(v));
  du += (-1.5 * kI) * multiply(u, derivative(v2));
  du += 1.5 * multiply(u2, multiply(v2, v));

  auto dv = -derivative(derivative(u));
  dv += (1.5 * kI) * multiply(v, derivative(u2));
  dv += 1.5 * multiply(multiply(u2, u), v2);

  return {project(du, out_band), project(dv, out_band)};
}

FlowPair apply_K(const FourierCoeffs& u, const FourierCoeffs& v, const FourierCoeffs& w1, const FourierCoeffs& w2) {
  const auto a = antiderivative(multiply(u, w1));
  const auto b = antiderivative(multiply(v, w2));
  auto z1 = -multiply(u, a);
  z1 += (-kI) * w2;
  z1 += multiply(u, b);
  auto z2 = kI * w1;
  z2 += multiply(v, a);
  z2 -= multiply(v, b);
  return {z1, z2};
}

FlowPair rhs_pair(const FourierCoeffs& u, const FourierCoeffs& v, int N) {
  if (N < 0) throw PreconditionError("rhs_pair: N must be non-negative");
  const auto uN = project(u, N);
  const auto vN = project(v, N);
  const auto grad = variational_derivatives(uN, vN);
  const auto z = apply_K(uN, vN, project(grad.u, N), project(grad.v, N));
  return {project(z.u, N), project(z.v, N)};
}

FourierCoeffs rhs_hamiltonian(const FourierCoeffs& u, int N) {
  const auto uN = project(u, N);
  return rhs_pair(uN, conjugate(uN), N).u;
}

// ---------------------------------------------------------------------------

namespace {

Complex hermitian_sum(const FourierCoeffs& x, const FourierCoeffs& y) {
  const int band = std::max(x.band(), y.band());
  Complex s = 0.0;
  for (int n = -band; n <= band; ++n) s += std::conj(x[n]) * y[n];
  return s;
}

}  // namespace

RhsExpansion rhs_expanded(const FourierCoeffs& u_in, int N) {
  if (N < 0) throw PreconditionError("rhs_expanded: N must be non-negative");
  const auto u = project(u_in, N);
  const auto ub = conjugate(u);
  const auto q = [N](const FourierCoeffs& x) { return project_complement(x, N); };

  RhsExpansion e;
  e.reference = rhs_hamiltonian(u, N);
  e.linear = kI * derivative(derivative(u));
  const auto density = multiply(u, ub);
  e.cubic = project(derivative(multiply(density, u)), N);
  const double F = gauge_F(u, QuadratureGrid::exact_for_degree(4 * std::max(N, 1)));
  e.gauge = (-kI * F) * u;

  const auto inner_cubic = multiply(u, q(multiply(u, derivative(multiply(ub, ub))))) +
                           multiply(ub, q(multiply(ub, derivative(multiply(u, u)))));
  e.bracket_cubic = project(multiply(u, antiderivative(inner_cubic)), N);
  const auto abs4 = multiply(density, density);
  const auto inner_quintic = multiply(u, q(multiply(abs4, ub))) - multiply(ub, q(multiply(abs4, u)));
  e.bracket_quintic = project(multiply(u, antiderivative(inner_quintic)), N);

  e.remainder = 1.5 * e.bracket_cubic + (1.5 * kI) * e.bracket_quintic;
  e.expanded = e.linear + e.cubic + e.gauge + (-kI) * e.remainder;
  e.discrepancy = max_abs_difference(e.expanded, e.reference);
  e.reference_scale = max_abs(e.reference);

  // Least-squares fit of the bracket coefficients.
  const auto target = e.reference - (e.linear + e.cubic + e.gauge);
  const Complex h11 = hermitian_sum(e.bracket_cubic, e.bracket_cubic);
  const Complex h12 = hermitian_sum(e.bracket_cubic, e.bracket_quintic);
  const Complex h21 = hermitian_sum(e.bracket_quintic, e.bracket_cubic);
  const Complex h22 = hermitian_sum(e.bracket_quintic, e.bracket_quintic);
  const Complex r1 = hermitian_sum(e.bracket_cubic, target);
  const Complex r2 = hermitian_sum(e.bracket_quintic, target);
  const Complex det = h11 * h22 - h12 * h21;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (std::abs(det) > 1e-12 * std::abs(h11) * std::abs(h22) && std::abs(det) > 0.0) {
    e.fitted_cubic = (r1 * h22 - h12 * r2) / det;
    e.fitted_quintic = (h11 * r2 - h21 * r1) / det;
    e.fit_residual = max_abs(target - (e.fitted_cubic * e.bracket_cubic + e.fitted_quintic * e.bracket_quintic));
  } else {
    e.fitted_cubic = Complex(nan, nan);
    e.fitted_quintic = Complex(nan, nan);
    e.fit_residual = max_abs(target);
  }
  return e;
}

Table rhs_comparison_table(const RhsExpansion& e, const std::string& name) {
  Table t{name,
          {"n", "reference_re", "reference_im", "expanded_re", "expanded_im", "abs_diff", "remainder_re",
           "remainder_im"},
          {}};
  const int band = e.reference.band();
  for (int n = -band; n <= band; ++n) {
    t.add_row({static_cast<long long>(n), e.reference[n].real(), e.reference[n].imag(), e.expanded[n].real(),
               e.expanded[n].imag(), std::abs(e.expanded[n] - e.reference[n]), e.remainder[n].real(),
               e.remainder[n].imag()});
  }
  return t;
}

// ---------------------------------------------------------------------------

QuadratureGrid invariant_grid(int N) { return QuadratureGrid::exact_for_degree(6 * std::max(N, 0)); }

FlowInvariants measure_invariants(const FourierCoeffs& u, int N) {
  const auto uN = project(u, N);
  const auto grid = invariant_grid(N);
  return {mass(uN), energy(uN, grid), gauge_F(uN, grid)};
}

namespace {

FourierCoeffs rk4(const FourierCoeffs& u, int N, double h) {
  const auto k1 = rhs_hamiltonian(u, N);
  const auto k2 = rhs_hamiltonian(u + (0.5 * h) * k1, N);
  const auto k3 = rhs_hamiltonian(u + (0.5 * h) * k2, N);
  const auto k4 = rhs_hamiltonian(u + h * k3, N);
  return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

FlowPair rk4_pair(const FlowPair& s, int N, double h) {
  auto shifted = [&](const FlowPair& k, double c) { return rhs_pair(s.u + c * k.u, s.v + c * k.v, N); };
  const auto k1 = rhs_pair(s.u, s.v, N);
  const auto k2 = shifted(k1, 0.5 * h);
  const auto k3 = shifted(k2, 0.5 * h);
  const auto k4 = shifted(k3, h);
  return {s.u + (h / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
          s.v + (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

std::size_t step_count(double T, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("integrator step must be positive and finite");
  if (!std::isfinite(T)) throw PreconditionError("final time must be finite");
  return static_cast<std::size_t>(std::ceil(std::abs(T) / h));
}

}  // namespace

FlowState step(const FlowState& state, int N, double h) {
  if (!state.u.is_finite()) throw PreconditionError("step: state is not finite");
  FlowState next;
  next.t = state.t + h;
  try {
    next.u = rk4(project(state.u, N), N, h);
  } catch (const PreconditionError&) {
    // The input is finite, so a rejected coefficient can only come from overflow in a stage.
    throw NumericalError("RK4 step overflowed between t = " + time_string(state.t) + " and t = " + time_string(next.t));
  }
  if (!next.u.is_finite()) throw NumericalError("RK4 step produced a non-finite state at t = " + time_string(next.t));
  next.invariants = measure_invariants(next.u, N);
  return next;
}

FlowState step(const FlowState& state, int N, const IntegratorConfig& config) {
  if (!(config.step > 0.0)) throw PreconditionError("step: config.step must be positive");
  return step(state, N, config.step);
}

Trajectory evolve(const FourierCoeffs& u0, int N, double T, const IntegratorConfig& config) {
  if (N < 0) throw PreconditionError("evolve: N must be non-negative");
  if (!u0.is_finite()) throw PreconditionError("evolve: initial data is not finite");
  const std::size_t n = step_count(T, config.step);
  const std::size_t every = std::max<std::size_t>(config.record_every, 1);

  FlowState state;
  state.u = project(u0, N);
  state.t = 0.0;
  state.invariants = measure_invariants(state.u, N);
  Trajectory traj{state};
  if (n == 0) return traj;

  const double h = T / static_cast<double>(n);
  const double mass0 = state.invariants.mass;
  for (std::size_t k = 1; k <= n; ++k) {
    state = step(state, N, h);
    state.t = static_cast<double>(k) * h;  // avoid accumulated rounding in t
    const double drift = std::abs(state.invariants.mass - mass0);
    if (drift > config.max_drift) {
      throw NumericalError("evolve: mass drift " + time_string(drift) + " exceeds " + time_string(config.max_drift) +
                           " at t = " + time_string(state.t));
    }
    if (k % every == 0 || k == n) traj.push_back(state);
  }
  return traj;
}

FlowPair evolve_pair(const FlowPair& start, int N, double T, double h) {
  const std::size_t n = step_count(T, h);
  FlowPair s{project(start.u, N), project(start.v, N)};
  if (n == 0) return s;
  const double dt = T / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    s = rk4_pair(s, N, dt);
    if (!s.u.is_finite() || !s.v.is_finite()) throw NumericalError("evolve_pair: non-finite state");
  }
  return s;
}

Trajectory gauge_transform(const Trajectory& traj) {
  for (std::size_t k = 2; k < traj.size(); ++k) {
    const double a = traj[k - 1].t - traj[k - 2].t;
    const double b = traj[k].t - traj[k - 1].t;
    if (a * b <= 0.0) throw PreconditionError("gauge_transform: trajectory times must be strictly monotone");
  }
  Trajectory out;
  out.reserve(traj.size());
  double phase = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (k > 0) {
      phase += 0.5 * (traj[k].t - traj[k - 1].t) * (traj[k].invariants.gauge_F + traj[k - 1].invariants.gauge_F);
    }
    FlowState s = traj[k];
    if (phase != 0.0) s.u = std::polar(1.0, phase) * s.u;
    const int band = s.u.band();
    s.invariants = measure_invariants(s.u, band);
    out.push_back(std::move(s));
  }
  return out;
}

Table trajectory_table(const Trajectory& traj, const std::string& name) {
  Table t{name, {"t", "mass", "energy", "F_u"}, {}};
  for (const auto& s : traj) t.add_row({s.t, s.invariants.mass, s.invariants.energy, s.invariants.gauge_F});
  return t;
}

void write_snapshots(const Trajectory& traj, const std::filesystem::path& path, std::size_t every) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  every = std::max<std::size_t>(every, 1);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (k % every != 0 && k + 1 != traj.size()) continue;
    out << nlohmann::json{{"t", traj[k].t}, {"u", traj[k].u}}.dump() << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------

std::vector<NamedObservable> standard_observables(int N) {
  return {
      {"L4_fourth",
       [N](const FourierCoeffs& u) {
         // int |u|^4 = sum_k |(u^2)_k|^2 by Parseval.
         const auto uN = project(u, N);
         const auto w = multiply(uN, uN);
         double s = 0.0;
         for (const auto& c : w.coeffs()) s += std::norm(c);
         return s;
       }},
      {"re_c1", [](const FourierCoeffs& u) { return u[1].real(); }},
      {"dx_L2_squared",
       [N](const FourierCoeffs& u) {
         double s = 0.0;
         for (int n = -N; n <= N; ++n) s += static_cast<double>(n) * n * std::norm(u[n]);
         return s;
       }},
      {"f_N", [N](const FourierCoeffs& u) { return f_quartic(u, N); }},
  };
}

bool InvarianceReport::pass() const {
  return std::all_of(shifts.begin(), shifts.end(), [](const ObservableShift& s) { return s.pass; });
}

InvarianceReport invariance_experiment(int N, const DensityParams& params, double t, std::size_t count,
                                       std::uint64_t seed, const std::vector<NamedObservable>& observables,
                                       const IntegratorConfig& config, unsigned threads) {
  if (N < 0) throw PreconditionError("invariance_experiment: N must be non-negative");
  if (count == 0) throw PreconditionError("invariance_experiment: count must be >= 1");
  if (!std::isfinite(t)) throw PreconditionError("invariance_experiment: t must be finite");
  if (observables.empty()) throw PreconditionError("invariance_experiment: no observables");

  InvarianceReport report;
  report.N = N;
  report.params = params;
  report.params.band = N;
  report.t = t;
  report.count = count;
  report.seed = seed;

  const auto grid = invariant_grid(N);
  std::vector<FourierCoeffs> samples(count);
  std::vector<double> weights(count);
  parallel_for(count, threads, [&](std::size_t i) {
    samples[i] = sample_phi(N, {seed, i});
    weights[i] = density_G(samples[i], report.params, grid);
  });
  report.ess = effective_sample_size(weights);
  report.evolved = static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
  if (report.ess < kMinEffectiveSampleSize) {
    throw InsufficientDataError("invariance_experiment: effective sample size " + time_string(report.ess) +
                                " is below " + time_string(kMinEffectiveSampleSize) +
                                " (kappa too small for the ensemble size)");
  }

  const std::size_t K = observables.size();
  std::vector<double> before(K * count);
  std::vector<double> after(K * count);
  std::vector<double> drift(count, 0.0);
  IntegratorConfig quiet = config;
  quiet.record_every = std::numeric_limits<std::size_t>::max();
  parallel_for(count, threads, [&](std::size_t i) {
    for (std::size_t k = 0; k < K; ++k) before[k * count + i] = observables[k].fn(samples[i]);
    if (weights[i] == 0.0) {
      // Zero weight: the sample does not enter either weighted mean.
      for (std::size_t k = 0; k < K; ++k) after[k * count + i] = before[k * count + i];
      return;
    }
    const auto traj = evolve(samples[i], N, t, quiet);
    const auto& last = traj.back();
    drift[i] = std::abs(last.invariants.mass - traj.front().invariants.mass);
    for (std::size_t k = 0; k < K; ++k) after[k * count + i] = observables[k].fn(last.u);
  });
  report.max_mass_drift = *std::max_element(drift.begin(), drift.end());

  const std::uint64_t boot = bootstrap_seed_for(seed);
  const std::span<const double> w(weights);
  for (std::size_t k = 0; k < K; ++k) {
    ObservableShift s;
    s.name = observables[k].name;
    s.before = estimate_mean(std::span<const double>(before.data() + k * count, count), w, boot);
    s.after = estimate_mean(std::span<const double>(after.data() + k * count, count), w, boot);
    s.difference = s.after.mean - s.before.mean;
    s.combined_se = std::hypot(s.before.std_error, s.after.std_error);
    s.pass = std::abs(s.difference) <= 3.0 * s.combined_se;
    report.shifts.push_back(std::move(s));
  }
  return report;
}

void to_json(nlohmann::json& j, const InvarianceReport& r) {
  j = nlohmann::json{{"N", r.N},
                     {"kappa", r.params.kappa},
                     {"ramp", r.params.ramp == Ramp::kLinear ? "linear" : "smooth"},
                     {"t", r.t},
                     {"count", r.count},
                     {"evolved", r.evolved},
                     {"seed", r.seed},
                     {"effective_sample_size", number_json(r.ess)},
                     {"max_mass_drift", number_json(r.max_mass_drift)},
                     {"pass", r.pass()},
                     {"observables", nlohmann::json::array()}};
  for (const auto& s : r.shifts) {
    j["observables"].push_back({{"name", s.name},
                                {"before", number_json(s.before.mean)},
                                {"before_se", number_json(s.before.std_error)},
                                {"after", number_json(s.after.mean)},
                                {"after_se", number_json(s.after.std_error)},
                                {"difference", number_json(s.difference)},
                                {"combined_se", number_json(s.combined_se)},
                                {"pass", s.pass}});
  }
}

void to_json(nlohmann::json& j, const RhsExpansion& e) {
  auto c = [](Complex z) { return nlohmann::json{number_json(z.real()), number_json(z.imag())}; };
  j = nlohmann::json{{"discrepancy", number_json(e.discrepancy)},
                     {"reference_scale", number_json(e.reference_scale)},
                     {"remainder_max", number_json(max_abs(e.remainder))},
                     {"fitted_cubic", c(e.fitted_cubic)},
                     {"expected_cubic", c(Complex(0.0, -1.5))},
                     {"fitted_quintic", c(e.fitted_quintic)},
                     {"expected_quintic", c(Complex(1.5, 0.0))},
                     {"fit_residual", number_json(e.fit_residual)}};
}

}  // namespace gibbs
