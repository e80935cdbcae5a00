// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gibbs/error.hpp"
#include "gibbs/hamiltonian_flow.hpp"
#include "test_support.hpp"

using namespace gibbs;
using gibbs::testing::random_poly;
using gibbs::testing::rel_gap;
using gibbs::testing::with_mass;

namespace {

constexpr Complex kI{0.0, 1.0};

Complex pair_form(const FlowPair& a, const FlowPair& b) {
  return pairing_bilinear(a.u, b.u) + pairing_bilinear(a.v, b.v);
}

double complex_rel_gap(Complex a, Complex b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("variational derivatives: closed-form cases") {
  const auto zero = variational_derivatives(FourierCoeffs(2), FourierCoeffs(2));
  CHECK(max_abs(zero.u) == 0.0);
  CHECK(max_abs(zero.v) == 0.0);
  CHECK(zero.u.band() == 10);

  const auto g = variational_derivatives(FourierCoeffs(1), FourierCoeffs::mode(1));
  CHECK(max_abs_difference(g.u, FourierCoeffs::mode(1)) == 0.0);
  CHECK(max_abs(g.v) == 0.0);
}

TEST_CASE("variational derivatives match finite differences of H") {
  constexpr int N = 4;
  const QuadratureGrid grid(6 * (N + 1) + 1);
  constexpr double eps = 1e-5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto u = random_poly(N, 10 + seed, 0.4);
    const auto v = random_poly(N, 20 + seed, 0.4);
    const auto grad = variational_derivatives(u, v);
    std::vector<FourierCoeffs> directions;
    for (int m = -N; m <= N; ++m) directions.push_back(FourierCoeffs::mode(m));
    directions.push_back(random_poly(N, 30 + seed));
    for (const auto& h : directions) {
      const Complex fd_u = (hamiltonian_H2(u + eps * h, v, grid) - hamiltonian_H2(u - eps * h, v, grid)) / (2.0 * eps);
      const Complex fd_v = (hamiltonian_H2(u, v + eps * h, grid) - hamiltonian_H2(u, v - eps * h, grid)) / (2.0 * eps);
      CHECK(complex_rel_gap(fd_u, pairing_bilinear(grad.u, h)) <= 1e-6);
      CHECK(complex_rel_gap(fd_v, pairing_bilinear(grad.v, h)) <= 1e-6);
    }
  }
}

TEST_CASE("apply_K") {
  const auto w1 = random_poly(3, 1);
  const auto w2 = random_poly(3, 2);
  const auto k0 = apply_K(FourierCoeffs(3), FourierCoeffs(3), w1, w2);
  CHECK(max_abs_difference(k0.u, -kI * w2) == 0.0);
  CHECK(max_abs_difference(k0.v, kI * w1) == 0.0);

  const auto one = FourierCoeffs::mode(0);
  const auto k1 = apply_K(one, one, FourierCoeffs::mode(1), FourierCoeffs(1));
  CHECK(max_abs_difference(k1.u, FourierCoeffs::mode(1, kI)) <= 1e-15);
  CHECK(max_abs(k1.v) <= 1e-15);
}

TEST_CASE("K is skew-symmetric for the bilinear pairing") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto u = random_poly(8, 100 + seed);
    const auto v = random_poly(8, 200 + seed);
    const FlowPair w{random_poly(8, 300 + seed), random_poly(8, 400 + seed)};
    const FlowPair z{random_poly(8, 500 + seed), random_poly(8, 600 + seed)};
    const auto Kw = apply_K(u, v, w.u, w.v);
    const auto Kz = apply_K(u, v, z.u, z.v);
    const Complex a = pair_form(Kw, z);
    const Complex b = pair_form(w, Kz);
    CHECK(std::abs(a + b) <= 1e-10 * std::max(std::abs(a), 1.0));
  }
}

TEST_CASE("rhs_hamiltonian basics") {
  CHECK(max_abs(rhs_hamiltonian(FourierCoeffs(3), 3)) == 0.0);

  // Small single mode: the linear part i u'' = -i eps e^{ix} dominates. The
  // exact field is i(-1 + 3|c|^2 - (3/2)|c|^4) c e^{ix}, so the cubic
  // correction is 3 eps^3 in size.
  const double eps = 1e-3;
  const auto u = FourierCoeffs::mode(1, eps);
  const auto rhs = rhs_hamiltonian(u, 2);
  CHECK(rhs.band() == 2);
  const auto linear = kI * derivative(derivative(u));
  CHECK(max_abs_difference(rhs, linear) <= 3.0 * eps * eps * eps * (1.0 + 1e-6));
  const double e2 = eps * eps;
  CHECK(max_abs_difference(rhs, FourierCoeffs::mode(1, kI * (-1.0 + 3.0 * e2 - 1.5 * e2 * e2) * eps)) <= 1e-18);

  // On v = conj(u) the second component is the conjugate of the first.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto w = random_poly(6, 700 + seed, 0.5);
    const auto pair = rhs_pair(w, conjugate(w), 6);
    CHECK(max_abs_difference(pair.v, conjugate(pair.u)) <= 1e-11 * std::max(1.0, max_abs(pair.u)));
  }
}

TEST_CASE("vector field conserves mass and energy to roundoff") {
  constexpr int N = 6;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto u = random_poly(N, 800 + seed, 0.4);
    const auto rhs = rhs_pair(u, conjugate(u), N);
    // d/dt int |u|^2 = 2 Re <u, rhs>.
    const double dmass = 2.0 * inner_product_hermitian(rhs.u, u).real();
    CHECK(std::abs(dmass) <= 1e-12 * max_abs(rhs.u));
    // d/dt H = <grad H, rhs>, zero by skew-symmetry of K.
    const auto grad = variational_derivatives(u, conjugate(u));
    const Complex dH = pair_form(FlowPair{project(grad.u, N), project(grad.v, N)}, rhs);
    CHECK(std::abs(dH) <= 1e-11 * std::max(1.0, max_abs(grad.u) * max_abs(rhs.u)));
  }
}

TEST_CASE("rhs_expanded: closed form versus composition") {
  const auto zero = rhs_expanded(FourierCoeffs(4), 4);
  CHECK(zero.discrepancy == 0.0);
  CHECK(max_abs(zero.remainder) == 0.0);
  CHECK(max_abs(zero.expanded) == 0.0);

  for (int N : {1, 3, 4}) {
    const auto single = rhs_expanded(FourierCoeffs::mode(1, Complex(0.3, -0.2)), N);
    CHECK(max_abs(single.remainder) <= 1e-15);
    CHECK(max_abs(single.bracket_cubic) <= 1e-15);
    CHECK(max_abs(single.bracket_quintic) <= 1e-15);
    CHECK(single.discrepancy <= 1e-14);
  }

  // Random E_4 data: the discrepancy is a reported quantity, not a pass/fail
  // property, so this only checks that the report is well-formed.
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto e = rhs_expanded(random_poly(4, 900 + seed, 0.5), 4);
    CHECK(std::isfinite(e.discrepancy));
    CHECK(e.reference_scale > 0.0);
    MESSAGE("seed " << seed << ": discrepancy " << e.discrepancy << " of scale " << e.reference_scale
                    << ", remainder " << max_abs(e.remainder) << ", fitted cubic " << e.fitted_cubic
                    << ", fitted quintic " << e.fitted_quintic << ", fit residual " << e.fit_residual);
    CHECK(rhs_comparison_table(e, "rhs").rows.size() == 9);
  }
}

TEST_CASE("step") {
  FlowState zero{FourierCoeffs(4), 0.0, {}};
  for (int k = 0; k < 5; ++k) zero = step(zero, 4, 0.1);
  CHECK(max_abs(zero.u) == 0.0);
  CHECK(zero.t == doctest::Approx(0.5));
  CHECK_THROWS_AS(step(zero, 4, IntegratorConfig{0.0}), PreconditionError);

  const Complex c{0.6, 0.3};
  FlowState s{FourierCoeffs::mode(1, c), 0.0, {}};
  for (int k = 0; k < 200; ++k) s = step(s, 4, 1e-2);
  for (int n = -4; n <= 4; ++n) {
    if (n != 1) CHECK(s.u[n] == Complex(0.0, 0.0));
  }
  CHECK(std::abs(std::abs(s.u[1]) - std::abs(c)) <= 1e-10);
}

TEST_CASE("RK4 global error is fourth order") {
  constexpr int N = 4;
  const auto u0 = with_mass(random_poly(N, 31), 0.5);
  constexpr double T = 0.5;
  auto final_state = [&](double h) { return evolve(u0, N, T, {h, Scheme::kRK4, 1.0, 1000000}).back().u; };
  const auto reference = final_state(0.01 / 16);
  const double e1 = max_abs_difference(final_state(0.02), reference);
  const double e2 = max_abs_difference(final_state(0.01), reference);
  const double e3 = max_abs_difference(final_state(0.005), reference);
  MESSAGE("RK4 errors " << e1 << " " << e2 << " " << e3);
  CHECK(std::log2(e1 / e2) >= 3.5);
  CHECK(std::log2(e2 / e3) >= 3.5);
  CHECK(std::log2(e1 / e2) <= 4.5);
}

TEST_CASE("evolve conservation, reversibility and errors") {
  constexpr int N = 8;
  const auto u0 = with_mass(random_poly(N, 5), 0.1);
  CHECK(evolve(u0, N, 0.0, {}).size() == 1);

  const auto traj = evolve(u0, N, 1.0, {1e-3, Scheme::kRK4, 1e-8, 10});
  CHECK(traj.size() == 101);
  CHECK(traj.back().t == doctest::Approx(1.0).epsilon(1e-15));
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  for (const auto& s : traj) {
    mass_drift = std::max(mass_drift, std::abs(s.invariants.mass - traj.front().invariants.mass));
    energy_drift = std::max(energy_drift, std::abs(s.invariants.energy - traj.front().invariants.energy));
  }
  CHECK(mass_drift <= 1e-8);
  CHECK(energy_drift <= 1e-6);

  const auto u1 = evolve(u0, N, 0.5, {}).back().u;
  const auto back = evolve(u1, N, -0.5, {});
  CHECK(back.back().t == doctest::Approx(-0.5));
  CHECK(max_abs_difference(back.back().u, project(u0, N)) <= 1e-6);

  // Large data with a coarse step blows up or drifts; either way evolve stops.
  CHECK_THROWS_AS(evolve(with_mass(random_poly(N, 6), 3.0), N, 1.0, {0.2, Scheme::kRK4, 1e-8, 1}), NumericalError);
  CHECK_THROWS_AS(evolve(u0, N, 1.0, {-1.0}), PreconditionError);
}

TEST_CASE("pair form keeps v = conj(u)") {
  constexpr int N = 4;
  const auto u0 = with_mass(random_poly(N, 8), 0.3);
  const auto pair = evolve_pair({u0, conjugate(u0)}, N, 1.0, 1e-3);
  CHECK(max_abs_difference(pair.v, conjugate(pair.u)) <= 1e-9);
  const auto single = evolve(u0, N, 1.0, {1e-3}).back().u;
  CHECK(max_abs_difference(pair.u, single) <= 1e-12);
}

TEST_CASE("gauge transform identities") {
  constexpr int N = 6;
  const auto u0 = with_mass(random_poly(N, 12), 0.5);
  const auto traj = evolve(u0, N, 0.5, {1e-3, Scheme::kRK4, 1e-6, 5});
  const auto gauged = gauge_transform(traj);
  REQUIRE(gauged.size() == traj.size());
  CHECK(gauged.front().u == traj.front().u);
  const QuadratureGrid grid(64);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    CHECK(rel_gap(gauged[k].invariants.gauge_F, traj[k].invariants.gauge_F) <= 1e-12);
    CHECK(rel_gap(gauged[k].invariants.mass, traj[k].invariants.mass) <= 1e-15);
    const auto a = grid.evaluate(traj[k].u);
    const auto b = grid.evaluate(gauged[k].u);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(std::abs(a[j]) - std::abs(b[j])) <= 1e-14);
  }

  Trajectory broken = traj;
  std::swap(broken[1], broken[2]);
  CHECK_THROWS_AS(gauge_transform(broken), PreconditionError);
}

TEST_CASE("trajectory export") {
  const auto traj = evolve(FourierCoeffs::mode(1, 0.2), 2, 0.01, {1e-3, Scheme::kRK4, 1e-6, 5});
  const auto table = trajectory_table(traj, "trajectory");
  CHECK(table.columns == std::vector<std::string>{"t", "mass", "energy", "F_u"});
  CHECK(table.rows.size() == traj.size());

  const auto path = std::filesystem::temp_directory_path() / "gibbs_snapshots_test.jsonl";
  write_snapshots(traj, path, 2);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("t"));
    CHECK(j.at("u").get<FourierCoeffs>().band() == 2);
    ++lines;
  }
  CHECK(lines == 2);  // states 0 and 2 (the last)
  std::filesystem::remove(path);
}

TEST_CASE("invariance experiment") {
  const auto obs = standard_observables(3);
  const DensityParams params{1.2, 3, Ramp::kLinear};

  const auto at_zero = invariance_experiment(3, params, 0.0, 3000, 4, obs, {});
  for (const auto& s : at_zero.shifts) {
    CHECK(s.before.mean == s.after.mean);
    CHECK(s.pass);
  }

  std::vector<NamedObservable> with_mass_obs = obs;
  with_mass_obs.push_back({"mass", [](const FourierCoeffs& u) { return mass(project(u, 3)); }});
  const auto report = invariance_experiment(3, params, 0.2, 3000, 4, with_mass_obs, {2e-3});
  CHECK(report.ess >= 100.0);
  CHECK(report.evolved < report.count);
  CHECK(std::abs(report.shifts.back().difference) <= report.max_mass_drift + 1e-15);
  CHECK(report.pass());
  const nlohmann::json j = report;
  CHECK(j.at("observables").size() == 5);

  CHECK_THROWS_AS(invariance_experiment(3, {0.05, 3, Ramp::kLinear}, 0.1, 500, 1, obs, {}), InsufficientDataError);
}
