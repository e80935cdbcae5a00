// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "gibbs/error.hpp"
#include "gibbs/fourier.hpp"
#include "test_support.hpp"

using namespace gibbs;
using gibbs::testing::random_poly;

namespace {
const Complex I{0.0, 1.0};

FourierCoeffs poly(std::initializer_list<std::pair<int, Complex>> terms) {
  int band = 0;
  for (const auto& [n, c] : terms) band = std::max(band, std::abs(n));
  FourierCoeffs u(band);
  for (const auto& [n, c] : terms) u.set(n, c);
  return u;
}
}  // namespace

TEST_CASE("FourierCoeffs invariants") {
  CHECK(FourierCoeffs(3).coeffs().size() == 7);
  CHECK_THROWS_AS(FourierCoeffs(1, {1.0, 2.0}), PreconditionError);
  CHECK_THROWS_AS(FourierCoeffs(0, {Complex(NAN, 0.0)}), PreconditionError);
  CHECK_THROWS_AS(FourierCoeffs(-1), PreconditionError);

  // Equality over the union band, zero outside.
  CHECK(poly({{1, 2.0}}) == project(poly({{1, 2.0}}), 6));
  CHECK_FALSE(poly({{1, 2.0}}) == poly({{1, 2.0}, {3, 1e-300}}));
}

TEST_CASE("QuadratureGrid integrates exponentials exactly below M") {
  const QuadratureGrid grid(17);
  for (int k = -16; k <= 16; ++k) {
    const auto values = grid.evaluate(FourierCoeffs::mode(k));
    const Complex m = QuadratureGrid::mean(values);
    CHECK(std::abs(m - (k == 0 ? 1.0 : 0.0)) < 1e-15);
  }
  // Aliasing at |k| = M is the expected failure mode.
  CHECK(std::abs(QuadratureGrid::mean(grid.evaluate(FourierCoeffs::mode(17))) - 1.0) < 1e-13);
}

TEST_CASE("project") {
  CHECK(project(poly({{0, 1.0}, {2, 1.0}}), 1) == poly({{0, 1.0}}));
  CHECK(project(poly({{0, 1.0}, {2, 1.0}}), 1).band() == 1);
  CHECK(project(poly({{1, {3.0, -1.0}}}), 5) == poly({{1, {3.0, -1.0}}}));

  const auto u = random_poly(8, 11);
  CHECK(project(project(u, 4), 4) == project(u, 4));
  // Pi_M u + Pi_M^perp u = u exactly.
  CHECK(project(u, 4) + project_complement(u, 4) == u);

  // Self-adjointness under the Hermitian product.
  const auto g = random_poly(8, 12);
  CHECK(std::abs(inner_product_hermitian(project(u, 3), g) -
                 inner_product_hermitian(u, project(g, 3))) < 1e-12);
}

TEST_CASE("zero_mean") {
  CHECK(zero_mean(poly({{0, 5.0}})) == FourierCoeffs());
  CHECK(zero_mean(poly({{0, 2.0}, {1, I}})) == poly({{1, I}}));
  const auto u = random_poly(5, 3);
  CHECK(zero_mean(zero_mean(u)) == zero_mean(u));
}

TEST_CASE("derivative and antiderivative") {
  CHECK(derivative(poly({{1, 1.0}})) == poly({{1, I}}));
  CHECK(derivative(poly({{0, 7.0}})) == FourierCoeffs());
  CHECK(derivative(poly({{-2, 1.0}})) == poly({{-2, -2.0 * I}}));

  CHECK(antiderivative(poly({{1, 1.0}})) == poly({{1, -I}}));
  CHECK(antiderivative(poly({{0, 5.0}})) == FourierCoeffs());
  CHECK(antiderivative(poly({{2, 4.0}})) == poly({{2, -2.0 * I}}));
  CHECK(derivative(antiderivative(poly({{2, 4.0}}))) == poly({{2, 4.0}}));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto u = random_poly(7, seed);
    CHECK(max_abs_difference(antiderivative(derivative(u)), zero_mean(u)) < 1e-15);
    CHECK(max_abs_difference(derivative(antiderivative(u)), zero_mean(u)) < 1e-15);
  }
}

TEST_CASE("multiply") {
  const auto e1 = FourierCoeffs::mode(1);
  CHECK(multiply(e1, e1) == FourierCoeffs::mode(2));
  const auto one_plus = poly({{0, 1.0}, {1, 1.0}});
  CHECK(multiply(one_plus, one_plus) == poly({{0, 1.0}, {1, 2.0}, {2, 1.0}}));
  CHECK(multiply(random_poly(4, 1), FourierCoeffs(3)) == FourierCoeffs());
  CHECK(multiply(random_poly(4, 1), FourierCoeffs(3)).band() == 7);

  // Commutativity and agreement with the pointwise grid product.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto u = random_poly(6, 100 + seed);
    const auto v = random_poly(9, 200 + seed);
    const auto uv = multiply(u, v);
    CHECK(max_abs_difference(uv, multiply(v, u)) <= 1e-12 * max_abs(uv));
    const QuadratureGrid grid(2 * 15 + 1);
    const auto fu = grid.evaluate(u);
    const auto fv = grid.evaluate(v);
    std::vector<Complex> prod(fu.size());
    for (std::size_t j = 0; j < fu.size(); ++j) prod[j] = fu[j] * fv[j];
    CHECK(max_abs_difference(uv, grid.to_coeffs(prod, 15)) <= 1e-12 * max_abs(uv));
  }

  // Bit-reproducible.
  const auto a = random_poly(12, 5);
  const auto b = random_poly(12, 6);
  CHECK(multiply(a, b) == multiply(a, b));
}

TEST_CASE("conjugate") {
  CHECK(conjugate(poly({{1, 1.0}})) == poly({{-1, 1.0}}));
  CHECK(conjugate(poly({{0, {2.0, 3.0}}})) == poly({{0, {2.0, -3.0}}}));
  const auto u = random_poly(6, 9);
  CHECK(conjugate(conjugate(u)) == u);

  // Agrees with pointwise conjugation on the grid.
  const QuadratureGrid grid(13);
  const auto values = grid.evaluate(u);
  const auto conj_values = grid.evaluate(conjugate(u));
  for (std::size_t j = 0; j < values.size(); ++j) {
    CHECK(std::abs(conj_values[j] - std::conj(values[j])) < 1e-13);
  }
}

TEST_CASE("inner_product_hermitian and pairing_bilinear") {
  const auto e1 = FourierCoeffs::mode(1);
  const auto e2 = FourierCoeffs::mode(2);
  CHECK(inner_product_hermitian(e1, e1) == Complex(1.0));
  CHECK(inner_product_hermitian(e1, e2) == Complex(0.0));
  const auto one_plus = poly({{0, 1.0}, {1, 1.0}});
  CHECK(inner_product_hermitian(one_plus, one_plus) == Complex(2.0));

  CHECK(pairing_bilinear(e1, FourierCoeffs::mode(-1)) == Complex(1.0));
  CHECK(pairing_bilinear(e1, e1) == Complex(0.0));

  // (d^{-1})* = -d^{-1} under the bilinear pairing.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = zero_mean(random_poly(8, 300 + seed));
    const auto g = zero_mean(random_poly(8, 400 + seed));
    const Complex lhs = pairing_bilinear(antiderivative(f), g);
    const Complex rhs = -pairing_bilinear(f, antiderivative(g));
    CHECK(std::abs(lhs - rhs) < 1e-13);
  }
}

TEST_CASE("lp_norm") {
  const auto e1 = FourierCoeffs::mode(1);
  for (double p : {1.0, 2.0, 3.0, 4.0, 6.0, kInfinity}) {
    CHECK(lp_norm(e1, p, QuadratureGrid(64)) == doctest::Approx(1.0).epsilon(1e-14));
  }
  const auto one_plus = poly({{0, 1.0}, {1, 1.0}});
  CHECK(lp_norm(one_plus, 2.0, QuadratureGrid(3)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(std::pow(lp_norm(one_plus, 4.0, QuadratureGrid(5)), 4) == doctest::Approx(6.0).epsilon(1e-14));
  // Sup of |1 + e^{ix}| = 2 at x = 0, which is a node.
  CHECK(lp_norm(one_plus, kInfinity, QuadratureGrid::oversampled(1)) == doctest::Approx(2.0));

  CHECK_THROWS_AS(lp_norm(one_plus, 0.5, QuadratureGrid(64)), PreconditionError);
  CHECK_THROWS_AS(lp_norm(one_plus, 4.0, QuadratureGrid(4)), PreconditionError);
  CHECK_THROWS_AS(lp_norm(random_poly(4, 1), kInfinity, QuadratureGrid(20)), PreconditionError);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto u = random_poly(10, 50 + seed);
    const double grid_value = lp_norm(u, 2.0, QuadratureGrid(21));
    CHECK(gibbs::testing::rel_gap(grid_value, l2_norm(u)) < 1e-12);
  }
}

TEST_CASE("sobolev_norm") {
  CHECK(sobolev_norm(poly({{0, 1.0}}), 0.37) == doctest::Approx(1.0));
  CHECK(sobolev_norm(poly({{1, 1.0}}), 0.5) == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-15));
  const auto u = random_poly(9, 77);
  CHECK(sobolev_norm(u, 0.0) == doctest::Approx(lp_norm(u, 2.0, QuadratureGrid(19))).epsilon(1e-12));
}

TEST_CASE("integration by parts identities hold coefficientwise") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto u = random_poly(6, 1000 + seed);
    const auto v = random_poly(5, 2000 + seed);
    const auto dv = derivative(v);
    const auto du = derivative(u);

    // d^{-1}(u v'') - d^{-1}(v u'') - (u v' - v u') + int(u v' - v u') = 0
    const auto bracket = multiply(u, dv) - multiply(v, du);
    auto first = antiderivative(multiply(u, derivative(dv))) -
                 antiderivative(multiply(v, derivative(du))) - bracket;
    first += FourierCoeffs::mode(0, integral(bracket));
    CHECK(max_abs(first) < 1e-11);

    // d^{-1}(u^2 (v^2)') + d^{-1}(v^2 (u^2)') - u^2 v^2 + int u^2 v^2 = 0
    const auto u2 = multiply(u, u);
    const auto v2 = multiply(v, v);
    const auto u2v2 = multiply(u2, v2);
    auto second = antiderivative(multiply(u2, derivative(v2))) +
                  antiderivative(multiply(v2, derivative(u2))) - u2v2;
    second += FourierCoeffs::mode(0, integral(u2v2));
    CHECK(max_abs(second) < 1e-11);
  }
}

TEST_CASE("JSON form") {
  const auto u = random_poly(3, 8);
  const nlohmann::json j = u;
  CHECK(j.at("band") == 3);
  CHECK(j.at("re").size() == 7);
  CHECK(j.at("re")[0].get<double>() == u[-3].real());
  CHECK(j.get<FourierCoeffs>() == u);
  CHECK_THROWS(nlohmann::json({{"band", 2}, {"re", {1.0}}, {"im", {1.0}}}).get<FourierCoeffs>());
}
