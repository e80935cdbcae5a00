// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gibbs/error.hpp"
#include "gibbs/random_field.hpp"

using namespace gibbs;

namespace {

// Sum_{|n| <= N} <n>^{-2}, the exact E ||phi_N||^2.
double expected_mass_sq(int N) {
  double s = 0.0;
  for (int n = -N; n <= N; ++n) s += 1.0 / (1.0 + n * n);
  return s;
}

double expected_mass_sq_variance(int N) {
  // Var |g|^2 = 1 for a complex standard Gaussian.
  double s = 0.0;
  for (int n = -N; n <= N; ++n) s += 1.0 / ((1.0 + n * n) * (1.0 + n * n));
  return s;
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("sample_gaussian moments and determinism") {
  constexpr std::size_t kDraws = 1'000'000;
  const auto g = sample_gaussian({42, 7}, kDraws);
  Complex mean{};
  double second = 0.0;
  for (const auto& z : g) {
    mean += z;
    second += std::norm(z);
  }
  mean /= static_cast<double>(kDraws);
  second /= static_cast<double>(kDraws);
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(static_cast<double>(kDraws)));
  CHECK(std::abs(second - 1.0) <= 3.0 * 1.0 / 1e3);

  CHECK(sample_gaussian({42, 7}, 1000) == std::vector<Complex>(g.begin(), g.begin() + 1000));
  CHECK(sample_gaussian({42, 8}, 10) != sample_gaussian({42, 7}, 10));
  CHECK(sample_gaussian({43, 7}, 10) != sample_gaussian({42, 7}, 10));
}

TEST_CASE("sample_phi marginals match the Gaussian density") {
  SUBCASE("N = 0 variance") {
    constexpr std::size_t kCount = 100'000;
    double s = 0.0;
    for (std::size_t i = 0; i < kCount; ++i) s += std::norm(sample_phi(0, {5, i})[0]);
    s /= kCount;
    CHECK(std::abs(s - 1.0) <= 3.0 / std::sqrt(static_cast<double>(kCount)));
  }

  SUBCASE("N = 4: mean squared mass, coefficient variances, kurtosis, independence") {
    constexpr int N = 4;
    constexpr std::size_t kCount = 100'000;
    const auto e = sample_ensemble(N, kCount, 2024);
    const double n = kCount;

    double mass_sq = 0.0;
    for (const auto& u : e.samples()) mass_sq += l2_norm(u) * l2_norm(u);
    mass_sq /= n;
    CHECK(std::abs(mass_sq - expected_mass_sq(N)) <=
          3.0 * std::sqrt(expected_mass_sq_variance(N) / n));
    CHECK(expected_mass_sq(4) == doctest::Approx(2.0 + 2.0 * (0.2 + 0.1 + 1.0 / 17.0)));

    for (int k = -N; k <= N; ++k) {
      const double bracket = japanese_bracket(k);
      double m2 = 0.0;
      double m4 = 0.0;
      for (const auto& u : e.samples()) {
        const double x = std::sqrt(2.0) * bracket * u[k].real();
        m2 += x * x;
        m4 += x * x * x * x;
      }
      m2 /= n;
      m4 /= n;
      // Var(Re c_n) = 1/(2 <n>^2): standardized second moment 1, Var(x^2) = 2.
      CHECK(std::abs(m2 - 1.0) <= 3.0 * std::sqrt(2.0 / n));
      // Normal kurtosis 3, Var(x^4) = 105 - 9.
      CHECK(std::abs(m4 - 3.0) <= 5.0 * std::sqrt(96.0 / n));
    }

    // Correlation between distinct standardized coefficients.
    for (int a = -N; a <= N; ++a) {
      for (int b = a + 1; b <= N; ++b) {
        double c = 0.0;
        for (const auto& u : e.samples()) {
          c += 2.0 * japanese_bracket(a) * japanese_bracket(b) * u[a].real() * u[b].real();
        }
        // 3-sigma family-wise over the 36 pairs (Bonferroni z = 4.0).
        CHECK(std::abs(c / n) <= 4.0 / std::sqrt(n));
      }
    }
  }
}

TEST_CASE("sample_ensemble determinism and stream independence") {
  const auto a = sample_ensemble(4, 64, 99, 1);
  const auto b = sample_ensemble(4, 64, 99, 7);
  CHECK(a.samples() == b.samples());
  const auto one = sample_ensemble(4, 1, 99);
  CHECK(one.samples()[0] == sample_phi(4, {99, 0}));

  // Streams [0, 10^4) against [10^4, 2*10^4): correlation of first Gaussians.
  constexpr std::size_t kPairs = 10'000;
  double c = 0.0;
  for (std::size_t i = 0; i < kPairs; ++i) {
    const auto x = sample_gaussian({99, i}, 1)[0];
    const auto y = sample_gaussian({99, i + kPairs}, 1)[0];
    c += 2.0 * x.real() * y.real();
  }
  CHECK(std::abs(c / kPairs) <= 3.0 / std::sqrt(static_cast<double>(kPairs)));
  CHECK_THROWS_AS(sample_ensemble(4, 0, 1), PreconditionError);
}

TEST_CASE("ensemble_stats") {
  const auto e = sample_ensemble(4, 20'000, 77);
  const auto constant = ensemble_stats(e, [](const FourierCoeffs&) { return 1.0; });
  CHECK(constant.mean == 1.0);
  CHECK(constant.std_error == 0.0);

  const auto mass_sq = ensemble_stats(e, [](const FourierCoeffs& u) { return l2_norm(u) * l2_norm(u); });
  CHECK(std::abs(mass_sq.mean - expected_mass_sq(4)) <= 3.0 * mass_sq.std_error);

  const auto observable = [](const FourierCoeffs& u) { return u[1].real(); };
  const auto plain = ensemble_stats(e, observable);
  const auto equal = ensemble_stats(e.with_weights(std::vector<double>(e.size(), 0.25)), observable);
  CHECK(plain.mean == equal.mean);
  CHECK(plain.std_error == equal.std_error);

  CHECK_THROWS_AS(ensemble_stats(e.with_weights(std::vector<double>(e.size(), 0.0)), observable),
                  InsufficientDataError);

  // Weighted path: deterministic, and the bootstrap SE is close to the
  // delta-method value for mildly varying weights.
  std::vector<double> w(e.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + 0.5 * std::cos(static_cast<double>(i));
  const auto weighted = e.with_weights(w);
  const auto s1 = ensemble_stats(weighted, observable);
  const auto s2 = ensemble_stats(weighted, observable);
  CHECK(s1.mean == s2.mean);
  CHECK(s1.std_error == s2.std_error);
  CHECK(s1.std_error == doctest::Approx(plain.std_error).epsilon(0.25));
}

TEST_CASE("effective_sample_size") {
  const std::vector<double> equal(50, 2.0);
  CHECK(effective_sample_size(equal) == doctest::Approx(50.0));
  const std::vector<double> single{0.0, 3.0, 0.0};
  CHECK(effective_sample_size(single) == doctest::Approx(1.0));
  CHECK(effective_sample_size(std::vector<double>{0.0, 0.0}) == 0.0);
}

TEST_CASE("ensemble persistence") {
  const auto dir = std::filesystem::temp_directory_path() / "gibbs_dnls_ensemble_test";
  std::filesystem::create_directories(dir);
  const auto e = sample_ensemble(3, 5, 11).with_weights({0.1, 0.2, 0.0, 1.5, 3.0});
  write_ensemble(e, dir / "e.jsonl", dir / "e.manifest.json");
  const auto back = read_ensemble(dir / "e.jsonl", dir / "e.manifest.json");
  CHECK(back.samples() == e.samples());
  CHECK(*back.weights() == *e.weights());
  CHECK(back.seed() == e.seed());
  CHECK(back.band() == 3);
  CHECK_THROWS_AS(Ensemble(3, {FourierCoeffs(2)}, {}), PreconditionError);
  CHECK_THROWS_AS(Ensemble(3, {FourierCoeffs(3)}, {}, std::vector<double>{-1.0}), PreconditionError);
}
