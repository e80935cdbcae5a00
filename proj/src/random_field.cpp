// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include "gibbs/random_field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "gibbs/error.hpp"
#include "gibbs/parallel.hpp"

namespace gibbs {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53U;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57U;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9U;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85U;

Philox4x32::Key key_of(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

Philox4x32::Counter counter_of(std::uint64_t stream, std::uint64_t index) {
  return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

double uniform_draw(SeedSpec seed, std::uint64_t index, int word) {
  const auto r = Philox4x32::block(counter_of(seed.stream_index, index), key_of(seed.master_seed));
  return word == 0 ? to_unit(r[0], r[1]) : to_unit(r[2], r[3]);
}

std::vector<Complex> sample_gaussian(SeedSpec seed, std::size_t count) {
  std::vector<Complex> out(count);
  const auto key = key_of(seed.master_seed);
  for (std::size_t k = 0; k < count; ++k) {
    const auto r = Philox4x32::block(counter_of(seed.stream_index, k), key);
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = 1.0 - to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    const double h = radius * std::cos(angle);
    const double l = radius * std::sin(angle);
    out[k] = Complex(h, l) * std::numbers::sqrt2 * 0.5;
  }
  return out;
}

FourierCoeffs sample_phi(int N, SeedSpec seed) {
  if (N < 0) throw PreconditionError("sample_phi: N must be non-negative");
  auto g = sample_gaussian(seed, 2 * static_cast<std::size_t>(N) + 1);
  for (int n = -N; n <= N; ++n) g[static_cast<std::size_t>(n + N)] /= japanese_bracket(n);
  return FourierCoeffs(N, std::move(g));
}

std::vector<Complex> gaussians_of(const FourierCoeffs& phi) {
  std::vector<Complex> g(phi.coeffs().begin(), phi.coeffs().end());
  for (int n = -phi.band(); n <= phi.band(); ++n) {
    g[static_cast<std::size_t>(n + phi.band())] *= japanese_bracket(n);
  }
  return g;
}

// ---------------------------------------------------------------------------

Ensemble::Ensemble(int band, std::vector<FourierCoeffs> samples, SeedSpec seed,
                   std::optional<std::vector<double>> weights)
    : band_(band), samples_(std::move(samples)), weights_(std::move(weights)), seed_(seed) {
  for (const auto& s : samples_) {
    if (s.band() != band_) throw PreconditionError("Ensemble: all samples must share the band");
  }
  if (weights_) {
    if (weights_->size() != samples_.size()) {
      throw PreconditionError("Ensemble: weight count does not match sample count");
    }
    for (double w : *weights_) {
      if (!std::isfinite(w) || w < 0.0) {
        throw PreconditionError("Ensemble: weights must be finite and non-negative");
      }
    }
  }
}

Ensemble Ensemble::with_weights(std::vector<double> weights) const {
  return Ensemble(band_, samples_, seed_, std::move(weights));
}

Ensemble sample_ensemble(int N, std::size_t count, std::uint64_t master_seed, unsigned threads) {
  if (count == 0) throw PreconditionError("sample_ensemble: count must be >= 1");
  std::vector<FourierCoeffs> samples(count);
  parallel_for(count, threads, [&](std::size_t i) { samples[i] = sample_phi(N, {master_seed, i}); });
  return Ensemble(N, std::move(samples), {master_seed, 0});
}

std::uint64_t bootstrap_seed_for(std::uint64_t master_seed) {
  return master_seed ^ 0xB5AD4ECEDA1CE2A9ULL;
}

namespace {

Estimate unweighted(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

double self_normalized(std::span<const double> values, std::span<const double> weights) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += weights[i] * values[i];
    den += weights[i];
  }
  return num / den;
}

}  // namespace

Estimate estimate_mean(std::span<const double> values, std::optional<std::span<const double>> weights,
                       std::uint64_t bootstrap_seed) {
  if (values.empty()) throw InsufficientDataError("estimate_mean: no samples");
  if (!weights) return unweighted(values);
  const auto w = *weights;
  if (w.size() != values.size()) throw PreconditionError("estimate_mean: weight count mismatch");
  if (std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); })) {
    if (w.front() == 0.0) throw InsufficientDataError("estimate_mean: all importance weights are zero");
    return unweighted(values);
  }
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) throw InsufficientDataError("estimate_mean: all importance weights are zero");

  const double mean = self_normalized(values, w);
  const std::size_t n = values.size();
  std::vector<double> boot_values(n);
  std::vector<double> boot_weights(n);
  std::vector<double> replicates;
  replicates.reserve(kBootstrapResamples);
  for (int r = 0; r < kBootstrapResamples; ++r) {
    const SeedSpec stream{bootstrap_seed, static_cast<std::uint64_t>(r)};
    for (std::size_t k = 0; k < n; ++k) {
      const auto idx = std::min(n - 1, static_cast<std::size_t>(uniform_draw(stream, k, 0) * static_cast<double>(n)));
      boot_values[k] = values[idx];
      boot_weights[k] = w[idx];
    }
    double den = 0.0;
    for (double x : boot_weights) den += x;
    if (den > 0.0) replicates.push_back(self_normalized(boot_values, boot_weights));
  }
  if (replicates.size() < 2) return {mean, kInfinity};
  return {mean, unweighted(replicates).std_error * std::sqrt(static_cast<double>(replicates.size()))};
}

Estimate ensemble_stats(const Ensemble& e, const std::function<double(const FourierCoeffs&)>& observable) {
  if (e.size() == 0) throw InsufficientDataError("ensemble_stats: empty ensemble");
  std::vector<double> values(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) values[i] = observable(e.samples()[i]);
  std::optional<std::span<const double>> weights;
  if (e.weights()) weights = std::span<const double>(*e.weights());
  return estimate_mean(values, weights, bootstrap_seed_for(e.seed().master_seed));
}

double effective_sample_size(std::span<const double> weights) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : weights) {
    sum += w;
    sum_sq += w * w;
  }
  return sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
}

// ---------------------------------------------------------------------------

void write_ensemble(const Ensemble& e, const std::filesystem::path& jsonl,
                    const std::filesystem::path& manifest) {
  std::ofstream out(jsonl, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + jsonl.string() + " for writing");
  for (std::size_t i = 0; i < e.size(); ++i) {
    nlohmann::json line = e.samples()[i];
    if (e.weights()) line["weight"] = (*e.weights())[i];
    out << line.dump() << '\n';
  }
  if (!out) throw Error("write failed: " + jsonl.string());

  const nlohmann::json m{{"master_seed", e.seed().master_seed},
                         {"first_stream_index", e.seed().stream_index},
                         {"generator", kGeneratorName},
                         {"normal_transform", kNormalTransform},
                         {"N", e.band()},
                         {"count", e.size()},
                         {"weighted", e.weights().has_value()}};
  std::ofstream mout(manifest, std::ios::binary | std::ios::trunc);
  if (!mout) throw Error("cannot open " + manifest.string() + " for writing");
  mout << m.dump(2) << '\n';
  if (!mout) throw Error("write failed: " + manifest.string());
}

Ensemble read_ensemble(const std::filesystem::path& jsonl, const std::filesystem::path& manifest) {
  std::ifstream min(manifest);
  if (!min) throw Error("cannot open " + manifest.string());
  const auto m = nlohmann::json::parse(min);
  if (m.at("generator").get<std::string>() != kGeneratorName) {
    throw PreconditionError("ensemble was produced by a different generator");
  }
  std::ifstream in(jsonl);
  if (!in) throw Error("cannot open " + jsonl.string());
  std::vector<FourierCoeffs> samples;
  std::vector<double> weights;
  const bool weighted = m.value("weighted", false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    samples.push_back(j.get<FourierCoeffs>());
    if (weighted) weights.push_back(j.at("weight").get<double>());
  }
  if (samples.size() != m.at("count").get<std::size_t>()) {
    throw PreconditionError("ensemble file has " + std::to_string(samples.size()) +
                            " samples, manifest says " + m.at("count").dump());
  }
  std::optional<std::vector<double>> w;
  if (weighted) w = std::move(weights);
  return Ensemble(m.at("N").get<int>(), std::move(samples),
                  {m.at("master_seed").get<std::uint64_t>(), m.value("first_stream_index", std::uint64_t{0})},
                  std::move(w));
}

}  // namespace gibbs
