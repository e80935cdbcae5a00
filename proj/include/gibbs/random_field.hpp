// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gibbs/fourier.hpp"

namespace gibbs {

/// Generator identity written into manifests and run records. Changing the
/// bit generator or the normal transform must change this string.
inline constexpr std::string_view kGeneratorName = "philox4x32-10";
inline constexpr std::string_view kNormalTransform = "box-muller";

/// Philox4x32 with 10 rounds (Salmon et al., Random123). A pure function of
/// (counter, key); there is no hidden state.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key);
};

/// Address of one random stream: sample number `stream_index` under
/// `master_seed`. Every (master_seed, stream_index) pair owns an independent
/// Philox counter range, so draws never depend on evaluation order.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// Uniform in [0, 1) with 53 random bits from draw `index` of a stream,
/// using word pair `word` (0 or 1) of the Philox block.
double uniform_draw(SeedSpec seed, std::uint64_t index, int word);

/// `count` independent complex standard Gaussians g = (h + i l)/sqrt(2), with
/// h, l independent real N(0,1) from Box-Muller. Draw k uses Philox block k.
std::vector<Complex> sample_gaussian(SeedSpec seed, std::size_t count);

/// phi_N: c_n = g_n / <n> with the 2N+1 Gaussians consumed in order n = -N..N.
FourierCoeffs sample_phi(int N, SeedSpec seed);

/// Recovers g_n = <n> c_n from a sample of phi_N.
std::vector<Complex> gaussians_of(const FourierCoeffs& phi);

/// A finite stand-in for mu_N (or rho_N when weighted): samples sharing one
/// band, optional non-negative importance weights, and the seed provenance of
/// the first sample (stream indices count up from it).
class Ensemble {
 public:
  Ensemble(int band, std::vector<FourierCoeffs> samples, SeedSpec seed,
           std::optional<std::vector<double>> weights = std::nullopt);

  int band() const { return band_; }
  std::size_t size() const { return samples_.size(); }
  const std::vector<FourierCoeffs>& samples() const { return samples_; }
  const std::optional<std::vector<double>>& weights() const { return weights_; }
  SeedSpec seed() const { return seed_; }

  /// Same samples with the given weights attached.
  Ensemble with_weights(std::vector<double> weights) const;

 private:
  int band_;
  std::vector<FourierCoeffs> samples_;
  std::optional<std::vector<double>> weights_;
  SeedSpec seed_;
};

/// Sample i uses stream index i. Thread count (0 = hardware) never changes the
/// result.
Ensemble sample_ensemble(int N, std::size_t count, std::uint64_t master_seed, unsigned threads = 0);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline constexpr int kBootstrapResamples = 200;

/// Bootstrap seed used by weighted estimators for a given master seed.
std::uint64_t bootstrap_seed_for(std::uint64_t master_seed);

/// Sample mean with standard error s/sqrt(n), or (weights present) the
/// self-normalized estimator sum w h / sum w with a 200-resample bootstrap
/// standard error. Equal weights take the unweighted path. Throws
/// InsufficientDataError for empty input or all-zero weights.
Estimate estimate_mean(std::span<const double> values, std::optional<std::span<const double>> weights,
                       std::uint64_t bootstrap_seed);

/// estimate_mean over observable(sample) with the bootstrap seed derived from
/// the ensemble's master seed.
Estimate ensemble_stats(const Ensemble& e, const std::function<double(const FourierCoeffs&)>& observable);

/// (sum w)^2 / sum w^2; zero when every weight is zero.
double effective_sample_size(std::span<const double> weights);

/// JSON Lines, one FourierCoeffs object per sample (plus "weight" when
/// weighted), and a sidecar manifest with master_seed, generator, N, count.
void write_ensemble(const Ensemble& e, const std::filesystem::path& jsonl,
                    const std::filesystem::path& manifest);
Ensemble read_ensemble(const std::filesystem::path& jsonl, const std::filesystem::path& manifest);

}  // namespace gibbs
