// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#include "gibbs/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gibbs/error.hpp"

namespace gibbs {

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_band(int band) {
  if (band < 0) throw PreconditionError("band must be non-negative, got " + std::to_string(band));
}

}  // namespace

FourierCoeffs::FourierCoeffs(int band) : band_(band) {
  require_band(band);
  coeffs_.assign(2 * static_cast<std::size_t>(band) + 1, Complex{});
}

FourierCoeffs::FourierCoeffs(int band, std::vector<Complex> coeffs)
    : band_(band), coeffs_(std::move(coeffs)) {
  require_band(band);
  if (coeffs_.size() != 2 * static_cast<std::size_t>(band) + 1) {
    throw PreconditionError("expected " + std::to_string(2 * band + 1) +
                            " coefficients, got " + std::to_string(coeffs_.size()));
  }
  if (!is_finite()) throw PreconditionError("Fourier coefficients must be finite");
}

FourierCoeffs FourierCoeffs::mode(int n, Complex value) {
  FourierCoeffs u(std::abs(n));
  u.set(n, value);
  return u;
}

void FourierCoeffs::set(int n, Complex value) {
  if (n < -band_ || n > band_) {
    throw PreconditionError("mode " + std::to_string(n) + " outside band " + std::to_string(band_));
  }
  if (!finite(value)) throw PreconditionError("Fourier coefficients must be finite");
  coeffs_[index(n)] = value;
}

bool FourierCoeffs::is_finite() const { return std::all_of(coeffs_.begin(), coeffs_.end(), finite); }

FourierCoeffs& FourierCoeffs::operator+=(const FourierCoeffs& other) {
  if (other.band_ > band_) *this = project(*this, other.band_);
  for (int n = -other.band_; n <= other.band_; ++n) coeffs_[index(n)] += other[n];
  return *this;
}

FourierCoeffs& FourierCoeffs::operator-=(const FourierCoeffs& other) {
  if (other.band_ > band_) *this = project(*this, other.band_);
  for (int n = -other.band_; n <= other.band_; ++n) coeffs_[index(n)] -= other[n];
  return *this;
}

FourierCoeffs& FourierCoeffs::operator*=(Complex scalar) {
  for (auto& c : coeffs_) c *= scalar;
  return *this;
}

bool operator==(const FourierCoeffs& a, const FourierCoeffs& b) {
  const int band = std::max(a.band_, b.band_);
  for (int n = -band; n <= band; ++n) {
    if (a[n] != b[n]) return false;
  }
  return true;
}

FourierCoeffs operator+(FourierCoeffs a, const FourierCoeffs& b) { return a += b; }
FourierCoeffs operator-(FourierCoeffs a, const FourierCoeffs& b) { return a -= b; }
FourierCoeffs operator*(Complex scalar, FourierCoeffs u) { return u *= scalar; }
FourierCoeffs operator-(FourierCoeffs u) { return u *= -1.0; }

double max_abs_difference(const FourierCoeffs& a, const FourierCoeffs& b) {
  const int band = std::max(a.band(), b.band());
  double worst = 0.0;
  for (int n = -band; n <= band; ++n) worst = std::max(worst, std::abs(a[n] - b[n]));
  return worst;
}

double max_abs(const FourierCoeffs& u) {
  double worst = 0.0;
  for (const auto& c : u.coeffs()) worst = std::max(worst, std::abs(c));
  return worst;
}

// ---------------------------------------------------------------------------

QuadratureGrid::QuadratureGrid(std::size_t points) : points_(points) {
  if (points == 0) throw PreconditionError("quadrature grid needs at least one node");
  auto roots = std::make_shared<std::vector<Complex>>(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
    (*roots)[k] = {std::cos(angle), std::sin(angle)};
  }
  roots_ = std::move(roots);
}

QuadratureGrid QuadratureGrid::exact_for_degree(int degree) {
  return QuadratureGrid(static_cast<std::size_t>(std::max(degree, 0)) + 1);
}

QuadratureGrid QuadratureGrid::oversampled(int band) {
  return QuadratureGrid(8 * static_cast<std::size_t>(std::max(band, 0)) + 8);
}

double QuadratureGrid::node(std::size_t j) const {
  return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(points_);
}

Complex QuadratureGrid::root(long long k) const {
  const auto m = static_cast<long long>(points_);
  return (*roots_)[static_cast<std::size_t>(((k % m) + m) % m)];
}

std::vector<Complex> QuadratureGrid::evaluate(const FourierCoeffs& u) const {
  const auto m = static_cast<long long>(points_);
  std::vector<Complex> out(points_, Complex{});
  const auto& roots = *roots_;
  for (int n = -u.band(); n <= u.band(); ++n) {
    const Complex c = u[n];
    if (c == Complex{}) continue;
    const long long stride = ((n % m) + m) % m;
    long long pos = 0;
    for (std::size_t j = 0; j < points_; ++j) {
      out[j] += c * roots[static_cast<std::size_t>(pos)];
      pos += stride;
      if (pos >= m) pos -= m;
    }
  }
  return out;
}

std::vector<Complex> QuadratureGrid::evaluate_derivative(const FourierCoeffs& u) const {
  return evaluate(derivative(u));
}

Complex QuadratureGrid::mean(std::span<const Complex> values) {
  Complex sum{};
  for (const auto& v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

FourierCoeffs QuadratureGrid::to_coeffs(std::span<const Complex> values, int band) const {
  if (values.size() != points_) throw PreconditionError("grid value count does not match grid size");
  FourierCoeffs out(band);
  const double scale = 1.0 / static_cast<double>(points_);
  for (int k = -band; k <= band; ++k) {
    Complex sum{};
    for (std::size_t j = 0; j < points_; ++j) {
      sum += values[j] * root(-static_cast<long long>(k) * static_cast<long long>(j));
    }
    out.set(k, sum * scale);
  }
  return out;
}

// ---------------------------------------------------------------------------

FourierCoeffs project(const FourierCoeffs& u, int M) {
  FourierCoeffs out(M);
  const int keep = std::min(M, u.band());
  for (int n = -keep; n <= keep; ++n) out.set(n, u[n]);
  return out;
}

FourierCoeffs project_complement(const FourierCoeffs& u, int M) {
  FourierCoeffs out = u;
  const int drop = std::min(M, u.band());
  for (int n = -drop; n <= drop; ++n) out.set(n, 0.0);
  return out;
}

FourierCoeffs zero_mean(const FourierCoeffs& u) {
  FourierCoeffs out = u;
  out.set(0, 0.0);
  return out;
}

FourierCoeffs derivative(const FourierCoeffs& u) {
  FourierCoeffs out(u.band());
  for (int n = -u.band(); n <= u.band(); ++n) out.set(n, Complex(0.0, n) * u[n]);
  return out;
}

FourierCoeffs antiderivative(const FourierCoeffs& u) {
  FourierCoeffs out(u.band());
  for (int n = -u.band(); n <= u.band(); ++n) {
    if (n != 0) out.set(n, u[n] / Complex(0.0, n));
  }
  return out;
}

FourierCoeffs multiply(const FourierCoeffs& u, const FourierCoeffs& v) {
  const int bu = u.band();
  const int bv = v.band();
  std::vector<Complex> out(2 * static_cast<std::size_t>(bu + bv) + 1, Complex{});
  const auto cu = u.coeffs();
  const auto cv = v.coeffs();
  // out index (n + m) + bu + bv = (n + bu) + (m + bv).
  for (std::size_t i = 0; i < cu.size(); ++i) {
    const Complex a = cu[i];
    if (a == Complex{}) continue;
    Complex* dst = out.data() + i;
    for (std::size_t k = 0; k < cv.size(); ++k) dst[k] += a * cv[k];
  }
  return FourierCoeffs(bu + bv, std::move(out));
}

FourierCoeffs conjugate(const FourierCoeffs& u) {
  FourierCoeffs out(u.band());
  for (int n = -u.band(); n <= u.band(); ++n) out.set(n, std::conj(u[-n]));
  return out;
}

FourierCoeffs reflect(const FourierCoeffs& u) {
  FourierCoeffs out(u.band());
  for (int n = -u.band(); n <= u.band(); ++n) out.set(n, u[-n]);
  return out;
}

Complex inner_product_hermitian(const FourierCoeffs& f, const FourierCoeffs& g) {
  const int band = std::min(f.band(), g.band());
  Complex sum{};
  for (int n = -band; n <= band; ++n) sum += f[n] * std::conj(g[n]);
  return sum;
}

Complex pairing_bilinear(const FourierCoeffs& f, const FourierCoeffs& g) {
  const int band = std::min(f.band(), g.band());
  Complex sum{};
  for (int n = -band; n <= band; ++n) sum += f[n] * g[-n];
  return sum;
}

double lp_norm(const FourierCoeffs& u, double p, const QuadratureGrid& grid) {
  if (!(p >= 1.0)) throw PreconditionError("lp_norm requires p >= 1");
  const bool even_integer = std::isfinite(p) && p == std::floor(p) && std::fmod(p, 2.0) == 0.0;
  const auto m = static_cast<double>(grid.size());
  if (even_integer) {
    if (!(m > p * u.band())) {
      throw PreconditionError("lp_norm: grid of " + std::to_string(grid.size()) +
                              " nodes is not exact for p=" + std::to_string(p) +
                              " and band " + std::to_string(u.band()));
    }
  } else if (m < 8.0 * u.band() + 8.0) {
    throw PreconditionError("lp_norm: grid below the oversampling floor 8*band+8");
  }
  const auto values = grid.evaluate(u);
  if (std::isinf(p)) {
    double sup = 0.0;
    for (const auto& v : values) sup = std::max(sup, std::abs(v));
    return sup;
  }
  double sum = 0.0;
  if (even_integer) {
    const int half = static_cast<int>(p / 2.0);
    for (const auto& v : values) {
      const double sq = std::norm(v);
      double term = 1.0;
      for (int k = 0; k < half; ++k) term *= sq;
      sum += term;
    }
  } else {
    for (const auto& v : values) sum += std::pow(std::abs(v), p);
  }
  return std::pow(sum / m, 1.0 / p);
}

double sobolev_norm(const FourierCoeffs& u, double sigma) {
  double sum = 0.0;
  for (int n = -u.band(); n <= u.band(); ++n) {
    sum += std::pow(1.0 + static_cast<double>(n) * n, sigma) * std::norm(u[n]);
  }
  return std::sqrt(sum);
}

double l2_norm(const FourierCoeffs& u) {
  double sum = 0.0;
  for (const auto& c : u.coeffs()) sum += std::norm(c);
  return std::sqrt(sum);
}

void to_json(nlohmann::json& j, const FourierCoeffs& u) {
  std::vector<double> re;
  std::vector<double> im;
  re.reserve(u.coeffs().size());
  im.reserve(u.coeffs().size());
  for (const auto& c : u.coeffs()) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  j = nlohmann::json{{"band", u.band()}, {"re", re}, {"im", im}};
}

void from_json(const nlohmann::json& j, FourierCoeffs& u) {
  const int band = j.at("band").get<int>();
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (re.size() != im.size()) throw PreconditionError("FourierCoeffs JSON: re/im length mismatch");
  std::vector<Complex> coeffs(re.size());
  for (std::size_t i = 0; i < re.size(); ++i) coeffs[i] = {re[i], im[i]};
  u = FourierCoeffs(band, std::move(coeffs));
}

}  // namespace gibbs
