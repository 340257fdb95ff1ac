#pragma once

// Independent reference computations for the unit and acceptance tests.
// Deliberately naive: direct sums and textbook formulas, no shared code with
// the library paths they check.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cbm/core/matrix.hpp"
#include "cbm/core/rng.hpp"

namespace oracle {

inline cbm::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0,
                                 double hi = 1.0) {
  cbm::Rng rng(seed);
  cbm::Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  cbm::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline cbm::Matrix naive_product(const cbm::Matrix& a, const cbm::Matrix& b) {
  cbm::Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(acc);
    }
  return c;
}

// Direct O(n²) DFT of the Hann-windowed frame, one-sided power scaled so the
// bins sum to the windowed energy.
inline std::vector<double> dft_power(const std::vector<double>& frame) {
  const std::size_t n = frame.size();
  std::vector<double> xw(n);
  for (std::size_t i = 0; i < n; ++i)
    xw[i] = frame[i] * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += xw[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(n));
    p[k] = ((k == 0 || k == n / 2) ? 1.0 : 2.0) * std::norm(acc) / static_cast<double>(n);
  }
  return p;
}

inline double population_std(const std::vector<double>& x) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Textbook ApEn(m, r): Φ_m − Φ_{m+1}.
inline double approx_entropy(const std::vector<double>& x, std::size_t m, double r) {
  auto phi = [&](std::size_t dim) {
    const std::size_t count = x.size() - dim + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t c = 0;
      for (std::size_t j = 0; j < count; ++j) {
        bool match = true;
        for (std::size_t k = 0; k < dim; ++k)
          if (std::abs(x[i + k] - x[j + k]) > r) match = false;
        if (match) ++c;
      }
      total += std::log(static_cast<double>(c) / static_cast<double>(count));
    }
    return total / static_cast<double>(count);
  };
  return phi(m) - phi(m + 1);
}

// Correlation sum over distinct template pairs i < j.
inline double correlation_sum(const std::vector<double>& x, std::size_t dim, double r) {
  const std::size_t count = x.size() - dim + 1;
  double hits = 0.0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j) {
      bool match = true;
      for (std::size_t k = 0; k < dim; ++k)
        if (std::abs(x[i + k] - x[j + k]) > r) match = false;
      if (match) hits += 1.0;
    }
  return 2.0 * hits / (static_cast<double>(count) * static_cast<double>(count - 1));
}

// Lyapunov exponent of x → 4x(1−x) from the mean log-derivative along the orbit.
inline double logistic_lyapunov(const std::vector<double>& orbit) {
  double s = 0.0;
  for (double v : orbit) s += std::log(std::abs(4.0 - 8.0 * v));
  return s / static_cast<double>(orbit.size());
}

inline std::vector<double> logistic_orbit(std::size_t n, double x0) {
  std::vector<double> x(n);
  x[0] = x0;
  for (std::size_t i = 1; i < n; ++i) x[i] = 4.0 * x[i - 1] * (1.0 - x[i - 1]);
  return x;
}

inline std::vector<double> sinusoid(std::size_t n, double f, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

// Peak amplitude over the second half of y.
inline double steady_amplitude(const std::vector<double>& y) {
  double peak = 0.0;
  for (std::size_t i = y.size() / 2; i < y.size(); ++i) peak = std::max(peak, std::abs(y[i]));
  return peak;
}

// Unnormalized T·Tᵀ of the horizontal concatenation, accumulated in long double.
inline cbm::Matrix concat_outer(const std::vector<cbm::Matrix>& trials) {
  const std::size_t n = trials.front().rows();
  cbm::Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (const auto& t : trials)
        for (std::size_t p = 0; p < t.cols(); ++p) acc += static_cast<long double>(t(i, p)) * t(j, p);
      c(i, j) = static_cast<double>(acc);
    }
  return c;
}

}  // namespace oracle
