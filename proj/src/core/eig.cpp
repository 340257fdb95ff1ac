#include "cbm/core/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbm/core/error.hpp"

namespace cbm {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kSignTolerance = 1e-12;

// A ← JᵀAJ and V ← VJ for the rotation zeroing a(p, q).
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();

  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymEig sym_eig(const Matrix& m) {
  require(m.rows() == m.cols(), "sym_eig: matrix is not square");
  const std::size_t n = m.rows();
  const double scale = m.norm();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c)
      require(std::abs(m(r, c) - m(c, r)) <= 1e-9 * std::max(scale, 1e-300) || m(r, c) == m(c, r),
              "sym_eig: matrix is not symmetric");

  Matrix a = m;
  // Symmetrize exactly so rotations see a consistent matrix.
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c) a(r, c) = a(c, r) = 0.5 * (m(r, c) + m(c, r));
  Matrix v = Matrix::identity(n);

  const double tol = 1e-12 * scale;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (max_abs_off_diagonal(a) <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        if (a(p, q) != 0.0) rotate(a, v, p, q);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymEig out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = a(src, src);
    double sign = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (std::abs(v(r, src)) > kSignTolerance) {
        sign = v(r, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = sign * v(r, src);
  }
  return out;
}

}  // namespace cbm
