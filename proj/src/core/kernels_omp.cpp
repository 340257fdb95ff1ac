#include <algorithm>
#include <cmath>
#include <limits>

#include "cbm/core/kernels.hpp"

namespace cbm::kernels::omp {

namespace {

// Inclusive output-column range [lo, hi) for which x + shift stays inside [0, w).
inline void clip_range(long w, long shift, long& lo, long& hi) {
  lo = std::max(0L, -shift);
  hi = std::min(w, w - shift);
}

}  // namespace

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n) {
  const auto rows = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    double* crow = c.data() + i * n;
    std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void outer_product(std::span<const double> f, std::size_t r, std::size_t len, std::span<double> g) {
  const auto rows = static_cast<long>(r);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < rows; ++i) {
    const double* fi = f.data() + i * len;
    for (std::size_t j = static_cast<std::size_t>(i); j < r; ++j) {
      const double* fj = f.data() + j * len;
      double acc = 0.0;
      for (std::size_t p = 0; p < len; ++p) acc += fi[p] * fj[p];
      g[i * r + j] = acc;
      g[j * r + i] = acc;
    }
  }
}

void conv3x3_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weights,
                     std::span<const double> bias, std::span<double> output) {
  const auto h = static_cast<long>(d.height);
  const auto w = static_cast<long>(d.width);
  const auto rows = static_cast<long>(d.out_channels) * h;
#pragma omp parallel for schedule(static)
  for (long oy = 0; oy < rows; ++oy) {
    const auto o = static_cast<std::size_t>(oy / h);
    const long y = oy % h;
    double* out = output.data() + (o * d.height + y) * d.width;
    std::fill(out, out + w, bias[o]);
    for (std::size_t c = 0; c < d.in_channels; ++c) {
      for (long ky = 0; ky < 3; ++ky) {
        const long iy = y + ky - 1;
        if (iy < 0 || iy >= h) continue;
        const double* in = input.data() + (c * d.height + iy) * d.width;
        const double* k = weights.data() + ((o * d.in_channels + c) * 3 + ky) * 3;
        // Per output pixel the terms still arrive in (c, ky, kx) order.
        for (long x = 0; x < w; ++x) {
          double acc = out[x];
          if (x > 0) acc += in[x - 1] * k[0];
          acc += in[x] * k[1];
          if (x + 1 < w) acc += in[x + 1] * k[2];
          out[x] = acc;
        }
      }
    }
  }
}

void conv3x3_backward_input(const ConvDims& d, std::span<const double> grad_output,
                            std::span<const double> weights, std::span<double> grad_input) {
  const auto h = static_cast<long>(d.height);
  const auto w = static_cast<long>(d.width);
  const auto rows = static_cast<long>(d.in_channels) * h;
#pragma omp parallel for schedule(static)
  for (long cy = 0; cy < rows; ++cy) {
    const auto c = static_cast<std::size_t>(cy / h);
    const long y = cy % h;
    double* gin = grad_input.data() + (c * d.height + y) * d.width;
    std::fill(gin, gin + w, 0.0);
    for (std::size_t o = 0; o < d.out_channels; ++o) {
      for (long ky = 0; ky < 3; ++ky) {
        const long oy = y - ky + 1;
        if (oy < 0 || oy >= h) continue;
        const double* gout = grad_output.data() + (o * d.height + oy) * d.width;
        const double* k = weights.data() + ((o * d.in_channels + c) * 3 + ky) * 3;
        for (long x = 0; x < w; ++x) {
          double acc = gin[x];
          if (x + 1 < w) acc += gout[x + 1] * k[0];
          acc += gout[x] * k[1];
          if (x > 0) acc += gout[x - 1] * k[2];
          gin[x] = acc;
        }
      }
    }
  }
}

void conv3x3_backward_weights(const ConvDims& d, std::span<const double> input,
                              std::span<const double> grad_output, std::span<double> grad_weights,
                              std::span<double> grad_bias) {
  const auto h = static_cast<long>(d.height);
  const auto w = static_cast<long>(d.width);
  const auto outs = static_cast<long>(d.out_channels);
#pragma omp parallel for schedule(static)
  for (long o = 0; o < outs; ++o) {
    const double* gout = grad_output.data() + o * d.height * d.width;
    double bias_acc = 0.0;
    for (long p = 0; p < h * w; ++p) bias_acc += gout[p];
    grad_bias[o] = bias_acc;
    for (std::size_t c = 0; c < d.in_channels; ++c) {
      const double* in = input.data() + c * d.height * d.width;
      for (long ky = 0; ky < 3; ++ky) {
        for (long kx = 0; kx < 3; ++kx) {
          long x_lo = 0;
          long x_hi = 0;
          clip_range(w, kx - 1, x_lo, x_hi);
          double acc = 0.0;
          for (long y = 0; y < h; ++y) {
            const long iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            const double* grow = gout + y * w;
            const double* irow = in + iy * w;
            for (long x = x_lo; x < x_hi; ++x) acc += grow[x] * irow[x + kx - 1];
          }
          grad_weights[((o * d.in_channels + c) * 3 + ky) * 3 + kx] = acc;
        }
      }
    }
  }
}

std::vector<std::uint32_t> chebyshev_matches(std::span<const double> x, std::size_t dim, std::size_t count,
                                             double r) {
  std::vector<std::uint32_t> counts(count, 0);
  const auto n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    std::uint32_t hits = 0;
    for (std::size_t j = 0; j < count; ++j) {
      std::size_t k = 0;
      while (k < dim && std::abs(x[i + k] - x[j + k]) <= r) ++k;
      if (k == dim) ++hits;
    }
    counts[i] = hits;
  }
  return counts;
}

std::vector<std::size_t> nearest_neighbors(std::span<const double> points, std::size_t n, std::size_t dim,
                                           std::size_t exclusion) {
  std::vector<std::size_t> nn(n, n);
  const auto rows = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = n;
    const double* pi = points.data() + i * dim;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t gap = static_cast<std::size_t>(i) > j ? i - j : j - i;
      if (gap <= exclusion) continue;
      const double* pj = points.data() + j * dim;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = pi[k] - pj[k];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    nn[i] = best_j;
  }
  return nn;
}

}  // namespace cbm::kernels::omp
