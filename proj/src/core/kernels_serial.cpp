#include <cmath>
#include <limits>

#include "cbm/core/kernels.hpp"

namespace cbm::kernels::serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

void outer_product(std::span<const double> f, std::size_t r, std::size_t len, std::span<double> g) {
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < len; ++p) acc += f[i * len + p] * f[j * len + p];
      g[i * r + j] = acc;
    }
  }
}

void conv3x3_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weights,
                     std::span<const double> bias, std::span<double> output) {
  const auto h = static_cast<long>(d.height);
  const auto w = static_cast<long>(d.width);
  for (std::size_t o = 0; o < d.out_channels; ++o) {
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        double acc = bias[o];
        for (std::size_t c = 0; c < d.in_channels; ++c) {
          for (long ky = 0; ky < 3; ++ky) {
            for (long kx = 0; kx < 3; ++kx) {
              const long iy = y + ky - 1;
              const long ix = x + kx - 1;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += input[(c * d.height + iy) * d.width + ix] *
                     weights[((o * d.in_channels + c) * 3 + ky) * 3 + kx];
            }
          }
        }
        output[(o * d.height + y) * d.width + x] = acc;
      }
    }
  }
}

void conv3x3_backward_input(const ConvDims& d, std::span<const double> grad_output,
                            std::span<const double> weights, std::span<double> grad_input) {
  const auto h = static_cast<long>(d.height);
  const auto w = static_cast<long>(d.width);
  for (std::size_t c = 0; c < d.in_channels; ++c) {
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t o = 0; o < d.out_channels; ++o) {
          for (long ky = 0; ky < 3; ++ky) {
            for (long kx = 0; kx < 3; ++kx) {
              const long oy = y - ky + 1;
              const long ox = x - kx + 1;
              if (oy < 0 || oy >= h || ox < 0 || ox >= w) continue;
              acc += grad_output[(o * d.height + oy) * d.width + ox] *
                     weights[((o * d.in_channels + c) * 3 + ky) * 3 + kx];
            }
          }
        }
        grad_input[(c * d.height + y) * d.width + x] = acc;
      }
    }
  }
}

void conv3x3_backward_weights(const ConvDims& d, std::span<const double> input,
                              std::span<const double> grad_output, std::span<double> grad_weights,
                              std::span<double> grad_bias) {
  const auto h = static_cast<long>(d.height);
  const auto w = static_cast<long>(d.width);
  for (std::size_t o = 0; o < d.out_channels; ++o) {
    double bias_acc = 0.0;
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) bias_acc += grad_output[(o * d.height + y) * d.width + x];
    grad_bias[o] = bias_acc;
    for (std::size_t c = 0; c < d.in_channels; ++c) {
      for (long ky = 0; ky < 3; ++ky) {
        for (long kx = 0; kx < 3; ++kx) {
          double acc = 0.0;
          for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
              const long iy = y + ky - 1;
              const long ix = x + kx - 1;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += grad_output[(o * d.height + y) * d.width + x] * input[(c * d.height + iy) * d.width + ix];
            }
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
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < count; ++j) {
      double dist = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dist = std::max(dist, std::abs(x[i + k] - x[j + k]));
      if (dist <= r) ++counts[i];
    }
  }
  return counts;
}

std::vector<std::size_t> nearest_neighbors(std::span<const double> points, std::size_t n, std::size_t dim,
                                           std::size_t exclusion) {
  std::vector<std::size_t> nn(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t gap = i > j ? i - j : j - i;
      if (gap <= exclusion) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = points[i * dim + k] - points[j * dim + k];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        nn[i] = j;
      }
    }
  }
  return nn;
}

}  // namespace cbm::kernels::serial
