#pragma once

// Data-parallel inner loops shared by the neural and signal modules.
//
// Every kernel exists twice: `serial` is the straightforward reference used
// by the tests, `omp` is the OpenMP version the library calls. The OpenMP
// versions partition work over independent outputs and keep the per-output
// summation order of the reference, so both produce bit-identical results
// regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cbm::kernels {

// 3x3 convolution, stride 1, zero padding 1.
struct ConvDims {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t height;
  std::size_t width;
};

namespace serial {

// c[m×n] = a[m×k] · b[k×n]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
// g[r×r] = f[r×len] · f[r×len]ᵀ (unnormalized)
void outer_product(std::span<const double> f, std::size_t r, std::size_t len, std::span<double> g);
// weights are out-channel-major [out][in][3][3]; bias has out_channels entries
void conv3x3_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weights,
                     std::span<const double> bias, std::span<double> output);
void conv3x3_backward_input(const ConvDims& d, std::span<const double> grad_output,
                            std::span<const double> weights, std::span<double> grad_input);
void conv3x3_backward_weights(const ConvDims& d, std::span<const double> input,
                              std::span<const double> grad_output, std::span<double> grad_weights,
                              std::span<double> grad_bias);
// For each template i of `dim` consecutive samples, the number of templates j
// (including i itself) whose Chebyshev distance to i is <= r. Templates start
// at every index in [0, count).
std::vector<std::uint32_t> chebyshev_matches(std::span<const double> x, std::size_t dim, std::size_t count,
                                             double r);
// For each row i of points[n×dim], index of the nearest row j with
// |i - j| > exclusion (Euclidean); n when none exists. Ties keep the lower j.
std::vector<std::size_t> nearest_neighbors(std::span<const double> points, std::size_t n, std::size_t dim,
                                           std::size_t exclusion);

}  // namespace serial

namespace omp {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
void outer_product(std::span<const double> f, std::size_t r, std::size_t len, std::span<double> g);
void conv3x3_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weights,
                     std::span<const double> bias, std::span<double> output);
void conv3x3_backward_input(const ConvDims& d, std::span<const double> grad_output,
                            std::span<const double> weights, std::span<double> grad_input);
void conv3x3_backward_weights(const ConvDims& d, std::span<const double> input,
                              std::span<const double> grad_output, std::span<double> grad_weights,
                              std::span<double> grad_bias);
std::vector<std::uint32_t> chebyshev_matches(std::span<const double> x, std::size_t dim, std::size_t count,
                                             double r);
std::vector<std::size_t> nearest_neighbors(std::span<const double> points, std::size_t n, std::size_t dim,
                                           std::size_t exclusion);

}  // namespace omp

}  // namespace cbm::kernels
