#pragma once

// Content/style total loss and its descent from white noise.
//
//   L = alpha * 1/2 sum_content ||F(x) - F(p)||^2
//     + beta  * sum_style (1/|style|) ||G(x) - G(a)||^2
//
// with G the Gram matrix of a layer normalized by channels times pixels.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cbm/style/convnet.hpp"

namespace cbm::style {

Matrix gram(const Tensor3& features);

// Content maps of p and Gram matrices of a, computed once per synthesis.
struct StyleTargets {
  std::size_t height = 0, width = 0;
  std::map<std::string, Tensor3> content;
  std::map<std::string, Matrix> style;
};

StyleTargets prepare_targets(const ConvNet& net, const ImageTensor& content, const ImageTensor& style);

struct LossTerms {
  double total = 0.0;
  double content = 0.0;  // unweighted content term
  double style = 0.0;    // unweighted style term
  std::vector<double> grad;  // dL/dx, same layout as the image
};

LossTerms total_loss(const ConvNet& net, const StyleTargets& targets, const ImageTensor& x, double alpha, double beta);
LossTerms total_loss(const ConvNet& net, const ImageTensor& x, const ImageTensor& content, const ImageTensor& style,
                     double alpha, double beta);

struct SynthesisOptions {
  double alpha = 1.0;
  double beta = 1.0;
  std::size_t iters = 200;
  double step = 0.1;
  std::uint64_t seed = 0;
};

struct SynthesisResult {
  ImageTensor image;
  std::vector<double> loss_curve;  // loss at each iterate, before its update
};

ImageTensor white_noise(std::size_t height, std::size_t width, std::uint64_t seed);
// Fixed-step descent from white_noise(seed), clamping to [0,1] after every step.
SynthesisResult synthesize(const ConvNet& net, const ImageTensor& content, const ImageTensor& style,
                           const SynthesisOptions& options);

}  // namespace cbm::style
