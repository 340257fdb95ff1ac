#include "cbm/style/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "cbm/core/error.hpp"
#include "cbm/core/kernels.hpp"
#include "cbm/core/rng.hpp"

namespace cbm::style {

namespace {

void require_same_dims(const ImageTensor& a, const ImageTensor& b, const char* what) {
  require(a.height() == b.height() && a.width() == b.width(),
          std::string("style transfer: ") + what + " image dims differ from the synthesized image");
}

std::size_t deepest(const ConvNet& net, const std::vector<std::string>& names) {
  std::size_t last = 0;
  for (const auto& n : names) last = std::max(last, net.index_of(n));
  return last;
}

}  // namespace

Matrix gram(const Tensor3& f) {
  const std::size_t c = f.channels(), m = f.plane();
  Matrix g(c, c);
  kernels::omp::outer_product(f.data(), c, m, g.data());
  return (1.0 / static_cast<double>(c * m)) * g;
}

StyleTargets prepare_targets(const ConvNet& net, const ImageTensor& content, const ImageTensor& style) {
  require_same_dims(content, style, "style");
  require(!net.content_layers.empty() || !net.style_layers.empty(), "style transfer: no content or style layers");
  StyleTargets t{content.height(), content.width(), {}, {}};
  if (!net.content_layers.empty()) t.content = extract_features(net, content, net.content_layers);
  if (!net.style_layers.empty())
    for (const auto& [name, maps] : extract_features(net, style, net.style_layers)) t.style.emplace(name, gram(maps));
  return t;
}

LossTerms total_loss(const ConvNet& net, const StyleTargets& targets, const ImageTensor& x, double alpha, double beta) {
  require(alpha >= 0.0 && beta >= 0.0, "style transfer: alpha and beta must be non-negative");
  require(x.height() == targets.height && x.width() == targets.width,
          "style transfer: image dims differ from the targets");
  std::vector<std::string> used;
  if (alpha > 0.0) used.insert(used.end(), net.content_layers.begin(), net.content_layers.end());
  if (beta > 0.0) used.insert(used.end(), net.style_layers.begin(), net.style_layers.end());

  LossTerms out;
  out.grad.assign(x.data().size(), 0.0);
  if (used.empty()) return out;

  Tape t;
  const Var image = t.parameter(Shape::tensor(3, x.height(), x.width()), x.data());
  const auto maps = record_forward(t, net, image, deepest(net, used));

  std::optional<Var> content, style;
  if (alpha > 0.0)
    for (const auto& name : net.content_layers) {
      const Var f = maps[net.index_of(name)];
      const Var target = t.constant(t.shape(f), targets.content.at(name).data());
      const Var term = t.scale(t.squared_norm(t.sub(f, target)), 0.5);
      content = content ? t.add(*content, term) : term;
    }
  if (beta > 0.0) {
    const double w = 1.0 / static_cast<double>(net.style_layers.size());
    for (const auto& name : net.style_layers) {
      const Var g = t.gram(maps[net.index_of(name)]);
      const Matrix& a = targets.style.at(name);
      const Var target = t.constant(Shape::matrix(a.rows(), a.cols()), a.data());
      const Var term = t.scale(t.squared_norm(t.sub(g, target)), w);
      style = style ? t.add(*style, term) : term;
    }
  }

  std::optional<Var> loss;
  if (content) {
    out.content = t.scalar(*content);
    loss = t.scale(*content, alpha);
  }
  if (style) {
    out.style = t.scalar(*style);
    const Var s = t.scale(*style, beta);
    loss = loss ? t.add(*loss, s) : s;
  }
  t.backward(*loss);
  out.total = t.scalar(*loss);
  out.grad = t.grad(image);
  return out;
}

LossTerms total_loss(const ConvNet& net, const ImageTensor& x, const ImageTensor& content, const ImageTensor& style,
                     double alpha, double beta) {
  require_same_dims(content, x, "content");
  return total_loss(net, prepare_targets(net, content, style), x, alpha, beta);
}

ImageTensor white_noise(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img(height, width);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

SynthesisResult synthesize(const ConvNet& net, const ImageTensor& content, const ImageTensor& style,
                           const SynthesisOptions& o) {
  require(o.iters >= 1, "synthesize: need at least one iteration");
  require(o.step > 0.0, "synthesize: step must be positive");
  const StyleTargets targets = prepare_targets(net, content, style);
  SynthesisResult r{white_noise(content.height(), content.width(), o.seed), {}};
  r.loss_curve.reserve(o.iters);
  for (std::size_t it = 0; it < o.iters; ++it) {
    const LossTerms l = total_loss(net, targets, r.image, o.alpha, o.beta);
    if (!std::isfinite(l.total)) throw RuntimeError("synthesize: loss became non-finite at iteration " + std::to_string(it));
    r.loss_curve.push_back(l.total);
    auto& x = r.image.data();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= o.step * l.grad[i];
    r.image.clamp();
  }
  return r;
}

}  // namespace cbm::style
