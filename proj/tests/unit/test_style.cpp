#include <cmath>
#include <numeric>

#include "cbm/core/eig.hpp"
#include "cbm/core/error.hpp"
#include "cbm/core/grad_check.hpp"
#include "cbm/core/rng.hpp"
#include "cbm/style/transfer.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace cbm;
using namespace cbm::style;
using namespace std::string_literals;

namespace {

ImageTensor seeded_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  ImageTensor img(h, w);
  Rng rng(seed);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

ImageTensor smooth_image(std::size_t n) {
  ImageTensor img(n, n);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x)
        img.at(c, y, x) = 0.5 + 0.4 * std::sin(0.4 * static_cast<double>(x) + 0.7 * static_cast<double>(y) + c);
  return img;
}

ImageTensor checker_image(std::size_t n) {
  ImageTensor img(n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const bool on = ((x / 2 + y / 2) % 2) == 0;
      img.at(0, y, x) = on ? 0.9 : 0.2;
      img.at(1, y, x) = on ? 0.3 : 0.6;
      img.at(2, y, x) = (x % 4 < 2) ? 0.8 : 0.1;
    }
  return img;
}

// Same-padded 3x3 convolution plus bias and ReLU, written as plain loops.
Tensor3 conv_relu_oracle(const Tensor3& in, const ConvLayer& l) {
  Tensor3 out(l.out_channels(), in.height(), in.width());
  const auto h = static_cast<long>(in.height()), w = static_cast<long>(in.width());
  for (std::size_t o = 0; o < l.out_channels(); ++o)
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) {
        double acc = l.bias[o];
        for (std::size_t c = 0; c < in.channels(); ++c)
          for (long ky = 0; ky < 3; ++ky)
            for (long kx = 0; kx < 3; ++kx) {
              const long sy = y + ky - 1, sx = x + kx - 1;
              if (sy < 0 || sx < 0 || sy >= h || sx >= w) continue;
              acc += l.weights(o, c * 9 + static_cast<std::size_t>(ky * 3 + kx)) *
                     in(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
            }
        out(o, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = std::max(acc, 0.0);
      }
  return out;
}

Tensor3 pool_oracle(const Tensor3& in) {
  Tensor3 out(in.channels(), in.height() / 2, in.width() / 2);
  for (std::size_t c = 0; c < out.channels(); ++c)
    for (std::size_t y = 0; y < out.height(); ++y)
      for (std::size_t x = 0; x < out.width(); ++x)
        out(c, y, x) = 0.25 * (in(c, 2 * y, 2 * x) + in(c, 2 * y, 2 * x + 1) + in(c, 2 * y + 1, 2 * x) +
                               in(c, 2 * y + 1, 2 * x + 1));
  return out;
}

Tensor3 as_tensor(const ImageTensor& img) { return Tensor3(3, img.height(), img.width(), img.data()); }

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double gram_distance(const ConvNet& net, const ImageTensor& x, const ImageTensor& a) {
  const auto fx = extract_features(net, x, net.style_layers);
  const auto fa = extract_features(net, a, net.style_layers);
  double d = 0.0;
  for (const auto& name : net.style_layers) d += (gram(fx.at(name)) - gram(fa.at(name))).norm();
  return d;
}

// Net with random non-zero biases so tests exercise the bias path.
ConvNet biased_net(const std::string& topology, std::uint64_t seed) {
  ConvNet net = build_net(parse_topology(topology), seed);
  Rng rng(seed + 1);
  for (auto& l : net.layers)
    for (double& b : l.bias) b = rng.uniform(-0.1, 0.1);
  return net;
}

}  // namespace

TEST_CASE("ppm: round trip, header comments and malformed input") {
  const auto img = seeded_image(5, 7, 1);
  const auto back = decode_ppm(encode_ppm(img));
  CHECK(back.height() == 5);
  CHECK(back.width() == 7);
  for (std::size_t i = 0; i < img.data().size(); ++i) CHECK(std::abs(back.data()[i] - img.data()[i]) <= 0.5 / 255.0 + 1e-12);
  CHECK(decode_ppm(encode_ppm(back)) == back);

  const std::string commented = "P6\n# made by hand\n1 1\n255\n\xff\x80\x00"s;
  const auto px = decode_ppm(commented);
  CHECK(px.at(0, 0, 0) == 1.0);
  CHECK(px.at(1, 0, 0) == doctest::Approx(128.0 / 255.0));
  CHECK(px.at(2, 0, 0) == 0.0);
  CHECK_THROWS_AS(decode_ppm("P3\n1 1\n255\n0 0 0"), ContractError);
  CHECK_THROWS_AS(decode_ppm("P6\n2 2\n255\n\x01\x02"), ContractError);
  CHECK_THROWS_AS(decode_ppm("P6\n1 1\n65535\n\x01\x02\x03\x04\x05\x06"), ContractError);
}

TEST_CASE("resize_bilinear: identity size, constant images, corner alignment") {
  const auto img = seeded_image(6, 4, 2);
  CHECK(resize_bilinear(img, 6, 4) == img);
  const ImageTensor flat(3, 3, 0.25);
  const auto stretched = resize_bilinear(flat, 7, 5);
  for (double v : stretched.data()) CHECK(v == doctest::Approx(0.25));
  const auto up = resize_bilinear(img, 12, 8);
  CHECK(up.height() == 12);
  CHECK(up.width() == 8);
  CHECK(up.at(0, 0, 0) == doctest::Approx(img.at(0, 0, 0)));
}

TEST_CASE("topology: parsing, naming and the VGG-19 shape") {
  const auto defs = parse_topology("8, 8,pool,16");
  REQUIRE(defs.size() == 4);
  CHECK(defs[0].name == "conv1_1");
  CHECK(defs[1].name == "conv1_2");
  CHECK(defs[2].name == "pool1");
  CHECK(defs[3].name == "conv2_1");
  CHECK(defs[3].out_channels == 16);
  CHECK_THROWS_AS(parse_topology("pool,8"), ContractError);
  CHECK_THROWS_AS(parse_topology("8,x"), ContractError);
  CHECK_THROWS_AS(parse_topology("0"), ContractError);

  const auto vgg = build_net(parse_topology(vgg19_topology(16)), 1);
  CHECK(vgg.conv_count() == 16);
  CHECK(vgg.pool_count() == 5);
  CHECK(vgg.layer("conv5_4").out_channels() == 32);
  CHECK(vgg.content_layers == std::vector<std::string>{"conv4_2"});
  CHECK(vgg.style_layers == std::vector<std::string>{"conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1"});
  CHECK(build_net(parse_topology(vgg19_topology()), 1).layer("conv3_4").out_channels() == 256);

  const auto small = build_net(parse_topology("4,pool,4"), 1);
  CHECK(small.content_layers == std::vector<std::string>{"conv2_1"});
}

TEST_CASE("net_from_spec: vgg19 shorthands and topology lists") {
  const auto narrow = net_from_spec("vgg19:16", 2);
  CHECK(narrow.conv_count() == 16);
  CHECK(narrow.layer("conv1_1").weights == build_net(parse_topology(vgg19_topology(16)), 2).layer("conv1_1").weights);
  CHECK(net_from_spec("vgg19", 2).layer("conv1_1").out_channels() == 64);
  CHECK(net_from_spec("4,pool,4", 2).conv_count() == 2);
  CHECK_THROWS_AS(net_from_spec("vgg19/16", 2), ContractError);
  CHECK_THROWS_AS(net_from_spec("vgg19:0", 2), ContractError);
}

TEST_CASE("extract_features: zero image with zero biases gives zero maps") {
  const auto net = build_net(parse_topology("4,pool,6"), 3);
  for (const auto& [name, maps] : extract_features(net, ImageTensor(8, 8)))
    for (double v : maps.data()) CHECK(v == 0.0);
}

TEST_CASE("extract_features: a delta kernel passes the image through") {
  ConvNet net = build_net(parse_topology("3"), 1);
  auto& w = net.layers[0].weights;
  std::fill(w.data().begin(), w.data().end(), 0.0);
  for (std::size_t c = 0; c < 3; ++c) w(c, c * 9 + 4) = 1.0;
  const auto img = seeded_image(5, 6, 4);
  CHECK(extract_features(net, img).at("conv1_1").data() == img.data());
}

TEST_CASE("extract_features: matches the nested-loop convolution oracle") {
  const auto net = biased_net("5,4,pool,6,pool,3", 9);
  const auto img = seeded_image(12, 10, 5);
  const auto maps = extract_features(net, img);
  Tensor3 x = as_tensor(img);
  for (const auto& l : net.layers) {
    x = l.pool ? pool_oracle(x) : conv_relu_oracle(x, l);
    const auto& got = maps.at(l.name);
    CHECK(got.channels() == x.channels());
    CHECK(got.height() == x.height());
    CHECK(max_diff(got.data(), x.data()) < 1e-12);
  }
  CHECK(maps.at("conv3_1").height() == 3);
  CHECK(maps.at("conv3_1").width() == 2);
}

TEST_CASE("extract_features: images too small for the pools are rejected") {
  const auto net = build_net(parse_topology("2,pool,2,pool,2"), 1);
  CHECK_THROWS_AS(extract_features(net, seeded_image(3, 3, 1)), ContractError);
  CHECK_NOTHROW(extract_features(net, seeded_image(3, 3, 1), {"conv2_1"}));
  CHECK_THROWS_AS(extract_features(net, seeded_image(4, 4, 1), {"conv9_9"}), ContractError);
}

TEST_CASE("gram: hand cases, brute-force oracle, symmetry and PSD") {
  CHECK(gram(Tensor3(3, 2, 2)).norm() == 0.0);
  const Matrix one = gram(Tensor3(1, 1, 2, {1.0, 2.0}));
  CHECK(one(0, 0) == doctest::Approx(2.5));

  const auto net = build_net(parse_topology("6,pool,5"), 2);
  for (const auto& [name, f] : extract_features(net, seeded_image(8, 8, 3))) {
    const Matrix g = gram(f);
    for (std::size_t i = 0; i < f.channels(); ++i)
      for (std::size_t j = 0; j < f.channels(); ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < f.plane(); ++p) acc += f.data()[i * f.plane() + p] * f.data()[j * f.plane() + p];
        CHECK(std::abs(g(i, j) - acc / static_cast<double>(f.channels() * f.plane())) < 1e-14);
        CHECK(g(i, j) == g(j, i));
      }
    CHECK(sym_eig(g).values.back() >= -1e-9);
  }
}

TEST_CASE("total_loss: exact minimum at x == p == a") {
  const auto net = biased_net("4,pool,4,4", 3);
  const auto img = seeded_image(8, 8, 6);
  const auto l = total_loss(net, img, img, img, 1.0, 1.0);
  CHECK(l.total == 0.0);
  CHECK(max_diff(l.grad, std::vector<double>(l.grad.size(), 0.0)) < 1e-10);
}

TEST_CASE("total_loss: alpha = 0 ignores the content image, beta scales the style term") {
  const auto net = build_net(parse_topology("4,pool,4"), 4);
  const auto x = seeded_image(8, 8, 1), p = seeded_image(8, 8, 2), q = seeded_image(8, 8, 3), a = seeded_image(8, 8, 4);
  const auto l1 = total_loss(net, x, p, a, 0.0, 1.0);
  const auto l2 = total_loss(net, x, q, a, 0.0, 1.0);
  CHECK(l1.total == l2.total);
  CHECK(l1.grad == l2.grad);

  const auto base = total_loss(net, x, p, a, 1.0, 1.5);
  const auto doubled = total_loss(net, x, p, a, 1.0, 3.0);
  CHECK(doubled.style == base.style);
  CHECK(doubled.total - doubled.content == doctest::Approx(2.0 * (base.total - base.content)).epsilon(1e-12));
  CHECK(base.total == doctest::Approx(base.content + 1.5 * base.style).epsilon(1e-12));
  CHECK_THROWS_AS(total_loss(net, seeded_image(8, 6, 1), p, a, 1.0, 1.0), ContractError);
  CHECK_THROWS_AS(total_loss(net, x, p, a, -1.0, 1.0), ContractError);
}

TEST_CASE("total_loss: image gradient passes a finite-difference check on a 4x4 image") {
  const auto net = biased_net("3,pool,3", 8);
  const auto p = seeded_image(4, 4, 11), a = seeded_image(4, 4, 12), x = seeded_image(4, 4, 13);
  CHECK(x.data().size() <= 64);
  const auto targets = prepare_targets(net, p, a);
  const Objective f = [&](std::span<const double> v, std::span<double> g) {
    const ImageTensor probe(4, 4, std::vector<double>(v.begin(), v.end()));
    const auto l = total_loss(net, targets, probe, 1.0, 10.0);
    if (!g.empty()) std::copy(l.grad.begin(), l.grad.end(), g.begin());
    return l.total;
  };
  CHECK(grad_check(f, x.data(), 1e-5) < 1e-3);
}

TEST_CASE("synthesize: content reconstruction from a shallow layer") {
  ConvNet net = build_net(parse_topology("16,pool,16"), 3);
  net.content_layers = {"conv1_1"};
  const auto p = smooth_image(16);
  const auto r = synthesize(net, p, p, {.alpha = 1.0, .beta = 0.0, .iters = 200, .step = 0.05, .seed = 5});
  auto dist = [&](const ImageTensor& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.data().size(); ++i) s += std::pow(x.data()[i] - p.data()[i], 2);
    return std::sqrt(s);
  };
  CHECK(dist(r.image) < 0.1 * dist(white_noise(16, 16, 5)));
  CHECK(r.loss_curve.size() == 200);
}

TEST_CASE("synthesize: style-only descent shrinks the Gram distance") {
  const auto net = build_net(parse_topology("16,pool,16,pool,16"), 3);
  const auto a = checker_image(16);
  const auto r = synthesize(net, smooth_image(16), a, {.alpha = 0.0, .beta = 1.0, .iters = 200, .step = 200.0, .seed = 2});
  CHECK(gram_distance(net, r.image, a) < 0.2 * gram_distance(net, white_noise(16, 16, 2), a));
}

TEST_CASE("synthesize: small steps give a non-increasing loss, seeds are reproducible") {
  const auto net = build_net(parse_topology("8,pool,8,pool,8"), 6);
  const SynthesisOptions o{.alpha = 1.0, .beta = 100.0, .iters = 60, .step = 1e-3, .seed = 4};
  const auto r = synthesize(net, smooth_image(16), checker_image(16), o);
  std::size_t violations = 0;
  for (std::size_t i = 1; i < r.loss_curve.size(); ++i)
    if (r.loss_curve[i] > r.loss_curve[i - 1]) {
      ++violations;
      CHECK(r.loss_curve[i] - r.loss_curve[i - 1] < 1e-6);
    }
  CHECK(violations <= r.loss_curve.size() / 20);
  CHECK(r.loss_curve.back() < r.loss_curve.front());
  const auto again = synthesize(net, smooth_image(16), checker_image(16), o);
  CHECK(again.image == r.image);
  for (double v : r.image.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(synthesize(net, smooth_image(16), checker_image(16), {.iters = 0}), ContractError);
  CHECK_THROWS_AS(synthesize(net, smooth_image(16), checker_image(16), {.step = 0.0}), ContractError);
}

TEST_CASE("weight file: round trip at single precision, pools restored, corrupt input rejected") {
  const auto net = biased_net("4,4,pool,5,pool,3", 12);
  const auto bytes = encode_weights(net);
  CHECK(bytes.rfind("CBMW1", 0) == 0);
  const auto back = decode_weights(bytes);
  REQUIRE(back.layers.size() == net.layers.size() + 1);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(back.layers[i].name == net.layers[i].name);
    CHECK(back.layers[i].pool == net.layers[i].pool);
    for (std::size_t k = 0; k < net.layers[i].weights.size(); ++k)
      CHECK(back.layers[i].weights.data()[k] == static_cast<double>(static_cast<float>(net.layers[i].weights.data()[k])));
  }
  CHECK(back.layers.back().name == "pool3");
  CHECK(encode_weights(back) == bytes);

  CHECK_THROWS_AS(decode_weights("CBMW2"), ContractError);
  CHECK_THROWS_AS(decode_weights(bytes.substr(0, bytes.size() - 3)), ContractError);
  CHECK_THROWS_AS(decode_weights("CBMW1"), ContractError);
}
