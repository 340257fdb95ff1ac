#include "cbm/style/convnet.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>

#include "cbm/core/error.hpp"
#include "cbm/core/rng.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::style {

namespace {

constexpr std::string_view kMagic = "CBMW1";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Block number of a conv<b>_<i> name, or 0 when the name does not follow the pattern.
std::size_t block_of(std::string_view name) {
  if (!name.starts_with("conv")) return 0;
  name.remove_prefix(4);
  std::size_t block = 0;
  const auto [end, ec] = std::from_chars(name.data(), name.data() + name.size(), block);
  if (ec != std::errc{} || end == name.data() + name.size() || *end != '_') return 0;
  return block;
}

void assign_default_layers(ConvNet& net) {
  net.content_layers.clear();
  net.style_layers.clear();
  std::string deepest;
  bool has_conv4_2 = false;
  for (const auto& l : net.layers) {
    if (l.pool) continue;
    deepest = l.name;
    if (l.name == "conv4_2") has_conv4_2 = true;
    if (l.name.ends_with("_1")) net.style_layers.push_back(l.name);
  }
  net.content_layers.push_back(has_conv4_2 ? "conv4_2" : deepest);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw ContractError("weight file: truncated");
    const std::string_view out(bytes_.data() + pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  double f32() {
    const double v = std::bit_cast<float>(u32());
    if (!std::isfinite(v)) throw ContractError("weight file: non-finite weight");
    return v;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t ConvNet::conv_count() const {
  return static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(), [](const auto& l) { return !l.pool; }));
}

std::size_t ConvNet::pool_count() const { return layers.size() - conv_count(); }

std::size_t ConvNet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == name) return i;
  throw ContractError("network has no layer named " + std::string(name));
}

const ConvLayer& ConvNet::layer(std::string_view name) const { return layers[index_of(name)]; }

std::size_t ConvNet::weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void ConvNet::require_fits(std::size_t height, std::size_t width, std::size_t depth) const {
  require(height >= 1 && width >= 1, "image is empty");
  for (std::size_t i = 0; i < depth && i < layers.size(); ++i) {
    if (!layers[i].pool) continue;
    if (height < 2 || width < 2)
      throw ContractError("image too small for the network: " + layers[i].name + " would produce an empty map");
    height /= 2;
    width /= 2;
  }
}

std::vector<LayerDef> parse_topology(std::string_view spec) {
  std::vector<LayerDef> defs;
  std::size_t block = 1, index = 0;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', start), spec.size());
    const std::string_view tok = trim(spec.substr(start, comma - start));
    start = comma + 1;
    if (tok == "pool") {
      require(index > 0, "topology: pool must follow at least one convolution in its block");
      defs.push_back({"pool" + std::to_string(block), 0});
      ++block;
      index = 0;
      continue;
    }
    std::size_t width = 0;
    const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), width);
    if (ec != std::errc{} || end != tok.data() + tok.size() || width == 0)
      throw ContractError("topology: expected a positive width or `pool`, got '" + std::string(tok) + "'");
    defs.push_back({"conv" + std::to_string(block) + "_" + std::to_string(++index), width});
  }
  require(std::any_of(defs.begin(), defs.end(), [](const auto& d) { return d.out_channels > 0; }),
          "topology: need at least one convolution");
  return defs;
}

std::string vgg19_topology(std::size_t width_divisor) {
  require(width_divisor >= 1, "vgg19_topology: divisor must be at least 1");
  static constexpr std::size_t kWidths[] = {64, 128, 256, 512, 512};
  static constexpr std::size_t kDepths[] = {2, 2, 4, 4, 4};
  std::string out;
  for (std::size_t b = 0; b < 5; ++b) {
    const std::size_t w = std::max<std::size_t>(1, kWidths[b] / width_divisor);
    for (std::size_t i = 0; i < kDepths[b]; ++i) out += std::to_string(w) + ",";
    out += b + 1 < 5 ? "pool," : "pool";
  }
  return out;
}

ConvNet net_from_spec(const std::string& spec, std::uint64_t seed) {
  if (!spec.starts_with("vgg19")) return build_net(parse_topology(spec), seed);
  long long divisor = 1;
  if (spec.size() > 5) {
    require(spec[5] == ':', "net must be vgg19:<divisor> or a topology list, got '" + spec + "'");
    divisor = text::parse_int(spec.substr(6));
    require(divisor >= 1, "net divisor must be at least 1");
  }
  return build_net(parse_topology(vgg19_topology(static_cast<std::size_t>(divisor))), seed);
}

ConvNet build_net(const std::vector<LayerDef>& defs, std::uint64_t seed, std::size_t in_channels) {
  require(!defs.empty() && in_channels >= 1, "build_net: empty topology");
  Rng rng(seed);
  ConvNet net;
  std::size_t channels = in_channels;
  for (const auto& d : defs) {
    ConvLayer layer{d.name, d.out_channels == 0, {}, {}};
    if (!layer.pool) {
      layer.weights = Matrix(d.out_channels, channels * 9);
      const double limit = std::sqrt(6.0 / static_cast<double>(channels * 9));
      for (double& v : layer.weights.data()) v = rng.uniform(-limit, limit);
      layer.bias.assign(d.out_channels, 0.0);
      channels = d.out_channels;
    }
    net.layers.push_back(std::move(layer));
  }
  assign_default_layers(net);
  return net;
}

std::vector<Var> record_forward(Tape& t, const ConvNet& net, Var image, std::size_t last) {
  require(last < net.layers.size(), "record_forward: layer index out of range");
  const Shape s = t.shape(image);
  net.require_fits(s.dims[1], s.dims[2], last + 1);
  std::vector<Var> outs;
  outs.reserve(last + 1);
  Var x = image;
  for (std::size_t i = 0; i <= last; ++i) {
    const auto& l = net.layers[i];
    if (l.pool) {
      x = t.mean_pool2(x);
    } else {
      require(t.shape(x).dims[0] == l.in_channels(), "network: " + l.name + " expects " +
                                                         std::to_string(l.in_channels()) + " input channels");
      const Var w = t.constant(Shape::matrix(l.out_channels(), l.weights.cols()), l.weights.data());
      const Var b = t.constant(Shape::matrix(l.out_channels(), 1), l.bias);
      x = t.relu(t.conv3x3(x, w, b));
    }
    outs.push_back(x);
  }
  return outs;
}

std::map<std::string, Tensor3> extract_features(const ConvNet& net, const ImageTensor& img,
                                                const std::vector<std::string>& names) {
  std::vector<std::size_t> wanted;
  if (names.empty()) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) wanted.push_back(i);
  } else {
    for (const auto& n : names) wanted.push_back(net.index_of(n));
  }
  const std::size_t last = *std::max_element(wanted.begin(), wanted.end());
  Tape t;
  const Var x = t.constant(Shape::tensor(3, img.height(), img.width()), img.data());
  const auto outs = record_forward(t, net, x, last);
  std::map<std::string, Tensor3> maps;
  for (std::size_t i : wanted) {
    const Shape s = t.shape(outs[i]);
    maps.emplace(net.layers[i].name, Tensor3(s.dims[0], s.dims[1], s.dims[2], t.value(outs[i])));
  }
  return maps;
}

std::string encode_weights(const ConvNet& net) {
  std::string out(kMagic);
  for (const auto& l : net.layers) {
    if (l.pool) continue;
    put_u32(out, static_cast<std::uint32_t>(l.name.size()));
    out += l.name;
    put_u32(out, static_cast<std::uint32_t>(l.out_channels()));
    put_u32(out, static_cast<std::uint32_t>(l.in_channels()));
    put_u32(out, 3);
    put_u32(out, 3);
    for (double v : l.weights.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    for (double v : l.bias) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

ConvNet decode_weights(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw ContractError("weight file: bad magic");
  ConvNet net;
  std::size_t block = 0, channels = 0;
  while (!in.done()) {
    const std::uint32_t name_len = in.u32();
    require(name_len >= 1 && name_len <= 256, "weight file: implausible layer name length");
    std::string name(in.take(name_len));
    const std::size_t b = block_of(name);
    if (b == 0) throw ContractError("weight file: layer name '" + name + "' is not of the form conv<block>_<index>");
    const std::uint32_t out = in.u32(), inc = in.u32(), kh = in.u32(), kw = in.u32();
    require(kh == 3 && kw == 3, "weight file: only 3x3 kernels are supported");
    require(out >= 1 && inc >= 1 && out <= 4096 && inc <= 4096, "weight file: implausible channel counts");
    if (block != 0 && b != block) {
      require(b > block, "weight file: blocks out of order");
      net.layers.push_back({"pool" + std::to_string(block), true, {}, {}});
    }
    require(channels == 0 || channels == inc, "weight file: " + name + " input channels do not chain");
    ConvLayer layer{name, false, Matrix(out, static_cast<std::size_t>(inc) * 9), std::vector<double>(out)};
    for (double& v : layer.weights.data()) v = in.f32();
    for (double& v : layer.bias) v = in.f32();
    net.layers.push_back(std::move(layer));
    block = b;
    channels = out;
  }
  require(block != 0, "weight file: no layers");
  net.layers.push_back({"pool" + std::to_string(block), true, {}, {}});
  assign_default_layers(net);
  return net;
}

void save_weights(const std::string& path, const ConvNet& net) { text::write_file(path, encode_weights(net)); }

ConvNet load_weights(const std::string& path) { return decode_weights(text::read_file(path)); }

}  // namespace cbm::style
