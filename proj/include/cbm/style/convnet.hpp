#pragma once

// Plain VGG-style convolutional stack: 3x3 same-padded convolutions with ReLU,
// separated by 2x2 mean pooling. Layer names follow the VGG convention
// (conv<block>_<index>, pool<block>).

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cbm/core/matrix.hpp"
#include "cbm/core/tape.hpp"
#include "cbm/style/image.hpp"

namespace cbm::style {

struct ConvLayer {
  std::string name;
  bool pool = false;
  Matrix weights;             // out × (in·9), row layout [in][ky][kx]; empty for pools
  std::vector<double> bias;   // out

  std::size_t out_channels() const { return weights.rows(); }
  std::size_t in_channels() const { return weights.cols() / 9; }
};

struct ConvNet {
  std::vector<ConvLayer> layers;
  std::vector<std::string> content_layers;
  std::vector<std::string> style_layers;

  std::size_t conv_count() const;
  std::size_t pool_count() const;
  const ConvLayer& layer(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  std::size_t weight_count() const;
  // Throws ContractError if the image would shrink below 1x1 before `depth`
  // layers have run.
  void require_fits(std::size_t height, std::size_t width, std::size_t depth) const;
};

// Topology string: comma-separated conv widths with `pool` separating blocks,
// e.g. "8,8,pool,16,pool". Names are assigned per block.
struct LayerDef {
  std::string name;
  std::size_t out_channels = 0;  // 0 for pools
};
std::vector<LayerDef> parse_topology(std::string_view spec);
// VGG-19 block widths 64,128,256,512,512 divided by `width_divisor` (min 1):
// 16 convolutions in blocks of 2,2,4,4,4, each block followed by a pool.
std::string vgg19_topology(std::size_t width_divisor = 1);

// He-uniform weights from the seed, zero biases. Content/style layers default
// to conv4_2 and conv<b>_1 for every block present; nets without a conv4_2 use
// their deepest convolution as the content layer.
ConvNet build_net(const std::vector<LayerDef>& defs, std::uint64_t seed, std::size_t in_channels = 3);

// `vgg19`, `vgg19:<divisor>` or a topology list.
ConvNet net_from_spec(const std::string& spec, std::uint64_t seed);

// Records the forward pass up to and including the layer at `last`. Returns
// the output Var of every layer in order.
std::vector<Var> record_forward(Tape& tape, const ConvNet& net, Var image, std::size_t last);

// Maps of the requested layers (all layers when `names` is empty).
std::map<std::string, Tensor3> extract_features(const ConvNet& net, const ImageTensor& img,
                                                const std::vector<std::string>& names = {});

// Weight file: magic `CBMW1`, then one record per convolution: u32 name length,
// name bytes, u32 dims (out, in, 3, 3), f32 weights, f32 biases, all little
// endian. Pools are re-inserted after each block on load.
std::string encode_weights(const ConvNet& net);
ConvNet decode_weights(const std::string& bytes);
void save_weights(const std::string& path, const ConvNet& net);
ConvNet load_weights(const std::string& path);

}  // namespace cbm::style
