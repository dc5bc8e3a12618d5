#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "usstyle/tensor.hpp"

namespace usstyle {

struct Layer {
  enum class Kind { Conv, Relu };

  Kind kind = Kind::Conv;
  std::string name;  // conv layers only; key into the WeightStore
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;

  static Layer conv(std::string name, std::size_t kernel_h, std::size_t kernel_w,
                    std::size_t in_channels, std::size_t out_channels);
  static Layer relu();
};

using Stage = std::vector<Layer>;

// Wavelet encoder-decoder layout. encoder[l] runs at depth l and is followed
// by a Haar pooling step; decoder[l] runs after the matching unpooling step
// and maps encoder[l]'s output channels back to its input channels.
//
// Transfer sites are the low-frequency trunk after each pooling step:
// "level1" .. "level<levels-1>" and "bottleneck" (the deepest trunk).
struct NetworkSpec {
  std::size_t input_channels = 1;
  std::size_t levels = 0;
  std::vector<Stage> encoder;
  std::vector<Stage> decoder;
  std::vector<std::string> transfer_sites;

  // Throws Error(InvalidArgument) when stage counts or channel chaining are
  // inconsistent, conv names repeat, or a transfer site is unknown.
  void validate() const;

  std::vector<std::string> site_names() const;
};

// Site name for the trunk at `depth` (1-based pooling count).
std::string site_name(std::size_t depth, std::size_t levels);

NetworkSpec parse_network_spec(std::string_view json_text);
std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec load_network_spec(const std::filesystem::path& path);
void save_network_spec(const NetworkSpec& spec, const std::filesystem::path& path);

struct ConvWeights {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::vector<double> kernel;  // (out, in, kh, kw) row-major
  std::vector<double> bias;    // out_channels entries

  double at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return kernel[((o * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }
  bool operator==(const ConvWeights&) const = default;
};

using WeightStore = std::map<std::string, ConvWeights, std::less<>>;

// Throws Error(Shape) if some conv layer lacks a matching-shape entry.
void check_weights(const NetworkSpec& spec, const WeightStore& weights);

// WTS1 container: "WTS1", u32 LE header length, UTF-8 header with one
// "name out in kh kw bias_len" line per layer, then little-endian float32
// kernel and bias blobs in header order.
WeightStore load_weights(const std::filesystem::path& path);
void save_weights(const WeightStore& weights, const std::filesystem::path& path);

// Same-size cross-correlation with zero padding; bias added per output
// channel.
Tensor conv2d(const Tensor& x, const ConvWeights& w);

struct SkipBands {
  Tensor lh;
  Tensor hl;
  Tensor hh;
};

struct EncodedState {
  std::map<std::string, Tensor, std::less<>> sites;  // low-frequency trunk per site
  std::vector<SkipBands> skips;                      // one per level, pooling order
  Tensor trunk;                                      // deepest low-frequency trunk
};

using FeatureTransform = std::function<Tensor(const Tensor&)>;
using SiteTransforms = std::map<std::string, FeatureTransform, std::less<>>;

// Runs the encoder; input spatial size must be a multiple of 2^levels.
EncodedState encode(const Tensor& image, const NetworkSpec& spec, const WeightStore& weights);

// Runs the decoder. For each level from deepest to shallowest the site
// transform (if any) is applied to the trunk, the trunk is merged with that
// level's untouched skip bands, then the decoder stage runs.
Tensor decode(const EncodedState& state, const NetworkSpec& spec, const WeightStore& weights,
              const SiteTransforms& transforms = {});

struct Network {
  NetworkSpec spec;
  WeightStore weights;
};

// Single-channel network whose every stage is a 1x1 identity conv, i.e. a
// pure wavelet cascade. All sites are enabled.
Network make_identity_network(std::size_t levels);

}  // namespace usstyle
