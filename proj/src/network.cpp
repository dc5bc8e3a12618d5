#include "usstyle/network.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "usstyle/error.hpp"
#include "usstyle/wavelet.hpp"

namespace usstyle {
namespace fs = std::filesystem;
using nlohmann::json;

Layer Layer::conv(std::string name, std::size_t kernel_h, std::size_t kernel_w,
                  std::size_t in_channels, std::size_t out_channels) {
  return Layer{Kind::Conv, std::move(name), kernel_h, kernel_w, in_channels, out_channels};
}

Layer Layer::relu() { return Layer{Kind::Relu, {}, 0, 0, 0, 0}; }

std::string site_name(std::size_t depth, std::size_t levels) {
  if (depth == levels) return "bottleneck";
  return fmt::format("level{}", depth);
}

std::vector<std::string> NetworkSpec::site_names() const {
  std::vector<std::string> names;
  for (std::size_t d = 1; d <= levels; ++d) names.push_back(site_name(d, levels));
  return names;
}

namespace {

// Walks a stage, returning its output channel count.
std::size_t chain_stage(const Stage& stage, std::size_t channels, std::string_view where,
                        std::set<std::string>& names) {
  for (const Layer& layer : stage) {
    if (layer.kind == Layer::Kind::Relu) continue;
    if (layer.name.empty()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("{}: conv layer without a name", where));
    }
    if (!names.insert(layer.name).second) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}: duplicate layer name '{}'", where, layer.name));
    }
    if (layer.kernel_h == 0 || layer.kernel_w == 0 || layer.out_channels == 0) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}: layer '{}' has an empty shape", where, layer.name));
    }
    if (layer.in_channels != channels) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}: layer '{}' expects {} input channels, receives {}", where,
                              layer.name, layer.in_channels, channels));
    }
    channels = layer.out_channels;
  }
  return channels;
}

}  // namespace

void NetworkSpec::validate() const {
  if (levels == 0) throw Error(ErrorCode::InvalidArgument, "network: levels must be >= 1");
  if (input_channels == 0) throw Error(ErrorCode::InvalidArgument, "network: no input channels");
  if (encoder.size() != levels || decoder.size() != levels) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("network: {} levels need {} encoder and decoder stages (got {}, {})",
                            levels, levels, encoder.size(), decoder.size()));
  }
  std::set<std::string> names;
  std::size_t channels = input_channels;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t stage_in = channels;
    channels = chain_stage(encoder[l], channels, fmt::format("encoder stage {}", l), names);
    const std::size_t decoded =
        chain_stage(decoder[l], channels, fmt::format("decoder stage {}", l), names);
    if (decoded != stage_in) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("decoder stage {} produces {} channels, encoder stage input has {}",
                              l, decoded, stage_in));
    }
  }
  const auto known = site_names();
  for (const auto& site : transfer_sites) {
    if (std::find(known.begin(), known.end(), site) == known.end()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("network: unknown transfer site '{}'", site));
    }
  }
}

namespace {

json stage_to_json(const Stage& stage) {
  json out = json::array();
  for (const Layer& layer : stage) {
    if (layer.kind == Layer::Kind::Relu) {
      out.push_back({{"type", "relu"}});
    } else {
      out.push_back({{"type", "conv"},
                     {"name", layer.name},
                     {"kernel", {layer.kernel_h, layer.kernel_w}},
                     {"in", layer.in_channels},
                     {"out", layer.out_channels}});
    }
  }
  return out;
}

Stage stage_from_json(const json& j) {
  Stage stage;
  for (const json& item : j) {
    const std::string type = item.at("type").get<std::string>();
    if (type == "relu") {
      stage.push_back(Layer::relu());
    } else if (type == "conv") {
      const auto kernel = item.at("kernel").get<std::vector<std::size_t>>();
      if (kernel.size() != 2) throw Error(ErrorCode::Format, "network: kernel must be [h, w]");
      stage.push_back(Layer::conv(item.at("name").get<std::string>(), kernel[0], kernel[1],
                                  item.at("in").get<std::size_t>(),
                                  item.at("out").get<std::size_t>()));
    } else {
      throw Error(ErrorCode::Format, fmt::format("network: unknown layer type '{}'", type));
    }
  }
  return stage;
}

}  // namespace

NetworkSpec parse_network_spec(std::string_view json_text) {
  NetworkSpec spec;
  try {
    const json j = json::parse(json_text);
    spec.input_channels = j.value("input_channels", std::size_t{1});
    spec.levels = j.at("levels").get<std::size_t>();
    for (const json& s : j.at("encoder")) spec.encoder.push_back(stage_from_json(s));
    for (const json& s : j.at("decoder")) spec.decoder.push_back(stage_from_json(s));
    if (j.contains("transfer_sites")) {
      spec.transfer_sites = j.at("transfer_sites").get<std::vector<std::string>>();
    } else {
      spec.transfer_sites = spec.site_names();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, fmt::format("network: malformed spec JSON ({})", e.what()));
  }
  spec.validate();
  return spec;
}

std::string network_spec_to_json(const NetworkSpec& spec) {
  json j;
  j["input_channels"] = spec.input_channels;
  j["levels"] = spec.levels;
  j["encoder"] = json::array();
  for (const auto& s : spec.encoder) j["encoder"].push_back(stage_to_json(s));
  j["decoder"] = json::array();
  for (const auto& s : spec.decoder) j["decoder"].push_back(stage_to_json(s));
  j["transfer_sites"] = spec.transfer_sites;
  return j.dump(2) + "\n";
}

NetworkSpec load_network_spec(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, fmt::format("{}: no such file", path.string()));
  }
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_network_spec(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_network_spec(const NetworkSpec& spec, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: cannot open for writing", path.string()));
  out << network_spec_to_json(spec);
}

Tensor conv2d(const Tensor& x, const ConvWeights& w) {
  if (w.in_channels != x.channels()) {
    throw Error(ErrorCode::Shape, fmt::format("conv2d: kernel expects {} channels, input has {}",
                                              w.in_channels, x.channels()));
  }
  const std::size_t h = x.height();
  const std::size_t width = x.width();
  const auto pad_y = static_cast<std::ptrdiff_t>((w.kernel_h - 1) / 2);
  const auto pad_x = static_cast<std::ptrdiff_t>((w.kernel_w - 1) / 2);
  Tensor out(w.out_channels, h, width);
  for (std::size_t o = 0; o < w.out_channels; ++o) {
    auto dst = out.channel(o);
    std::fill(dst.begin(), dst.end(), w.bias[o]);
    for (std::size_t i = 0; i < w.in_channels; ++i) {
      for (std::size_t ky = 0; ky < w.kernel_h; ++ky) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad_y;
        for (std::size_t kx = 0; kx < w.kernel_w; ++kx) {
          const double k = w.at(o, i, ky, kx);
          if (k == 0.0) continue;
          const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad_x;
          const std::size_t y0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dy));
          const std::size_t y1 = static_cast<std::size_t>(
              std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h), static_cast<std::ptrdiff_t>(h) - dy));
          const std::size_t x0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
          const std::size_t x1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
              static_cast<std::ptrdiff_t>(width), static_cast<std::ptrdiff_t>(width) - dx));
          for (std::size_t y = y0; y < y1; ++y) {
            const std::size_t sy = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + dy);
            for (std::size_t xx = x0; xx < x1; ++xx) {
              const std::size_t sx = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(xx) + dx);
              out(o, y, xx) += k * x(i, sy, sx);
            }
          }
        }
      }
    }
  }
  return out;
}

namespace {

Tensor run_stage(const Stage& stage, Tensor x, const WeightStore& weights) {
  for (const Layer& layer : stage) {
    if (layer.kind == Layer::Kind::Relu) {
      for (double& v : x.data()) v = std::max(v, 0.0);
      continue;
    }
    const auto it = weights.find(layer.name);
    if (it == weights.end()) {
      throw Error(ErrorCode::Shape, fmt::format("no weights for layer '{}'", layer.name));
    }
    x = conv2d(x, it->second);
  }
  return x;
}

}  // namespace

EncodedState encode(const Tensor& image, const NetworkSpec& spec, const WeightStore& weights) {
  spec.validate();
  check_weights(spec, weights);
  if (image.channels() != spec.input_channels) {
    throw Error(ErrorCode::Shape, fmt::format("encode: image has {} channels, network expects {}",
                                              image.channels(), spec.input_channels));
  }
  const std::size_t multiple = std::size_t{1} << spec.levels;
  if (image.height() % multiple != 0 || image.width() % multiple != 0) {
    throw Error(ErrorCode::Shape, fmt::format("encode: {}x{} input is not a multiple of {}",
                                              image.height(), image.width(), multiple));
  }
  EncodedState state;
  Tensor x = image;
  for (std::size_t l = 0; l < spec.levels; ++l) {
    x = run_stage(spec.encoder[l], std::move(x), weights);
    WaveletBands bands = haar_pool(x);
    state.skips.push_back({std::move(bands.lh), std::move(bands.hl), std::move(bands.hh)});
    x = std::move(bands.ll);
    state.sites[site_name(l + 1, spec.levels)] = x;
  }
  state.trunk = std::move(x);
  return state;
}

Tensor decode(const EncodedState& state, const NetworkSpec& spec, const WeightStore& weights,
              const SiteTransforms& transforms) {
  spec.validate();
  check_weights(spec, weights);
  if (state.skips.size() != spec.levels) {
    throw Error(ErrorCode::Shape, fmt::format("decode: state holds {} skip levels, network has {}",
                                              state.skips.size(), spec.levels));
  }
  const auto known = spec.site_names();
  for (const auto& [site, fn] : transforms) {
    if (std::find(known.begin(), known.end(), site) == known.end()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("decode: unknown transfer site '{}'", site));
    }
  }
  Tensor x = state.trunk;
  for (std::size_t l = spec.levels; l-- > 0;) {
    if (const auto it = transforms.find(site_name(l + 1, spec.levels)); it != transforms.end()) {
      Tensor transformed = it->second(x);
      if (transformed.shape() != x.shape()) {
        throw Error(ErrorCode::Shape, fmt::format("decode: transform at '{}' changed the feature shape",
                                                  it->first));
      }
      x = std::move(transformed);
    }
    const SkipBands& skip = state.skips[l];
    x = haar_unpool({std::move(x), skip.lh, skip.hl, skip.hh});
    x = run_stage(spec.decoder[l], std::move(x), weights);
  }
  return x;
}

Network make_identity_network(std::size_t levels) {
  if (levels == 0) throw Error(ErrorCode::InvalidArgument, "identity network needs levels >= 1");
  Network net;
  net.spec.input_channels = 1;
  net.spec.levels = levels;
  const ConvWeights identity{1, 1, 1, 1, {1.0}, {0.0}};
  for (std::size_t l = 0; l < levels; ++l) {
    const std::string enc = fmt::format("enc{}_conv", l);
    const std::string dec = fmt::format("dec{}_conv", l);
    net.spec.encoder.push_back({Layer::conv(enc, 1, 1, 1, 1)});
    net.spec.decoder.push_back({Layer::conv(dec, 1, 1, 1, 1)});
    net.weights[enc] = identity;
    net.weights[dec] = identity;
  }
  net.spec.transfer_sites = net.spec.site_names();
  return net;
}

}  // namespace usstyle
