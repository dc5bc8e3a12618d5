#include <algorithm>
#include <cctype>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "usstyle/error.hpp"
#include "usstyle/network.hpp"

namespace usstyle {
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'W', 'T', 'S', '1'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<unsigned char>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

double get_f32(const unsigned char* p) {
  return static_cast<double>(std::bit_cast<float>(get_u32(p)));
}

}  // namespace

void check_weights(const NetworkSpec& spec, const WeightStore& weights) {
  const auto check_stage = [&](const Stage& stage) {
    for (const Layer& layer : stage) {
      if (layer.kind != Layer::Kind::Conv) continue;
      const auto it = weights.find(layer.name);
      if (it == weights.end()) {
        throw Error(ErrorCode::Shape, fmt::format("weights: missing layer '{}'", layer.name));
      }
      const ConvWeights& w = it->second;
      const bool shape_ok = w.out_channels == layer.out_channels &&
                            w.in_channels == layer.in_channels && w.kernel_h == layer.kernel_h &&
                            w.kernel_w == layer.kernel_w;
      const bool sizes_ok =
          w.kernel.size() == w.out_channels * w.in_channels * w.kernel_h * w.kernel_w &&
          w.bias.size() == w.out_channels;
      if (!shape_ok || !sizes_ok) {
        throw Error(ErrorCode::Shape,
                    fmt::format("weights: layer '{}' is {}x{}x{}x{}, network expects {}x{}x{}x{}",
                                layer.name, w.out_channels, w.in_channels, w.kernel_h, w.kernel_w,
                                layer.out_channels, layer.in_channels, layer.kernel_h,
                                layer.kernel_w));
      }
    }
  };
  for (const auto& s : spec.encoder) check_stage(s);
  for (const auto& s : spec.decoder) check_stage(s);
}

void save_weights(const WeightStore& weights, const fs::path& path) {
  std::string header;
  for (const auto& [name, w] : weights) {
    if (name.empty() || std::any_of(name.begin(), name.end(),
                                    [](unsigned char ch) { return std::isspace(ch); })) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("weights: invalid layer name '{}'", name));
    }
    header += fmt::format("{} {} {} {} {} {}\n", name, w.out_channels, w.in_channels, w.kernel_h,
                          w.kernel_w, w.bias.size());
  }
  std::vector<unsigned char> bytes(std::begin(kMagic), std::end(kMagic));
  put_u32(bytes, static_cast<std::uint32_t>(header.size()));
  bytes.insert(bytes.end(), header.begin(), header.end());
  for (const auto& [name, w] : weights) {
    for (double v : w.kernel) put_f32(bytes, v);
    for (double v : w.bias) put_f32(bytes, v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: cannot open for writing", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: write failed", path.string()));
}

WeightStore load_weights(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, fmt::format("{}: no such file", path.string()));
  }
  std::ifstream in(path, std::ios::binary);
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::Format, fmt::format("{}: not a WTS1 weight file", path.string()));
  }
  const std::size_t header_len = get_u32(bytes.data() + 4);
  if (bytes.size() - 8 < header_len) {
    throw Error(ErrorCode::Truncated, fmt::format("{}: header is truncated", path.string()));
  }
  std::istringstream header(std::string(bytes.begin() + 8, bytes.begin() + 8 + header_len));

  struct Record {
    std::string name;
    ConvWeights w;
    std::size_t bias_len;
  };
  std::vector<Record> records;
  std::string line;
  while (std::getline(header, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Record r;
    if (!(fields >> r.name >> r.w.out_channels >> r.w.in_channels >> r.w.kernel_h >>
          r.w.kernel_w >> r.bias_len)) {
      throw Error(ErrorCode::Format, fmt::format("{}: malformed header line '{}'", path.string(), line));
    }
    records.push_back(std::move(r));
  }

  std::size_t pos = 8 + header_len;
  WeightStore store;
  for (Record& r : records) {
    const std::size_t kernel_len =
        r.w.out_channels * r.w.in_channels * r.w.kernel_h * r.w.kernel_w;
    const std::size_t need = 4 * (kernel_len + r.bias_len);
    if (bytes.size() - pos < need) {
      throw Error(ErrorCode::Truncated,
                  fmt::format("{}: blob for '{}' needs {} floats, {} available", path.string(),
                              r.name, kernel_len + r.bias_len, (bytes.size() - pos) / 4));
    }
    r.w.kernel.resize(kernel_len);
    for (double& v : r.w.kernel) {
      v = get_f32(bytes.data() + pos);
      pos += 4;
    }
    r.w.bias.resize(r.bias_len);
    for (double& v : r.w.bias) {
      v = get_f32(bytes.data() + pos);
      pos += 4;
    }
    if (!store.emplace(r.name, std::move(r.w)).second) {
      throw Error(ErrorCode::Format, fmt::format("{}: duplicate layer '{}'", path.string(), r.name));
    }
  }
  if (pos != bytes.size()) {
    throw Error(ErrorCode::Format,
                fmt::format("{}: {} trailing bytes after weight blobs", path.string(), bytes.size() - pos));
  }
  return store;
}

}  // namespace usstyle
