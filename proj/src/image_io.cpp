#include "usstyle/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "usstyle/error.hpp"

namespace usstyle {
namespace fs = std::filesystem;

namespace {

constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<unsigned char> read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, fmt::format("{}: no such file", path.string()));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("{}: cannot open for reading", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

Tensor decode_png(const std::vector<unsigned char>& bytes, const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::CorruptData,
                fmt::format("{}: invalid PNG data ({})", path.string(), image.message));
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat,
                fmt::format("{}: only 8-bit PNG images are supported", path.string()));
  }
  const bool colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = colour ? 3 : 1;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::CorruptData,
                fmt::format("{}: corrupt PNG data ({})", path.string(), message));
  }
  const std::size_t h = image.height;
  const std::size_t w = image.width;
  Tensor t(channels, h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        t(c, y, x) = pixels[(y * w + x) * channels + c] / 255.0;
      }
    }
  }
  return t;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_pgm_token(const std::vector<unsigned char>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
    token.push_back(static_cast<char>(bytes[pos++]));
  }
  return token;
}

std::size_t parse_pgm_number(const std::string& token, const fs::path& path) {
  if (token.empty() || !std::all_of(token.begin(), token.end(),
                                    [](unsigned char ch) { return std::isdigit(ch); })) {
    throw Error(ErrorCode::CorruptData,
                fmt::format("{}: malformed PGM header field '{}'", path.string(), token));
  }
  return std::stoul(token);
}

Tensor decode_pgm(const std::vector<unsigned char>& bytes, const fs::path& path) {
  std::size_t pos = 2;
  const std::size_t w = parse_pgm_number(next_pgm_token(bytes, pos), path);
  const std::size_t h = parse_pgm_number(next_pgm_token(bytes, pos), path);
  const std::size_t maxval = parse_pgm_number(next_pgm_token(bytes, pos), path);
  if (maxval == 0 || maxval > 255) {
    throw Error(ErrorCode::UnsupportedFormat,
                fmt::format("{}: PGM maxval {} is not 8-bit", path.string(), maxval));
  }
  if (w == 0 || h == 0) {
    throw Error(ErrorCode::CorruptData, fmt::format("{}: PGM has zero size", path.string()));
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::CorruptData, fmt::format("{}: truncated PGM header", path.string()));
  }
  ++pos;
  if (bytes.size() - pos < w * h) {
    throw Error(ErrorCode::CorruptData,
                fmt::format("{}: PGM raster has {} bytes, expected {}", path.string(),
                            bytes.size() - pos, w * h));
  }
  Tensor t(1, h, w);
  auto dst = t.channel(0);
  for (std::size_t i = 0; i < w * h; ++i) {
    dst[i] = static_cast<double>(bytes[pos + i]) / static_cast<double>(maxval);
  }
  return t;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: cannot open for writing", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: write failed", path.string()));
}

std::vector<unsigned char> interleave_u8(const Tensor& t) {
  const std::size_t h = t.height();
  const std::size_t w = t.width();
  const std::size_t channels = t.channels();
  std::vector<unsigned char> pixels(h * w * channels);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        pixels[(y * w + x) * channels + c] = quantize_u8(t(c, y, x));
      }
    }
  }
  return pixels;
}

}  // namespace

std::uint8_t quantize_u8(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

Tensor load_image(const fs::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && std::isdigit(bytes[1])) {
    throw Error(ErrorCode::UnsupportedFormat,
                fmt::format("{}: only binary PGM (P5) is supported", path.string()));
  }
  throw Error(ErrorCode::UnsupportedFormat,
              fmt::format("{}: not a PNG or PGM image", path.string()));
}

void save_image(const Tensor& t, const fs::path& path) {
  if (t.channels() != 1 && t.channels() != 3) {
    throw Error(ErrorCode::Shape, fmt::format("{}: cannot save {}-channel image", path.string(),
                                              t.channels()));
  }
  if (t.empty()) throw Error(ErrorCode::Shape, fmt::format("{}: empty image", path.string()));
  const std::string ext = lower_extension(path);
  const auto pixels = interleave_u8(t);
  if (ext == ".pgm") {
    if (t.channels() != 1) {
      throw Error(ErrorCode::UnsupportedFormat,
                  fmt::format("{}: PGM output requires a single channel", path.string()));
    }
    const std::string header = fmt::format("P5\n{} {}\n255\n", t.width(), t.height());
    std::vector<unsigned char> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), pixels.begin(), pixels.end());
    write_bytes(path, bytes);
    return;
  }
  if (ext != ".png") {
    throw Error(ErrorCode::UnsupportedFormat,
                fmt::format("{}: output extension must be .png or .pgm", path.string()));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(t.width());
  image.height = static_cast<png_uint_32>(t.height());
  image.format = t.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::Io, fmt::format("{}: PNG encoding failed", path.string()));
  }
  std::vector<unsigned char> bytes(size);
  if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::Io, fmt::format("{}: PNG encoding failed", path.string()));
  }
  bytes.resize(size);
  write_bytes(path, bytes);
}

}  // namespace usstyle
