#include "usstyle/lbp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "usstyle/error.hpp"

namespace usstyle {

std::string_view to_string(LbpSampling sampling) {
  return sampling == LbpSampling::Nearest ? "nearest" : "bilinear";
}

LbpSampling parse_lbp_sampling(std::string_view name) {
  if (name == "nearest") return LbpSampling::Nearest;
  if (name == "bilinear") return LbpSampling::Bilinear;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown LBP sampling '{}'", name));
}

void LbpConfig::validate() const {
  if (points < 4 || points > 16) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("LBP points {} outside [4, 16]", points));
  }
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "LBP radius must be > 0");
}

namespace {

std::size_t circular_transitions(std::uint32_t code, std::size_t points) {
  const std::uint32_t mask = (1u << points) - 1u;
  const std::uint32_t rotated = ((code >> 1) | (code << (points - 1))) & mask;
  return static_cast<std::size_t>(std::popcount(code ^ rotated));
}

std::vector<std::uint16_t> label_table(std::size_t points) {
  const std::uint32_t codes = 1u << points;
  const auto non_uniform = static_cast<std::uint16_t>(points * (points - 1) + 2);
  std::vector<std::uint16_t> table(codes, non_uniform);
  std::uint16_t next = 0;
  for (std::uint32_t code = 0; code < codes; ++code) {
    if (circular_transitions(code, points) <= 2) table[code] = next++;
  }
  return table;
}

double snap(double v) { return std::round(v * 1e8) / 1e8; }

}  // namespace

std::uint16_t uniform_label(std::uint32_t code, std::size_t points) {
  std::uint16_t label = 0;
  for (std::uint32_t c = 0; c < code; ++c) {
    if (circular_transitions(c, points) <= 2) ++label;
  }
  if (circular_transitions(code, points) <= 2) return label;
  return static_cast<std::uint16_t>(points * (points - 1) + 2);
}

LabelMap lbp_spectrum(const Tensor& gray, const LbpConfig& cfg) {
  cfg.validate();
  if (gray.channels() != 1) {
    throw Error(ErrorCode::Shape, fmt::format("lbp: expected 1 channel, got {}", gray.channels()));
  }
  const double min_extent = 2.0 * cfg.radius + 1.0;
  if (static_cast<double>(gray.height()) <= min_extent ||
      static_cast<double>(gray.width()) <= min_extent) {
    throw Error(ErrorCode::Shape, fmt::format("lbp: {}x{} image too small for radius {}",
                                              gray.height(), gray.width(), cfg.radius));
  }
  const auto margin = static_cast<std::size_t>(std::ceil(cfg.radius));
  const std::size_t h = gray.height();
  const std::size_t w = gray.width();

  struct Offset {
    std::ptrdiff_t y0, x0;
    double fy, fx;
  };
  std::vector<Offset> offsets(cfg.points);
  for (std::size_t p = 0; p < cfg.points; ++p) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(cfg.points);
    const double dx = snap(cfg.radius * std::cos(angle));
    const double dy = snap(-cfg.radius * std::sin(angle));
    if (cfg.sampling == LbpSampling::Nearest) {
      offsets[p] = {static_cast<std::ptrdiff_t>(std::lround(dy)),
                    static_cast<std::ptrdiff_t>(std::lround(dx)), 0.0, 0.0};
    } else {
      const double fy = std::floor(dy);
      const double fx = std::floor(dx);
      offsets[p] = {static_cast<std::ptrdiff_t>(fy), static_cast<std::ptrdiff_t>(fx), dy - fy,
                    dx - fx};
    }
  }

  const auto table = label_table(cfg.points);
  const auto px = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    return gray(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  };

  LabelMap out;
  out.height = h - 2 * margin;
  out.width = w - 2 * margin;
  out.labels.resize(out.height * out.width);
  for (std::size_t y = margin; y < h - margin; ++y) {
    for (std::size_t x = margin; x < w - margin; ++x) {
      const double centre = gray(0, y, x);
      std::uint32_t code = 0;
      for (std::size_t p = 0; p < cfg.points; ++p) {
        const Offset& o = offsets[p];
        const auto sy = static_cast<std::ptrdiff_t>(y) + o.y0;
        const auto sx = static_cast<std::ptrdiff_t>(x) + o.x0;
        double value = px(sy, sx);
        if (o.fy != 0.0 || o.fx != 0.0) {
          // Zero-weight taps are skipped so the read never leaves the image.
          const double right = o.fx != 0.0 ? px(sy, sx + 1) : 0.0;
          const double below = o.fy != 0.0 ? px(sy + 1, sx) : 0.0;
          const double diag = (o.fx != 0.0 && o.fy != 0.0) ? px(sy + 1, sx + 1) : 0.0;
          value = (1.0 - o.fy) * ((1.0 - o.fx) * value + o.fx * right) +
                  o.fy * ((1.0 - o.fx) * below + o.fx * diag);
        }
        if (value >= centre) code |= 1u << p;
      }
      out.labels[(y - margin) * out.width + (x - margin)] = table[code];
    }
  }
  return out;
}

LbpHistogram lbp_histogram(const LabelMap& labels, std::size_t bins) {
  if (labels.labels.empty()) throw Error(ErrorCode::Shape, "lbp_histogram: empty label map");
  LbpHistogram hist(bins, 0.0);
  for (std::uint16_t label : labels.labels) {
    if (label >= bins) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("lbp_histogram: label {} outside {} bins", label, bins));
    }
    hist[label] += 1.0;
  }
  const auto total = static_cast<double>(labels.labels.size());
  for (double& v : hist) v /= total;
  return hist;
}

double hist_correlation(const LbpHistogram& a, const LbpHistogram& b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::Shape, fmt::format("hist_correlation: {} vs {} bins", a.size(), b.size()));
  }
  const auto n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return a == b ? 1.0 : 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace usstyle
