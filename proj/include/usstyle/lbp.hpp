#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "usstyle/tensor.hpp"

namespace usstyle {

enum class LbpSampling {
  Nearest,   // neighbours snapped to the nearest pixel
  Bilinear,  // neighbours interpolated at the exact circle position
};

std::string_view to_string(LbpSampling sampling);
LbpSampling parse_lbp_sampling(std::string_view name);

// Uniform (u2) LBP: P neighbours on a circle of radius R.
struct LbpConfig {
  std::size_t points = 8;
  double radius = 3.0;
  LbpSampling sampling = LbpSampling::Nearest;

  void validate() const;
  // P(P-1)+2 uniform labels plus one catch-all.
  std::size_t bins() const noexcept { return points * (points - 1) + 3; }
};

struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint16_t> labels;
};

// Label for every pixel at least ceil(R) away from the border. Bit p is set
// when neighbour p (angle 2*pi*p/P counter-clockwise from east) is >= the
// centre. Uniform codes (at most two circular transitions) are labelled
// 0..P(P-1)+1 in ascending code order; every other code gets the last label.
LabelMap lbp_spectrum(const Tensor& gray, const LbpConfig& cfg);

// Uniform-code label of an arbitrary P-bit code.
std::uint16_t uniform_label(std::uint32_t code, std::size_t points);

using LbpHistogram = std::vector<double>;

// Normalized label histogram with cfg.bins() entries.
LbpHistogram lbp_histogram(const LabelMap& labels, std::size_t bins);

// Pearson correlation of two histograms' bins. If either has zero variance
// the result is 1 for identical histograms and 0 otherwise.
double hist_correlation(const LbpHistogram& a, const LbpHistogram& b);

}  // namespace usstyle
