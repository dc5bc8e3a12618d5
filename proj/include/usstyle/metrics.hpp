#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "usstyle/tensor.hpp"

namespace usstyle {

struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;  // 0 or 1, row-major

  Mask() = default;
  Mask(std::size_t h, std::size_t w) : height(h), width(w), data(h * w, 0) {}

  std::uint8_t& operator()(std::size_t y, std::size_t x) { return data[y * width + x]; }
  std::uint8_t operator()(std::size_t y, std::size_t x) const { return data[y * width + x]; }
  std::size_t area() const;
  bool operator==(const Mask&) const = default;
};

// Foreground where the first channel is >= 0.5.
Mask mask_from_tensor(const Tensor& t);
Tensor mask_to_tensor(const Mask& m);

// Mean SSIM over all positions where an 11x11 Gaussian window (sigma 1.5)
// fits, with K1 = 0.01, K2 = 0.03 and dynamic range 1. Images narrower than
// 11 pixels use the largest odd window that fits.
double ssim(const Tensor& a, const Tensor& b);

// 10*log10(1/MSE), capped at 100 dB (identical inputs).
double psnr(const Tensor& a, const Tensor& b);
inline constexpr double kPsnrCap = 100.0;

// Both-empty masks score 1.
double dice(const Mask& a, const Mask& b);
double jaccard(const Mask& a, const Mask& b);

// Foreground pixels with a 4-neighbour that is background or off-image.
std::vector<std::pair<std::size_t, std::size_t>> mask_boundary(const Mask& m);

// Symmetric Hausdorff distance in pixels between the two masks' boundaries.
double hausdorff_boundary(const Mask& a, const Mask& b);

}  // namespace usstyle
