#include "usstyle/wavelet.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "usstyle/error.hpp"

namespace usstyle {

WaveletBands haar_pool(const Tensor& x) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) {
    throw Error(ErrorCode::Shape, fmt::format("haar_pool: height {} and width {} must be even",
                                              x.height(), x.width()));
  }
  const Shape half{x.channels(), x.height() / 2, x.width() / 2};
  WaveletBands bands{Tensor(half), Tensor(half), Tensor(half), Tensor(half)};
  for (std::size_t c = 0; c < half.c; ++c) {
    for (std::size_t y = 0; y < half.h; ++y) {
      for (std::size_t xx = 0; xx < half.w; ++xx) {
        const double a = x(c, 2 * y, 2 * xx);
        const double b = x(c, 2 * y, 2 * xx + 1);
        const double cc = x(c, 2 * y + 1, 2 * xx);
        const double d = x(c, 2 * y + 1, 2 * xx + 1);
        bands.ll(c, y, xx) = 0.5 * (a + b + cc + d);
        bands.lh(c, y, xx) = 0.5 * (a + b - cc - d);
        bands.hl(c, y, xx) = 0.5 * (a - b + cc - d);
        bands.hh(c, y, xx) = 0.5 * (a - b - cc + d);
      }
    }
  }
  return bands;
}

Tensor haar_unpool(const WaveletBands& bands) {
  const Shape& s = bands.ll.shape();
  if (bands.lh.shape() != s || bands.hl.shape() != s || bands.hh.shape() != s) {
    throw Error(ErrorCode::Shape, "haar_unpool: sub-band shapes disagree");
  }
  Tensor out(s.c, s.h * 2, s.w * 2);
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t y = 0; y < s.h; ++y) {
      for (std::size_t x = 0; x < s.w; ++x) {
        const double ll = bands.ll(c, y, x);
        const double lh = bands.lh(c, y, x);
        const double hl = bands.hl(c, y, x);
        const double hh = bands.hh(c, y, x);
        out(c, 2 * y, 2 * x) = 0.5 * (ll + lh + hl + hh);
        out(c, 2 * y, 2 * x + 1) = 0.5 * (ll + lh - hl - hh);
        out(c, 2 * y + 1, 2 * x) = 0.5 * (ll - lh + hl - hh);
        out(c, 2 * y + 1, 2 * x + 1) = 0.5 * (ll - lh - hl + hh);
      }
    }
  }
  return out;
}

PaddedTensor pad_to_multiple(const Tensor& x, std::size_t multiple) {
  if (x.empty()) throw Error(ErrorCode::Shape, "pad_to_multiple: empty tensor");
  if (multiple == 0 || (multiple & (multiple - 1)) != 0) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("pad_to_multiple: {} is not a power of two", multiple));
  }
  const auto round_up = [multiple](std::size_t n) { return (n + multiple - 1) / multiple * multiple; };
  const std::size_t h = round_up(x.height());
  const std::size_t w = round_up(x.width());
  if (h == x.height() && w == x.width()) return {x, x.shape()};
  Tensor out(x.channels(), h, w);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t sy = std::min(y, x.height() - 1);
      for (std::size_t xx = 0; xx < w; ++xx) {
        out(c, y, xx) = x(c, sy, std::min(xx, x.width() - 1));
      }
    }
  }
  return {std::move(out), x.shape()};
}

Tensor crop(const Tensor& x, const Shape& shape) {
  if (shape.c != x.channels() || shape.h > x.height() || shape.w > x.width()) {
    throw Error(ErrorCode::Shape, "crop: target shape exceeds tensor");
  }
  if (shape == x.shape()) return x;
  Tensor out(shape);
  for (std::size_t c = 0; c < shape.c; ++c) {
    for (std::size_t y = 0; y < shape.h; ++y) {
      for (std::size_t xx = 0; xx < shape.w; ++xx) out(c, y, xx) = x(c, y, xx);
    }
  }
  return out;
}

}  // namespace usstyle
