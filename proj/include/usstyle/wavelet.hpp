#pragma once

#include <cstddef>

#include "usstyle/tensor.hpp"

namespace usstyle {

// The four Haar sub-bands of one pooling step. ll is the low-frequency
// band; lh, hl and hh are the high-frequency (detail) bands.
struct WaveletBands {
  Tensor ll;
  Tensor lh;
  Tensor hl;
  Tensor hh;
};

// Orthonormal 2x2 Haar analysis. For each block [[a,b],[c,d]]:
//   ll = (a+b+c+d)/2   lh = (a+b-c-d)/2
//   hl = (a-b+c-d)/2   hh = (a-b-c+d)/2
// Requires even height and width.
WaveletBands haar_pool(const Tensor& x);

// Exact inverse of haar_pool. All four bands must share a shape.
Tensor haar_unpool(const WaveletBands& bands);

struct PaddedTensor {
  Tensor tensor;
  Shape original;
};

// Extends the bottom and right edges by replicating the last row/column
// until height and width are multiples of `multiple` (a power of two).
PaddedTensor pad_to_multiple(const Tensor& x, std::size_t multiple);

// Top-left crop back to `shape` (channel count must match).
Tensor crop(const Tensor& x, const Shape& shape);

}  // namespace usstyle
