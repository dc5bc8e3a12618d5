#include "usstyle/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "usstyle/error.hpp"

namespace usstyle {

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw Error(ErrorCode::Shape,
                fmt::format("tensor data length {} does not match shape {}x{}x{}", data_.size(),
                            shape_.c, shape_.h, shape_.w));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::InvalidArgument, "tensor data contains non-finite values");
  }
}

ChannelStats channel_stats(const Tensor& t) {
  if (t.empty()) throw Error(ErrorCode::Shape, "channel_stats: empty tensor");
  ChannelStats stats;
  stats.mean.resize(t.channels());
  stats.std.resize(t.channels());
  const auto n = static_cast<double>(t.shape().plane());
  for (std::size_t c = 0; c < t.channels(); ++c) {
    const auto values = t.channel(c);
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    stats.mean[c] = mean;
    stats.std[c] = std::sqrt(sq / n);
  }
  return stats;
}

Tensor to_grayscale(const Tensor& t) {
  if (t.channels() == 1) return t;
  if (t.channels() != 3) {
    throw Error(ErrorCode::Shape,
                fmt::format("to_grayscale: unsupported channel count {}", t.channels()));
  }
  Tensor out(1, t.height(), t.width());
  const auto r = t.channel(0);
  const auto g = t.channel(1);
  const auto b = t.channel(2);
  auto dst = out.channel(0);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  }
  return out;
}

Tensor clamp01(Tensor t) {
  for (double& v : t.data()) v = std::clamp(v, 0.0, 1.0);
  return t;
}

Tensor slice_rows(const Tensor& t, std::size_t row_begin, std::size_t row_end) {
  if (row_begin > row_end || row_end > t.height()) {
    throw Error(ErrorCode::Shape,
                fmt::format("slice_rows: range [{}, {}) outside height {}", row_begin, row_end,
                            t.height()));
  }
  Tensor out(t.channels(), row_end - row_begin, t.width());
  for (std::size_t c = 0; c < t.channels(); ++c) {
    const auto src = t.channel(c).subspan(row_begin * t.width(), out.shape().plane());
    std::copy(src.begin(), src.end(), out.channel(c).begin());
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw Error(ErrorCode::Shape, "max_abs_diff: shape mismatch");
  double m = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

}  // namespace usstyle
