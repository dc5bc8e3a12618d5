#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace usstyle {

struct Shape {
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t plane() const noexcept { return h * w; }
  std::size_t size() const noexcept { return c * h * w; }
  bool operator==(const Shape&) const = default;
};

// Dense (channels, height, width) array of doubles, channel-major then
// row-major. Images live in [0,1]; feature maps are unbounded.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : Tensor(Shape{c, h, w}, fill) {}
  // Throws Error(Shape) if data.size() != shape.size() and
  // Error(InvalidArgument) if any value is not finite.
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.c; }
  std::size_t height() const noexcept { return shape_.h; }
  std::size_t width() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.h + y) * shape_.w + x];
  }
  double operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.h + y) * shape_.w + x];
  }

  std::span<double> channel(std::size_t c) {
    return {data_.data() + c * shape_.plane(), shape_.plane()};
  }
  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * shape_.plane(), shape_.plane()};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Per-channel mean and population standard deviation.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t channels() const noexcept { return mean.size(); }
};

ChannelStats channel_stats(const Tensor& t);

// Rec. 601 luma for RGB input; identity for single-channel input.
Tensor to_grayscale(const Tensor& t);

Tensor clamp01(Tensor t);

// Copy of rows [row_begin, row_end) of every channel.
Tensor slice_rows(const Tensor& t, std::size_t row_begin, std::size_t row_end);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace usstyle
