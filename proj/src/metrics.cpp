#include "usstyle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "usstyle/error.hpp"

namespace usstyle {

std::size_t Mask::area() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

Mask mask_from_tensor(const Tensor& t) {
  Mask m(t.height(), t.width());
  const auto src = t.channel(0);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = src[i] >= 0.5 ? 1 : 0;
  return m;
}

Tensor mask_to_tensor(const Mask& m) {
  Tensor t(1, m.height, m.width);
  auto dst = t.channel(0);
  for (std::size_t i = 0; i < m.data.size(); ++i) dst[i] = m.data[i];
  return t;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::Shape,
                fmt::format("{}: shapes {}x{}x{} and {}x{}x{} differ", what, a.channels(),
                            a.height(), a.width(), b.channels(), b.height(), b.width()));
  }
}

void require_same_shape(const Mask& a, const Mask& b, std::string_view what) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::Shape, fmt::format("{}: mask shapes {}x{} and {}x{} differ", what,
                                              a.height, a.width, b.height, b.width));
  }
}

std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> g(size);
  const double centre = static_cast<double>(size - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - centre;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable 'valid' filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t k = g.size();
  const std::size_t ow = w - k + 1;
  const std::size_t oh = h - k + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += g[i] * src[y * w + x + i];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += g[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "ssim");
  if (a.channels() != 1) {
    throw Error(ErrorCode::Shape, fmt::format("ssim: expected 1 channel, got {}", a.channels()));
  }
  if (a.empty()) throw Error(ErrorCode::Shape, "ssim: empty image");
  constexpr double kC1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double kC2 = (0.03 * 1.0) * (0.03 * 1.0);
  std::size_t win = std::min<std::size_t>({11, a.height(), a.width()});
  if (win % 2 == 0) --win;
  const auto g = gaussian_window(win, 1.5);

  const std::size_t h = a.height();
  const std::size_t w = a.width();
  const auto pa = a.channel(0);
  const auto pb = b.channel(0);
  std::vector<double> va(pa.begin(), pa.end());
  std::vector<double> vb(pb.begin(), pb.end());
  std::vector<double> aa(h * w), bb(h * w), ab(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = filter_valid(va, h, w, g);
  const auto mu_b = filter_valid(vb, h, w, g);
  const auto e_aa = filter_valid(aa, h, w, g);
  const auto e_bb = filter_valid(bb, h, w, g);
  const auto e_ab = filter_valid(ab, h, w, g);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
             ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
  }
  return total / static_cast<double>(mu_a.size());
}

double psnr(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw Error(ErrorCode::Shape, "psnr: empty image");
  const auto da = a.data();
  const auto db = b.data();
  double sq = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) sq += (da[i] - db[i]) * (da[i] - db[i]);
  const double mse = sq / static_cast<double>(da.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::pair<std::size_t, std::size_t> overlap_counts(const Mask& a, const Mask& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += (a.data[i] && b.data[i]) ? 1 : 0;
    uni += (a.data[i] || b.data[i]) ? 1 : 0;
  }
  return {inter, uni};
}

}  // namespace

double dice(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "dice");
  const std::size_t total = a.area() + b.area();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(overlap_counts(a, b).first) / static_cast<double>(total);
}

double jaccard(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "jaccard");
  const auto [inter, uni] = overlap_counts(a, b);
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::pair<std::size_t, std::size_t>> mask_boundary(const Mask& m) {
  std::vector<std::pair<std::size_t, std::size_t>> points;
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) {
      if (!m(y, x)) continue;
      const bool edge = y == 0 || x == 0 || y + 1 == m.height || x + 1 == m.width;
      if (edge || !m(y - 1, x) || !m(y + 1, x) || !m(y, x - 1) || !m(y, x + 1)) {
        points.emplace_back(y, x);
      }
    }
  }
  return points;
}

namespace {

double directed_hausdorff(const std::vector<std::pair<std::size_t, std::size_t>>& from,
                          const std::vector<std::pair<std::size_t, std::size_t>>& to) {
  double worst = 0.0;
  for (const auto& [fy, fx] : from) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& [ty, tx] : to) {
      const double dy = static_cast<double>(fy) - static_cast<double>(ty);
      const double dx = static_cast<double>(fx) - static_cast<double>(tx);
      nearest = std::min(nearest, dy * dy + dx * dx);
      if (nearest <= worst) break;  // cannot raise the maximum
    }
    worst = std::max(worst, nearest);
  }
  return std::sqrt(worst);
}

}  // namespace

double hausdorff_boundary(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "hausdorff_boundary");
  const auto ba = mask_boundary(a);
  const auto bb = mask_boundary(b);
  if (ba.empty() || bb.empty()) throw Error(ErrorCode::InvalidArgument, "hausdorff_boundary: empty mask");
  return std::max(directed_hausdorff(ba, bb), directed_hausdorff(bb, ba));
}

}  // namespace usstyle
