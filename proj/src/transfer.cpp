#include "usstyle/transfer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "usstyle/error.hpp"
#include "usstyle/image_io.hpp"
#include "usstyle/wavelet.hpp"

namespace usstyle {

std::string_view to_string(TransferMethod method) {
  switch (method) {
    case TransferMethod::AdaIN: return "adain";
    case TransferMethod::AdaINDepth: return "adain-d";
    case TransferMethod::WCT: return "wct";
  }
  return "unknown";
}

TransferMethod parse_transfer_method(std::string_view name) {
  if (name == "adain") return TransferMethod::AdaIN;
  if (name == "adain-d" || name == "adain_d") return TransferMethod::AdaINDepth;
  if (name == "wct") return TransferMethod::WCT;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown transfer method '{}'", name));
}

void DepthWindowConfig::validate() const {
  if (!(stride_frac > 0.0 && stride_frac <= bandwidth_frac && bandwidth_frac <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("depth window needs 0 < stride ({}) <= bandwidth ({}) <= 1",
                            stride_frac, bandwidth_frac));
  }
}

void TransferConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "transfer epsilon must be > 0");
  window.validate();
}

std::pair<RowWindow, RowWindow> depth_windows(std::size_t height, const DepthWindowConfig& cfg) {
  if (height < 3) {
    throw Error(ErrorCode::Shape, fmt::format("depth windows need height >= 3, got {}", height));
  }
  // The small slack keeps exact fractions such as 2/3 * 6 from rounding up.
  const double raw = cfg.bandwidth_frac * static_cast<double>(height);
  auto band = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  band = std::clamp<std::size_t>(band, 1, height);
  return {RowWindow{0, band}, RowWindow{height - band, height}};
}

Tensor adain(const Tensor& x, const ChannelStats& target, double epsilon) {
  if (target.channels() != x.channels() || target.std.size() != x.channels()) {
    throw Error(ErrorCode::Shape, fmt::format("adain: {} target channels for {}-channel input",
                                              target.channels(), x.channels()));
  }
  const ChannelStats source = channel_stats(x);
  Tensor out(x.shape());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto src = x.channel(c);
    auto dst = out.channel(c);
    if (source.std[c] == 0.0) {
      std::fill(dst.begin(), dst.end(), target.mean[c]);
      continue;
    }
    const double scale = target.std[c] / std::max(source.std[c], epsilon);
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = scale * (src[i] - source.mean[c]) + target.mean[c];
    }
  }
  return out;
}

Tensor adain_depth(const Tensor& x, const Tensor& y, const DepthWindowConfig& cfg, double epsilon) {
  cfg.validate();
  if (x.channels() != y.channels()) {
    throw Error(ErrorCode::Shape, fmt::format("adain_depth: content has {} channels, style {}",
                                              x.channels(), y.channels()));
  }
  const auto [top, bottom] = depth_windows(x.height(), cfg);
  std::array<ChannelStats, 2> targets;
  if (cfg.whole_style) {
    targets[0] = targets[1] = channel_stats(y);
  } else {
    const auto [style_top, style_bottom] = depth_windows(y.height(), cfg);
    targets[0] = channel_stats(slice_rows(y, style_top.begin, style_top.end));
    targets[1] = channel_stats(slice_rows(y, style_bottom.begin, style_bottom.end));
  }
  const Tensor upper = adain(slice_rows(x, top.begin, top.end), targets[0], epsilon);
  const Tensor lower = adain(slice_rows(x, bottom.begin, bottom.end), targets[1], epsilon);

  Tensor out(x.shape());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t r = 0; r < x.height(); ++r) {
      const bool in_top = r < top.end;
      const bool in_bottom = r >= bottom.begin;
      for (std::size_t col = 0; col < x.width(); ++col) {
        double v;
        if (in_top && in_bottom) {
          v = 0.5 * (upper(c, r, col) + lower(c, r - bottom.begin, col));
        } else if (in_top) {
          v = upper(c, r, col);
        } else {
          v = lower(c, r - bottom.begin, col);
        }
        out(c, r, col) = v;
      }
    }
  }
  return out;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CenteredFeatures {
  Eigen::MatrixXd centered;  // channels x samples
  Eigen::VectorXd mean;
};

CenteredFeatures center(const Tensor& t) {
  const auto c = static_cast<Eigen::Index>(t.channels());
  const auto n = static_cast<Eigen::Index>(t.shape().plane());
  const Eigen::Map<const RowMatrix> m(t.data().data(), c, n);
  CenteredFeatures f;
  f.mean = m.rowwise().mean();
  f.centered = m.colwise() - f.mean;
  return f;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& centered) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(centered.rows(), centered.rows());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return cov / static_cast<double>(centered.cols());
}

void require_samples(const Tensor& t, std::string_view which) {
  if (t.shape().plane() < 2) {
    throw Error(ErrorCode::Shape,
                fmt::format("wct: {} feature has fewer than 2 spatial samples", which));
  }
}

}  // namespace

std::vector<double> channel_covariance(const Tensor& t) {
  require_samples(t, "input");
  const Eigen::MatrixXd cov = covariance(center(t).centered);
  std::vector<double> out(static_cast<std::size_t>(cov.size()));
  Eigen::Map<RowMatrix>(out.data(), cov.rows(), cov.cols()) = cov;
  return out;
}

Tensor wct(const Tensor& x, const Tensor& y, double epsilon) {
  if (x.channels() != y.channels()) {
    throw Error(ErrorCode::Shape,
                fmt::format("wct: content has {} channels, style {}", x.channels(), y.channels()));
  }
  require_samples(x, "content");
  require_samples(y, "style");

  const CenteredFeatures content = center(x);
  const CenteredFeatures style = center(y);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> content_eig(covariance(content.centered));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> style_eig(covariance(style.centered));

  const Eigen::VectorXd inv_sqrt =
      content_eig.eigenvalues().cwiseMax(epsilon).cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd colour_sqrt = style_eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();

  const Eigen::MatrixXd& ec = content_eig.eigenvectors();
  const Eigen::MatrixXd& es = style_eig.eigenvectors();
  const Eigen::MatrixXd whiten = ec * inv_sqrt.asDiagonal() * ec.transpose();
  const Eigen::MatrixXd colour = es * colour_sqrt.asDiagonal() * es.transpose();
  const Eigen::MatrixXd transform = colour * whiten;

  RowMatrix result = (transform * content.centered).colwise() + style.mean;
  Tensor out(x.shape());
  Eigen::Map<RowMatrix>(out.data().data(), result.rows(), result.cols()) = result;
  return out;
}

Tensor transfer_image(const Tensor& content, const Tensor& style, const Network& net,
                      const TransferConfig& cfg) {
  cfg.validate();
  const std::size_t multiple = std::size_t{1} << net.spec.levels;
  const PaddedTensor padded_content = pad_to_multiple(content, multiple);
  const PaddedTensor padded_style = pad_to_multiple(style, multiple);

  const EncodedState content_state = encode(padded_content.tensor, net.spec, net.weights);
  const EncodedState style_state = encode(padded_style.tensor, net.spec, net.weights);

  const std::vector<std::string>& sites = cfg.sites.empty() ? net.spec.transfer_sites : cfg.sites;
  SiteTransforms transforms;
  for (const std::string& site : sites) {
    const auto it = style_state.sites.find(site);
    if (it == style_state.sites.end()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("transfer: unknown site '{}'", site));
    }
    const Tensor& style_feature = it->second;
    switch (cfg.method) {
      case TransferMethod::AdaIN:
        transforms[site] = [stats = channel_stats(style_feature), eps = cfg.epsilon](const Tensor& f) {
          return adain(f, stats, eps);
        };
        break;
      case TransferMethod::AdaINDepth:
        transforms[site] = [&style_feature, &cfg](const Tensor& f) {
          // Too few rows for two windows: fall back to whole-map statistics.
          if (f.height() < 3 || style_feature.height() < 3) {
            return adain(f, channel_stats(style_feature), cfg.epsilon);
          }
          return adain_depth(f, style_feature, cfg.window, cfg.epsilon);
        };
        break;
      case TransferMethod::WCT:
        transforms[site] = [&style_feature, eps = cfg.epsilon](const Tensor& f) {
          return wct(f, style_feature, eps);
        };
        break;
    }
  }
  const Tensor decoded = decode(content_state, net.spec, net.weights, transforms);
  return clamp01(crop(decoded, padded_content.original));
}

Tensor hist_equalize(const Tensor& img) {
  if (img.channels() != 1) {
    throw Error(ErrorCode::Shape,
                fmt::format("hist_equalize: expected 1 channel, got {}", img.channels()));
  }
  if (img.empty()) throw Error(ErrorCode::Shape, "hist_equalize: empty image");
  std::array<std::size_t, 256> counts{};
  for (double v : img.data()) ++counts[quantize_u8(v)];
  std::array<double, 256> cdf{};
  std::size_t running = 0;
  const auto total = static_cast<double>(img.size());
  for (std::size_t k = 0; k < 256; ++k) {
    running += counts[k];
    cdf[k] = static_cast<double>(running) / total;
  }
  Tensor out(img.shape());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = cdf[quantize_u8(src[i])];
  return out;
}

}  // namespace usstyle
