#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "usstyle/network.hpp"
#include "usstyle/tensor.hpp"

namespace usstyle {

enum class TransferMethod { AdaIN, AdaINDepth, WCT };

std::string_view to_string(TransferMethod method);
// Accepts "adain", "adain-d"/"adain_d", "wct".
TransferMethod parse_transfer_method(std::string_view name);

// Two overlapping row windows: rows [0, b) and [H-b, H) with
// b = ceil(bandwidth_frac * H). stride_frac is the nominal offset of the
// second window; the second window is always anchored to the bottom row.
struct DepthWindowConfig {
  double bandwidth_frac = 2.0 / 3.0;
  double stride_frac = 1.0 / 3.0;
  // Use whole-style statistics for both windows instead of matching windows.
  bool whole_style = false;

  void validate() const;
};

struct RowWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// The two windows for a feature map of `height` rows (height >= 3).
std::pair<RowWindow, RowWindow> depth_windows(std::size_t height, const DepthWindowConfig& cfg);

struct TransferConfig {
  TransferMethod method = TransferMethod::AdaINDepth;
  double epsilon = 1e-5;
  DepthWindowConfig window;
  // Sites to stylize; empty means the network's own transfer_sites.
  std::vector<std::string> sites;

  void validate() const;
};

// Per channel: sigma_y * (x - mu_x) / max(sigma_x, eps) + mu_y. A channel
// with sigma_x == 0 maps to the constant mu_y.
Tensor adain(const Tensor& x, const ChannelStats& target, double epsilon);

// Depth-windowed AdaIN: each of the two row windows of x is normalized to
// the statistics of the proportional window of y (or the whole of y), and
// rows covered by both windows take the mean of the two results.
Tensor adain_depth(const Tensor& x, const Tensor& y, const DepthWindowConfig& cfg, double epsilon);

// Whitening-colouring transform: x's channel covariance is whitened
// (eigenvalues clamped at eps) and recoloured with y's covariance, then
// y's channel means are added.
Tensor wct(const Tensor& x, const Tensor& y, double epsilon);

// Channel covariance (population normalization), c x c row-major.
std::vector<double> channel_covariance(const Tensor& t);

// Full pipeline: pad both images to the network's alignment, encode,
// stylize the content trunk at the configured sites, decode with the
// content's own skip bands, crop and clamp to [0,1].
Tensor transfer_image(const Tensor& content, const Tensor& style, const Network& net,
                      const TransferConfig& cfg);

// 256-bin histogram equalization of a single-channel image: each 8-bit
// level maps to its cumulative frequency.
Tensor hist_equalize(const Tensor& img);

}  // namespace usstyle
