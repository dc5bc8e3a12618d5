#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "usstyle/lbp.hpp"
#include "usstyle/tensor.hpp"

namespace usstyle {

// Whole-image descriptor used for retrieval: LBP histogram plus global
// mean and population standard deviation of the grayscale image.
struct ImageDescriptor {
  LbpHistogram histogram;
  double mean = 0.0;
  double std = 0.0;
};

ImageDescriptor describe_image(const Tensor& image, const LbpConfig& cfg);

struct StyleIndexEntry {
  std::size_t id = 0;
  std::string path;
  LbpHistogram histogram;
  double mean = 0.0;
  double std = 0.0;

  bool operator==(const StyleIndexEntry&) const = default;
};

struct SkippedImage {
  std::string path;
  std::string reason;

  bool operator==(const SkippedImage&) const = default;
};

struct StyleIndex {
  LbpConfig lbp;
  std::vector<StyleIndexEntry> entries;
  std::vector<SkippedImage> skipped;

  // Throws Error(InvalidArgument) unless ids are 0..n-1 in order and every
  // histogram has lbp.bins() entries.
  void validate() const;
};

struct RankedStyle {
  const StyleIndexEntry* entry = nullptr;
  double correlation = 0.0;
};

// The min(k, size) entries with the highest histogram correlation, sorted
// descending; equal correlations are ordered by ascending id.
std::vector<RankedStyle> retrieve_topk(const StyleIndex& index, const LbpHistogram& content,
                                       std::size_t k = 10);

// Entry minimizing |mean - content_mean| + |std - content_std|; ties go to
// the lowest id.
const StyleIndexEntry& select_style(std::span<const RankedStyle> candidates, double content_mean,
                                    double content_std);

struct StyleSelection {
  std::vector<RankedStyle> candidates;
  const StyleIndexEntry* selected = nullptr;
};

// retrieve_topk followed by select_style for one content image.
StyleSelection select_for_image(const StyleIndex& index, const Tensor& content, std::size_t k = 10);

// Indexes every .png/.pgm file directly inside `dir` in lexicographic path
// order. Unreadable images are skipped and listed in StyleIndex::skipped.
StyleIndex build_index(const std::filesystem::path& dir, const LbpConfig& cfg);
StyleIndex build_index(std::vector<std::filesystem::path> paths, const LbpConfig& cfg);

std::string index_to_json(const StyleIndex& index);
StyleIndex parse_index(std::string_view json_text);
void save_index(const StyleIndex& index, const std::filesystem::path& path);
StyleIndex load_index(const std::filesystem::path& path);

}  // namespace usstyle
