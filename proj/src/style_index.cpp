#include "usstyle/style_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "usstyle/error.hpp"
#include "usstyle/image_io.hpp"
#include "usstyle/parallel.hpp"

namespace usstyle {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kIndexVersion = 1;

std::string real(double v) { return fmt::format("{:.17g}", v); }

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".png" || ext == ".pgm";
}

}  // namespace

ImageDescriptor describe_image(const Tensor& image, const LbpConfig& cfg) {
  const Tensor gray = to_grayscale(image);
  const ChannelStats stats = channel_stats(gray);
  return {lbp_histogram(lbp_spectrum(gray, cfg), cfg.bins()), stats.mean[0], stats.std[0]};
}

void StyleIndex::validate() const {
  lbp.validate();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].id != i) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("style index: entry {} has id {}", i, entries[i].id));
    }
    if (entries[i].histogram.size() != lbp.bins()) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("style index: entry {} has {} bins, expected {}", i,
                              entries[i].histogram.size(), lbp.bins()));
    }
  }
}

std::vector<RankedStyle> retrieve_topk(const StyleIndex& index, const LbpHistogram& content,
                                       std::size_t k) {
  if (index.entries.empty()) throw Error(ErrorCode::InvalidArgument, "retrieve_topk: empty index");
  std::vector<RankedStyle> ranked;
  ranked.reserve(index.entries.size());
  for (const StyleIndexEntry& e : index.entries) {
    ranked.push_back({&e, hist_correlation(e.histogram, content)});
  }
  const std::size_t keep = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                    [](const RankedStyle& a, const RankedStyle& b) {
                      if (a.correlation != b.correlation) return a.correlation > b.correlation;
                      return a.entry->id < b.entry->id;
                    });
  ranked.resize(keep);
  return ranked;
}

const StyleIndexEntry& select_style(std::span<const RankedStyle> candidates, double content_mean,
                                    double content_std) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "select_style: no candidates");
  const StyleIndexEntry* best = nullptr;
  double best_distance = 0.0;
  for (const RankedStyle& c : candidates) {
    const double d = std::abs(c.entry->mean - content_mean) + std::abs(c.entry->std - content_std);
    if (best == nullptr || d < best_distance || (d == best_distance && c.entry->id < best->id)) {
      best = c.entry;
      best_distance = d;
    }
  }
  return *best;
}

StyleSelection select_for_image(const StyleIndex& index, const Tensor& content, std::size_t k) {
  const ImageDescriptor d = describe_image(content, index.lbp);
  StyleSelection selection;
  selection.candidates = retrieve_topk(index, d.histogram, k);
  selection.selected = &select_style(selection.candidates, d.mean, d.std);
  return selection;
}

StyleIndex build_index(std::vector<fs::path> paths, const LbpConfig& cfg) {
  cfg.validate();
  std::sort(paths.begin(), paths.end());
  std::vector<std::optional<ImageDescriptor>> described(paths.size());
  std::vector<std::string> failures(paths.size());
  parallel_for(paths.size(), [&](std::size_t i) {
    try {
      described[i] = describe_image(load_image(paths[i]), cfg);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  StyleIndex index;
  index.lbp = cfg;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!described[i]) {
      index.skipped.push_back({paths[i].string(), failures[i]});
      continue;
    }
    index.entries.push_back({index.entries.size(), paths[i].string(),
                             std::move(described[i]->histogram), described[i]->mean,
                             described[i]->std});
  }
  if (index.entries.empty()) {
    throw Error(ErrorCode::InvalidArgument, "build_index: no readable images");
  }
  return index;
}

StyleIndex build_index(const fs::path& dir, const LbpConfig& cfg) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::FileNotFound, fmt::format("{}: not a directory", dir.string()));
  }
  std::vector<fs::path> paths;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.is_regular_file() && is_image_file(item.path())) paths.push_back(item.path());
  }
  if (paths.empty()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("{}: no images found", dir.string()));
  }
  return build_index(std::move(paths), cfg);
}

std::string index_to_json(const StyleIndex& index) {
  std::ostringstream out;
  out << "{\n  \"version\": " << kIndexVersion << ",\n";
  out << "  \"lbp\": {\"points\": " << index.lbp.points << ", \"radius\": " << real(index.lbp.radius)
      << ", \"variant\": \"uniform\", \"sampling\": " << json(to_string(index.lbp.sampling)).dump()
      << "},\n";
  out << "  \"entries\": [";
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    const StyleIndexEntry& e = index.entries[i];
    out << (i == 0 ? "\n" : ",\n");
    out << "    {\"id\": " << e.id << ", \"path\": " << json(e.path).dump() << ", \"hist\": [";
    for (std::size_t b = 0; b < e.histogram.size(); ++b) {
      out << (b == 0 ? "" : ", ") << real(e.histogram[b]);
    }
    out << "], \"mean\": " << real(e.mean) << ", \"std\": " << real(e.std) << "}";
  }
  out << (index.entries.empty() ? "],\n" : "\n  ],\n");
  out << "  \"skipped\": [";
  for (std::size_t i = 0; i < index.skipped.size(); ++i) {
    out << (i == 0 ? "\n" : ",\n") << "    {\"path\": " << json(index.skipped[i].path).dump()
        << ", \"reason\": " << json(index.skipped[i].reason).dump() << "}";
  }
  out << (index.skipped.empty() ? "]\n" : "\n  ]\n");
  out << "}\n";
  return out.str();
}

StyleIndex parse_index(std::string_view json_text) {
  StyleIndex index;
  try {
    const json j = json::parse(json_text);
    if (j.at("version").get<int>() != kIndexVersion) {
      throw Error(ErrorCode::Format,
                  fmt::format("style index: unsupported version {}", j.at("version").dump()));
    }
    const json& lbp = j.at("lbp");
    if (lbp.value("variant", std::string("uniform")) != "uniform") {
      throw Error(ErrorCode::Format, "style index: only uniform LBP is supported");
    }
    index.lbp.points = lbp.at("points").get<std::size_t>();
    index.lbp.radius = lbp.at("radius").get<double>();
    index.lbp.sampling = parse_lbp_sampling(lbp.value("sampling", std::string("nearest")));
    for (const json& e : j.at("entries")) {
      index.entries.push_back({e.at("id").get<std::size_t>(), e.at("path").get<std::string>(),
                               e.at("hist").get<std::vector<double>>(), e.at("mean").get<double>(),
                               e.at("std").get<double>()});
    }
    if (j.contains("skipped")) {
      for (const json& s : j.at("skipped")) {
        index.skipped.push_back({s.at("path").get<std::string>(), s.value("reason", std::string())});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, fmt::format("style index: malformed JSON ({})", e.what()));
  }
  index.validate();
  return index;
}

void save_index(const StyleIndex& index, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: cannot open for writing", path.string()));
  out << index_to_json(index);
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: write failed", path.string()));
}

StyleIndex load_index(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, fmt::format("{}: no such file", path.string()));
  }
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_index(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace usstyle
