#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "usstyle/metrics.hpp"
#include "usstyle/tensor.hpp"

namespace usstyle {

// Depth-dependent gain curve: piecewise-linear through control points whose
// depth fractions rise strictly from 0 to 1.
struct GainProfile {
  struct Point {
    double depth = 0.0;
    double gain = 1.0;
  };
  std::vector<Point> points;

  void validate() const;
  double gain_at(double depth) const;

  static GainProfile constant(double gain);
};

// Multiplies row r by the profile gain at depth r/(H-1), then clamps to [0,1].
Tensor apply_tgc(const Tensor& img, const GainProfile& profile);

// Five evenly spaced sliders with gains in [0.4, 1.8]. The first gain is
// uniform, each following slider moves by at most 0.4 from its neighbour
// (operators set TGC curves smoothly). Redrawn until the mean |gain - 1| is
// at least 0.2 so every variant carries a visible shift.
GainProfile random_profile(std::mt19937_64& rng);

struct Phantom {
  Tensor image;
  Mask mask;
  double semi_axis_a = 0.0;  // pixels
  double semi_axis_b = 0.0;
};

// Speckle-textured synthetic scan with one bright filled ellipse (h, w >= 32).
Phantom gen_phantom(std::uint64_t seed, std::size_t h, std::size_t w);

struct CorpusGroup {
  std::string original;  // paths relative to the manifest directory
  std::vector<std::string> variants;
  std::string mask;
  std::vector<GainProfile> profiles;
};

struct CorpusManifest {
  std::uint64_t seed = 0;
  std::vector<CorpusGroup> groups;
};

struct CorpusOptions {
  std::uint64_t seed = 42;
  std::size_t groups = 10;
  std::size_t variants = 4;
  std::size_t height = 128;
  std::size_t width = 128;
};

// Writes originals/, variants/, masks/ and manifest.json under `dir`.
CorpusManifest gen_corpus(const std::filesystem::path& dir, const CorpusOptions& options);

std::string manifest_to_json(const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::filesystem::path& path);

}  // namespace usstyle
