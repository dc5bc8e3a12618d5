#include "usstyle/tgc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "usstyle/error.hpp"
#include "usstyle/image_io.hpp"

namespace usstyle {
namespace fs = std::filesystem;
using nlohmann::json;

void GainProfile::validate() const {
  if (points.size() < 2) throw Error(ErrorCode::InvalidArgument, "gain profile needs >= 2 points");
  if (points.front().depth != 0.0 || points.back().depth != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "gain profile must span depths 0 to 1");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].gain >= 0.0) || !std::isfinite(points[i].gain)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("gain profile: bad gain {}", points[i].gain));
    }
    if (i > 0 && !(points[i].depth > points[i - 1].depth)) {
      throw Error(ErrorCode::InvalidArgument, "gain profile depths must increase strictly");
    }
  }
}

double GainProfile::gain_at(double depth) const {
  depth = std::clamp(depth, 0.0, 1.0);
  const auto upper = std::upper_bound(points.begin(), points.end(), depth,
                                      [](double d, const Point& p) { return d < p.depth; });
  if (upper == points.end()) return points.back().gain;
  const Point& hi = *upper;
  const Point& lo = *(upper - 1);
  const double t = (depth - lo.depth) / (hi.depth - lo.depth);
  return lo.gain + t * (hi.gain - lo.gain);
}

GainProfile GainProfile::constant(double gain) { return GainProfile{{{0.0, gain}, {1.0, gain}}}; }

Tensor apply_tgc(const Tensor& img, const GainProfile& profile) {
  profile.validate();
  if (img.channels() != 1) {
    throw Error(ErrorCode::Shape, fmt::format("apply_tgc: expected 1 channel, got {}", img.channels()));
  }
  Tensor out(img.shape());
  const std::size_t h = img.height();
  for (std::size_t r = 0; r < h; ++r) {
    const double depth = h > 1 ? static_cast<double>(r) / static_cast<double>(h - 1) : 0.0;
    const double gain = profile.gain_at(depth);
    for (std::size_t x = 0; x < img.width(); ++x) {
      out(0, r, x) = std::clamp(img(0, r, x) * gain, 0.0, 1.0);
    }
  }
  return out;
}

GainProfile random_profile(std::mt19937_64& rng) {
  constexpr double kMin = 0.4;
  constexpr double kMax = 1.8;
  constexpr double kStep = 0.4;
  constexpr std::size_t kSliders = 5;
  std::uniform_real_distribution<double> start(kMin, kMax);
  std::uniform_real_distribution<double> step(-kStep, kStep);
  for (;;) {
    GainProfile p;
    double g = start(rng);
    double deviation = 0.0;
    for (std::size_t i = 0; i < kSliders; ++i) {
      if (i > 0) g = std::clamp(g + step(rng), kMin, kMax);
      p.points.push_back({static_cast<double>(i) / static_cast<double>(kSliders - 1), g});
      deviation += std::abs(g - 1.0);
    }
    if (deviation / static_cast<double>(kSliders) >= 0.2) return p;
  }
}

Phantom gen_phantom(std::uint64_t seed, std::size_t h, std::size_t w) {
  if (h < 32 || w < 32) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("phantom must be at least 32x32, got {}x{}", h, w));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double hd = static_cast<double>(h);
  const double wd = static_cast<double>(w);
  const double side = std::min(hd, wd);

  const double base = uniform(0.30, 0.34);
  const double fx = uniform(0.5, 1.5);
  const double fy = uniform(0.5, 1.5);
  const double phase_x = uniform(0.0, 1.0);
  const double phase_y = uniform(0.0, 1.0);
  const double cx = uniform(0.4, 0.6) * wd;
  const double cy = uniform(0.4, 0.6) * hd;
  const double a = uniform(0.2, 0.28) * side;
  const double b = uniform(0.2, 0.28) * side;
  const double angle = uniform(0.0, std::numbers::pi);
  const double lift = uniform(0.27, 0.31);

  Phantom ph{Tensor(1, h, w), Mask(h, w), a, b};
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double u = (dx * ca + dy * sa) / a;
      const double v = (-dx * sa + dy * ca) / b;
      const bool inside = u * u + v * v <= 1.0;
      ph.mask(y, x) = inside ? 1 : 0;
      const double smooth =
          1.0 + 0.15 * std::sin(2.0 * std::numbers::pi * (fx * static_cast<double>(x) / wd + phase_x)) *
                    std::cos(2.0 * std::numbers::pi * (fy * static_cast<double>(y) / hd + phase_y));
      ph.image(0, y, x) = base * smooth + (inside ? lift : 0.0);
    }
  }

  // Pseudo-speckle: box-blurred Gaussian noise (unit variance after blur)
  // applied multiplicatively.
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(h * w);
  for (double& n : noise) n = normal(rng);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double sum = 0.0;
      for (std::size_t yy = (y == 0 ? 0 : y - 1); yy <= std::min(y + 1, h - 1); ++yy) {
        for (std::size_t xx = (x == 0 ? 0 : x - 1); xx <= std::min(x + 1, w - 1); ++xx) {
          sum += noise[yy * w + xx];
        }
      }
      const double speckle = std::max(0.05, 1.0 + 0.3 * sum / 3.0);
      ph.image(0, y, x) = std::clamp(ph.image(0, y, x) * speckle, 0.0, 1.0);
    }
  }
  return ph;
}

namespace {

json profile_to_json(const GainProfile& p) {
  json arr = json::array();
  for (const auto& pt : p.points) arr.push_back({pt.depth, pt.gain});
  return arr;
}

GainProfile profile_from_json(const json& j) {
  GainProfile p;
  for (const json& pt : j) p.points.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
  return p;
}

void make_directories(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, fmt::format("{}: cannot create directory ({})", dir.string(), ec.message()));
}

}  // namespace

CorpusManifest gen_corpus(const fs::path& dir, const CorpusOptions& options) {
  make_directories(dir / "originals");
  make_directories(dir / "variants");
  make_directories(dir / "masks");
  CorpusManifest manifest;
  manifest.seed = options.seed;
  for (std::size_t g = 0; g < options.groups; ++g) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(options.seed >> 32), static_cast<std::uint32_t>(g)};
    std::mt19937_64 rng(seq);
    const Phantom ph = gen_phantom(rng(), options.height, options.width);

    CorpusGroup group;
    group.original = fmt::format("originals/group_{:03}.png", g);
    group.mask = fmt::format("masks/group_{:03}.png", g);
    save_image(ph.image, dir / group.original);
    save_image(mask_to_tensor(ph.mask), dir / group.mask);
    for (std::size_t v = 0; v < options.variants; ++v) {
      GainProfile profile = random_profile(rng);
      std::string path = fmt::format("variants/group_{:03}_v{}.png", g, v);
      save_image(apply_tgc(ph.image, profile), dir / path);
      group.variants.push_back(std::move(path));
      group.profiles.push_back(std::move(profile));
    }
    manifest.groups.push_back(std::move(group));
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: cannot write manifest", (dir / "manifest.json").string()));
  out << manifest_to_json(manifest);
  return manifest;
}

std::string manifest_to_json(const CorpusManifest& manifest) {
  json j;
  j["seed"] = manifest.seed;
  j["groups"] = json::array();
  for (const CorpusGroup& g : manifest.groups) {
    json profiles = json::array();
    for (const auto& p : g.profiles) profiles.push_back(profile_to_json(p));
    j["groups"].push_back({{"original", g.original},
                           {"variants", g.variants},
                           {"mask", g.mask},
                           {"profiles", profiles}});
  }
  return j.dump(2) + "\n";
}

CorpusManifest load_manifest(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, fmt::format("{}: no such file", path.string()));
  }
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  CorpusManifest manifest;
  try {
    const json j = json::parse(buffer.str());
    manifest.seed = j.at("seed").get<std::uint64_t>();
    for (const json& g : j.at("groups")) {
      CorpusGroup group;
      group.original = g.at("original").get<std::string>();
      group.variants = g.at("variants").get<std::vector<std::string>>();
      group.mask = g.value("mask", std::string());
      if (g.contains("profiles")) {
        for (const json& p : g.at("profiles")) group.profiles.push_back(profile_from_json(p));
      }
      manifest.groups.push_back(std::move(group));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, fmt::format("{}: malformed manifest ({})", path.string(), e.what()));
  }
  return manifest;
}

}  // namespace usstyle
