// usstyle command-line front end. Exit codes: 0 ok, 1 runtime failure,
// 2 usage error.
#include <CLI11.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "usstyle/error.hpp"
#include "usstyle/image_io.hpp"
#include "usstyle/metrics.hpp"
#include "usstyle/network.hpp"
#include "usstyle/parallel.hpp"
#include "usstyle/style_index.hpp"
#include "usstyle/tgc.hpp"
#include "usstyle/transfer.hpp"

namespace fs = std::filesystem;
using namespace usstyle;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct NetworkOptions {
  std::string net;
  std::string weights;
  std::size_t levels = 2;
  std::string method = "adain-d";
  bool whole_style = false;
};

void add_network_options(CLI::App* cmd, NetworkOptions& o) {
  cmd->add_option("--net", o.net, "network spec JSON (default: identity wavelet network)");
  cmd->add_option("--weights", o.weights, "WTS1 weight file, required with --net");
  cmd->add_option("--levels", o.levels, "levels of the identity network")->check(CLI::Range(1, 6));
  cmd->add_option("--method", o.method, "adain | adain-d | wct")
      ->check(CLI::IsMember({"adain", "adain-d", "adain_d", "wct"}));
  cmd->add_flag("--whole-style", o.whole_style, "adain-d: use whole-style statistics for both windows");
}

Network load_network(const NetworkOptions& o) {
  if (o.net.empty()) {
    if (!o.weights.empty()) throw CLI::ValidationError("--weights", "requires --net");
    return make_identity_network(o.levels);
  }
  if (o.weights.empty()) throw CLI::ValidationError("--net", "requires --weights");
  Network net{load_network_spec(o.net), load_weights(o.weights)};
  check_weights(net.spec, net.weights);
  return net;
}

TransferConfig transfer_config(const NetworkOptions& o) {
  TransferConfig cfg;
  cfg.method = parse_transfer_method(o.method);
  cfg.window.whole_style = o.whole_style;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: cannot open for writing", path.string()));
  out << text;
  if (!out) throw Error(ErrorCode::Io, fmt::format("{}: write failed", path.string()));
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd summarize(const std::vector<double>& v) {
  if (v.empty()) return {};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

// ---- build-index ----------------------------------------------------------

struct BuildIndexArgs {
  std::string dir;
  std::string out;
  std::string sampling = "nearest";
};

int run_build_index(const BuildIndexArgs& a) {
  LbpConfig cfg;
  cfg.sampling = parse_lbp_sampling(a.sampling);
  const StyleIndex index = build_index(a.dir, cfg);
  save_index(index, a.out);
  for (const auto& s : index.skipped) fmt::print(stderr, "warning: skipped {}: {}\n", s.path, s.reason);
  fmt::print("indexed {} images ({} skipped) -> {}\n", index.entries.size(), index.skipped.size(), a.out);
  return 0;
}

// ---- select-style ---------------------------------------------------------

struct SelectArgs {
  std::string content;
  std::string index;
  std::size_t k = 10;
};

int run_select(const SelectArgs& a) {
  const StyleIndex index = load_index(a.index);
  const StyleSelection sel = select_for_image(index, to_grayscale(load_image(a.content)), a.k);
  fmt::print("rank,id,correlation,mean,std,path\n");
  for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
    const auto& c = sel.candidates[i];
    fmt::print("{},{},{:.6f},{:.6f},{:.6f},{}\n", i + 1, c.entry->id, c.correlation, c.entry->mean,
               c.entry->std, c.entry->path);
  }
  fmt::print("selected {} {}\n", sel.selected->id, sel.selected->path);
  return 0;
}

// ---- transfer -------------------------------------------------------------

struct TransferArgs {
  std::string content;
  std::string style;
  std::string index;
  std::string out;
  NetworkOptions net;
};

int run_transfer(const TransferArgs& a) {
  auto t0 = Clock::now();
  const Network net = load_network(a.net);
  const TransferConfig cfg = transfer_config(a.net);
  const double t_net = ms_since(t0);

  t0 = Clock::now();
  const Tensor content = to_grayscale(load_image(a.content));
  std::string style_path = a.style;
  if (!a.index.empty()) {
    const StyleIndex index = load_index(a.index);
    const StyleSelection sel = select_for_image(index, content);
    style_path = sel.selected->path;
    fmt::print("selected style {} {}\n", sel.selected->id, style_path);
  }
  const Tensor style = to_grayscale(load_image(style_path));
  const double t_select = ms_since(t0);

  t0 = Clock::now();
  const Tensor out = transfer_image(content, style, net, cfg);
  const double t_transfer = ms_since(t0);

  t0 = Clock::now();
  save_image(out, a.out);
  const double t_save = ms_since(t0);

  fmt::print("timing_ms load_network={:.2f} select={:.2f} transfer={:.2f} save={:.2f}\n", t_net, t_select,
             t_transfer, t_save);
  fmt::print("ssim={:.6f} psnr={:.4f} (output vs content)\n", ssim(out, content), psnr(out, content));
  return 0;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::string content;
  std::string index;
  std::string metric = "psnr";
  std::string reference;
  std::string out;
  NetworkOptions net;
};

int run_sweep(const SweepArgs& a) {
  const Network net = load_network(a.net);
  const TransferConfig cfg = transfer_config(a.net);
  const StyleIndex index = load_index(a.index);
  const Tensor content = to_grayscale(load_image(a.content));
  const Tensor reference = a.reference.empty() ? content : to_grayscale(load_image(a.reference));
  const std::size_t chosen = select_for_image(index, content).selected->id;

  std::vector<double> score(index.entries.size());
  parallel_for(index.entries.size(), [&](std::size_t i) {
    const Tensor style = to_grayscale(load_image(index.entries[i].path));
    const Tensor out = transfer_image(content, style, net, cfg);
    score[i] = a.metric == "ssim" ? ssim(out, reference) : psnr(out, reference);
  });

  std::vector<std::size_t> order(score.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return score[x] > score[y]; });

  std::ostringstream csv;
  csv << fmt::format("# usstyle sweep content={} metric={} method={}\n", a.content, a.metric,
                     to_string(cfg.method));
  csv << fmt::format("rank,style_id,{},selected,path\n", a.metric);
  std::size_t chosen_rank = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& e = index.entries[order[r]];
    if (e.id == chosen) chosen_rank = r + 1;
    csv << fmt::format("{},{},{:.6f},{},{}\n", r + 1, e.id, score[order[r]], e.id == chosen ? "*" : "", e.path);
  }
  write_text(a.out, csv.str());
  fmt::print("swept {} styles; selector chose {} at rank {} -> {}\n", order.size(), chosen, chosen_rank, a.out);
  return 0;
}

// ---- simulate-tgc ---------------------------------------------------------

struct SimulateArgs {
  std::uint64_t seed = 42;
  std::size_t n = 10;
  std::size_t variants = 4;
  std::size_t size = 128;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  CorpusOptions opt;
  opt.seed = a.seed;
  opt.groups = a.n;
  opt.variants = a.variants;
  opt.height = opt.width = a.size;
  const CorpusManifest m = gen_corpus(a.out, opt);
  fmt::print("wrote {} groups x {} variants -> {}\n", m.groups.size(), a.variants,
             (fs::path(a.out) / "manifest.json").string());
  return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string corpus;
  std::string index;
  std::string out;
  NetworkOptions net;
};

struct EvalRow {
  std::size_t group = 0;
  std::size_t variant = 0;
  std::string method;
  double psnr = 0.0;
  double ssim = 0.0;
  std::string style;
};

int run_evaluate(const EvaluateArgs& a) {
  const Network net = load_network(a.net);
  const TransferConfig cfg = transfer_config(a.net);
  const fs::path manifest_path(a.corpus);
  const CorpusManifest manifest = load_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();

  StyleIndex index;
  if (!a.index.empty()) {
    index = load_index(a.index);
  } else {
    std::vector<fs::path> originals;
    for (const auto& g : manifest.groups) originals.push_back(root / g.original);
    index = build_index(originals, LbpConfig{});
  }

  struct Job {
    std::size_t group, variant;
  };
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < manifest.groups.size(); ++g)
    for (std::size_t v = 0; v < manifest.groups[g].variants.size(); ++v) jobs.push_back({g, v});

  std::vector<std::vector<EvalRow>> rows(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [g, v] = jobs[j];
    const auto& group = manifest.groups[g];
    try {
      const Tensor original = to_grayscale(load_image(root / group.original));
      const Tensor variant = to_grayscale(load_image(root / group.variants[v]));
      const Tensor he = hist_equalize(variant);
      const StyleSelection sel = select_for_image(index, variant);
      const Tensor style = to_grayscale(load_image(sel.selected->path));
      const Tensor out = transfer_image(variant, style, net, cfg);
      const std::string sid = std::to_string(sel.selected->id);
      rows[j] = {{g, v, "none", psnr(variant, original), ssim(variant, original), ""},
                 {g, v, "he", psnr(he, original), ssim(he, original), ""},
                 {g, v, "transfer", psnr(out, original), ssim(out, original), sid}};
    } catch (const std::exception& e) {
      failures[j] = e.what();
    }
  });

  std::ostringstream csv;
  csv << fmt::format("# usstyle evaluate corpus={} method={} library={}\n", a.corpus, to_string(cfg.method),
                     index.entries.size());
  csv << "group,variant,method,psnr,ssim,style_id\n";
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_method;
  std::size_t improved = 0, evaluated = 0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!failures[j].empty()) {
      fmt::print(stderr, "warning: group {} variant {}: {}\n", jobs[j].group, jobs[j].variant, failures[j]);
      continue;
    }
    for (const auto& r : rows[j]) {
      csv << fmt::format("{},{},{},{:.6f},{:.6f},{}\n", r.group, r.variant, r.method, r.psnr, r.ssim, r.style);
      by_method[r.method].first.push_back(r.psnr);
      by_method[r.method].second.push_back(r.ssim);
    }
    ++evaluated;
    if (rows[j][2].psnr > rows[j][0].psnr && rows[j][2].ssim > rows[j][0].ssim) ++improved;
  }
  write_text(a.out, csv.str());

  fmt::print("{:<9} {:>18} {:>18}\n", "method", "PSNR (dB)", "SSIM (%)");
  for (const char* m : {"none", "he", "transfer"}) {
    const auto& [p, s] = by_method[m];
    const MeanStd ps = summarize(p), ss = summarize(s);
    fmt::print("{:<9} {:>9.3f} ± {:<6.3f} {:>9.2f} ± {:<6.2f}\n", m, ps.mean, ps.std, 100.0 * ss.mean,
               100.0 * ss.std);
  }
  fmt::print("transfer improved PSNR and SSIM on {}/{} variants -> {}\n", improved, evaluated, a.out);
  const std::size_t failed = jobs.size() - evaluated;
  if (failed > 0) fmt::print(stderr, "{} variant(s) could not be evaluated\n", failed);
  return 0;
}

// ---- benchmark ------------------------------------------------------------

struct BenchmarkArgs {
  std::string sizes = "64x32x32,256x64x64";
  std::size_t reps = 11;
  std::uint64_t seed = 42;
  std::string out;
};

Shape parse_size(const std::string& s) {
  Shape shape;
  char x1 = 0, x2 = 0;
  std::istringstream in(s);
  if (!(in >> shape.c >> x1 >> shape.h >> x2 >> shape.w) || x1 != 'x' || x2 != 'x' || !in.eof() ||
      shape.size() == 0)
    throw CLI::ValidationError("--sizes", fmt::format("bad size '{}', expected CxHxW", s));
  return shape;
}

int run_benchmark(const BenchmarkArgs& a) {
  std::vector<Shape> shapes;
  std::stringstream list(a.sizes);
  for (std::string item; std::getline(list, item, ',');) shapes.push_back(parse_size(item));
  if (shapes.empty()) throw CLI::ValidationError("--sizes", "no sizes given");

  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::ostringstream csv;
  csv << fmt::format("# usstyle benchmark reps={} seed={}\n", a.reps, a.seed);
  csv << "size,method,median_ms\n";
  for (const Shape& s : shapes) {
    Tensor x(s), y(s);
    for (double& v : x.data()) v = dist(rng);
    for (double& v : y.data()) v = dist(rng);
    const std::string label = fmt::format("{}x{}x{}", s.c, s.h, s.w);
    const auto median = [&](auto&& fn) {
      std::vector<double> t;
      for (std::size_t r = 0; r < a.reps; ++r) {
        const auto t0 = Clock::now();
        const Tensor out = fn();
        t.push_back(ms_since(t0));
        if (out.size() != x.size()) throw Error(ErrorCode::Shape, "benchmark: unexpected output shape");
      }
      std::sort(t.begin(), t.end());
      return t[t.size() / 2];
    };
    const double m_adain = median([&] { return adain(x, channel_stats(y), 1e-5); });
    const double m_depth = median([&] { return adain_depth(x, y, DepthWindowConfig{}, 1e-5); });
    const double m_wct = median([&] { return wct(x, y, 1e-5); });
    csv << fmt::format("{},adain,{:.4f}\n{},adain-d,{:.4f}\n{},wct,{:.4f}\n", label, m_adain, label, m_depth,
                       label, m_wct);
    fmt::print("{:>12}  adain {:9.3f} ms  adain-d {:9.3f} ms  wct {:9.3f} ms  wct/adain {:7.1f}x\n", label,
               m_adain, m_depth, m_wct, m_wct / std::max(m_adain, 1e-9));
  }
  if (a.out.empty())
    fmt::print("{}", csv.str());
  else
    write_text(a.out, csv.str());
  return 0;
}

// ---- equalize -------------------------------------------------------------

struct EqualizeArgs {
  std::string in;
  std::string out;
};

int run_equalize(const EqualizeArgs& a) {
  save_image(hist_equalize(to_grayscale(load_image(a.in))), a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"usstyle: wavelet style transfer for ultrasound appearance shift"};
  app.require_subcommand(1);

  BuildIndexArgs bi;
  auto* c_bi = app.add_subcommand("build-index", "index a directory of style images");
  c_bi->add_option("dir", bi.dir)->required()->check(CLI::ExistingDirectory);
  c_bi->add_option("--out", bi.out)->required();
  c_bi->add_option("--sampling", bi.sampling, "LBP neighbour sampling")->check(CLI::IsMember({"nearest", "bilinear"}));

  SelectArgs sel;
  auto* c_sel = app.add_subcommand("select-style", "retrieve and select a style for a content image");
  c_sel->add_option("content", sel.content)->required();
  c_sel->add_option("--index", sel.index)->required();
  c_sel->add_option("--k", sel.k, "retrieval depth")->check(CLI::PositiveNumber);

  TransferArgs tr;
  auto* c_tr = app.add_subcommand("transfer", "stylize a content image");
  c_tr->add_option("content", tr.content)->required();
  auto* o_style = c_tr->add_option("--style", tr.style, "explicit style image");
  auto* o_index = c_tr->add_option("--index", tr.index, "style index; the style is selected automatically");
  o_style->excludes(o_index);
  c_tr->add_option("--out", tr.out)->required();
  add_network_options(c_tr, tr.net);

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "transfer against every library style and rank the results");
  c_sw->add_option("content", sw.content)->required();
  c_sw->add_option("--index", sw.index)->required();
  c_sw->add_option("--metric", sw.metric)->check(CLI::IsMember({"psnr", "ssim"}));
  c_sw->add_option("--reference", sw.reference, "image the metric compares against (default: content)");
  c_sw->add_option("--out", sw.out)->required();
  add_network_options(c_sw, sw.net);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate-tgc", "generate a synthetic phantom corpus with TGC variants");
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--n", sim.n, "phantom count")->check(CLI::PositiveNumber);
  c_sim->add_option("--variants", sim.variants)->check(CLI::PositiveNumber);
  c_sim->add_option("--size", sim.size, "phantom side length")->check(CLI::Range(32, 4096));
  c_sim->add_option("--out", sim.out)->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "score none / HE / transfer against corpus originals");
  c_ev->add_option("--corpus", ev.corpus, "manifest.json")->required();
  c_ev->add_option("--index", ev.index, "style index (default: the corpus originals)");
  c_ev->add_option("--out", ev.out)->required();
  add_network_options(c_ev, ev.net);

  BenchmarkArgs bm;
  auto* c_bm = app.add_subcommand("benchmark", "time adain, adain-d and wct on random features");
  c_bm->add_option("--sizes", bm.sizes, "comma-separated CxHxW list");
  c_bm->add_option("--reps", bm.reps)->check(CLI::PositiveNumber);
  c_bm->add_option("--seed", bm.seed);
  c_bm->add_option("--out", bm.out, "CSV path (default: stdout)");

  EqualizeArgs eq;
  auto* c_eq = app.add_subcommand("equalize", "histogram-equalization baseline");
  c_eq->add_option("input", eq.in)->required();
  c_eq->add_option("--out", eq.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*c_bi) return run_build_index(bi);
    if (*c_sel) return run_select(sel);
    if (*c_tr) {
      if (tr.style.empty() && tr.index.empty()) throw CLI::ValidationError("transfer", "need --style or --index");
      return run_transfer(tr);
    }
    if (*c_sw) return run_sweep(sw);
    if (*c_sim) return run_simulate(sim);
    if (*c_ev) return run_evaluate(ev);
    if (*c_bm) return run_benchmark(bm);
    if (*c_eq) return run_equalize(eq);
  } catch (const CLI::Error& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return 2;
  } catch (const Error& e) {
    fmt::print(stderr, "error [{}]: {}\n", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 2;
}
