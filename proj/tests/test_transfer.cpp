#include <doctest.h>

#include <chrono>

#include "oracles.hpp"
#include "test_util.hpp"
#include "usstyle/error.hpp"
#include "usstyle/metrics.hpp"
#include "usstyle/tgc.hpp"
#include "usstyle/transfer.hpp"
#include "usstyle/wavelet.hpp"

using namespace usstyle;
using usstyle::testing::random_tensor;

TEST_CASE("adain examples") {
  std::mt19937_64 rng(1);
  SUBCASE("own statistics leave the input unchanged") {
    const Tensor x = random_tensor(rng, 3, 6, 7);
    CHECK(max_abs_diff(adain(x, channel_stats(x), 1e-5), x) <= 1e-14);
  }
  SUBCASE("constant channel maps to the target mean") {
    const Tensor x(2, 3, 3, 0.4);
    const ChannelStats target{{0.1, 0.9}, {0.5, 0.2}};
    const Tensor y = adain(x, target, 1e-5);
    for (double v : y.channel(0)) CHECK(v == doctest::Approx(0.1).epsilon(1e-9));
    for (double v : y.channel(1)) CHECK(v == doctest::Approx(0.9).epsilon(1e-9));
  }
  SUBCASE("hand evaluated {0,2} with mu=5 sigma=3") {
    const Tensor x(Shape{1, 1, 2}, std::vector<double>{0.0, 2.0});
    const Tensor y = adain(x, ChannelStats{{5.0}, {3.0}}, 0.0);
    CHECK(y(0, 0, 0) == 2.0);
    CHECK(y(0, 0, 1) == 8.0);
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(adain(Tensor(2, 2, 2), ChannelStats{{0.0}, {1.0}}, 1e-5), Error);
  }
}

TEST_CASE("adain properties") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> mu(-2.0, 2.0);
  std::uniform_real_distribution<double> sd(0.01, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor(rng, 4, 9, 11, -1.0, 1.0);
    ChannelStats target;
    for (int c = 0; c < 4; ++c) {
      target.mean.push_back(mu(rng));
      target.std.push_back(sd(rng));
    }
    const Tensor y = adain(x, target, 1e-5);
    const auto s = channel_stats(y);
    for (int c = 0; c < 4; ++c) {
      CHECK(std::abs(s.mean[c] - target.mean[c]) <= 1e-6);
      CHECK(std::abs(s.std[c] - target.std[c]) <= 1e-6);
    }
    CHECK(max_abs_diff(adain(y, target, 1e-5), y) <= 1e-6);

    // Permuting pixels commutes with adain.
    std::vector<std::size_t> perm(x.shape().plane());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor px(x.shape());
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < perm.size(); ++i) px.channel(c)[i] = x.channel(c)[perm[i]];
    const Tensor py = adain(px, target, 1e-5);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK(py.channel(c)[i] == doctest::Approx(y.channel(c)[perm[i]]).epsilon(1e-12));
  }
}

TEST_CASE("depth windows") {
  const DepthWindowConfig cfg;
  const auto [top, bottom] = depth_windows(6, cfg);
  CHECK(top.begin == 0);
  CHECK(top.end == 4);
  CHECK(bottom.begin == 2);
  CHECK(bottom.end == 6);
  for (std::size_t h = 3; h <= 64; ++h) {
    const auto [a, b] = depth_windows(h, cfg);
    CHECK(a.end == (2 * h + 2) / 3);
    CHECK(b.end == h);
    CHECK(b.begin <= a.end);  // windows always overlap or touch
  }
  CHECK_THROWS_AS(depth_windows(2, cfg), Error);
  DepthWindowConfig bad;
  bad.stride_frac = 0.9;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("adain_depth") {
  std::mt19937_64 rng(3);
  SUBCASE("constant content and style") {
    const Tensor y = adain_depth(Tensor(1, 6, 4, 0.2), Tensor(1, 9, 5, 0.7), {}, 1e-5);
    for (double v : y.data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-9));
  }
  SUBCASE("random 1x6x4 matches the slice-and-average oracle") {
    const Tensor x = random_tensor(rng, 1, 6, 4);
    const Tensor y = random_tensor(rng, 1, 6, 4);
    CHECK(adain_depth(x, y, {}, 1e-5) == oracle::adain_depth(x, y, 1e-5));
  }
  SUBCASE("rows 2-3 of H=6 are the mean of both windows") {
    const Tensor x = random_tensor(rng, 1, 6, 3);
    const Tensor y = random_tensor(rng, 1, 6, 3);
    const Tensor out = adain_depth(x, y, {}, 1e-5);
    const Tensor top = adain(slice_rows(x, 0, 4), channel_stats(slice_rows(y, 0, 4)), 1e-5);
    const Tensor bottom = adain(slice_rows(x, 2, 6), channel_stats(slice_rows(y, 2, 6)), 1e-5);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(out(0, 0, c) == top(0, 0, c));
      CHECK(out(0, 2, c) == 0.5 * (top(0, 2, c) + bottom(0, 0, c)));
      CHECK(out(0, 3, c) == 0.5 * (top(0, 3, c) + bottom(0, 1, c)));
      CHECK(out(0, 5, c) == bottom(0, 3, c));
    }
  }
  SUBCASE("full-height window equals plain adain") {
    DepthWindowConfig full;
    full.bandwidth_frac = 1.0;
    const Tensor x = random_tensor(rng, 2, 7, 5);
    const Tensor y = random_tensor(rng, 2, 11, 5);
    CHECK(adain_depth(x, y, full, 1e-5) == adain(x, channel_stats(y), 1e-5));
  }
  SUBCASE("whole-style statistics flag") {
    DepthWindowConfig whole;
    whole.whole_style = true;
    const Tensor x = random_tensor(rng, 1, 9, 4);
    const Tensor y = random_tensor(rng, 1, 9, 4);
    const auto stats = channel_stats(y);
    const Tensor out = adain_depth(x, y, whole, 1e-5);
    const Tensor top = adain(slice_rows(x, 0, 6), stats, 1e-5);
    CHECK(out(0, 0, 1) == top(0, 0, 1));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(adain_depth(Tensor(1, 2, 4), Tensor(1, 6, 4), {}, 1e-5), Error);
    CHECK_THROWS_AS(adain_depth(Tensor(1, 6, 4), Tensor(2, 6, 4), {}, 1e-5), Error);
  }
}

TEST_CASE("wct") {
  std::mt19937_64 rng(4);
  SUBCASE("wct(x, x) keeps the covariance") {
    const Tensor x = random_tensor(rng, 4, 16, 16);
    const Tensor y = wct(x, x, 1e-5);
    const auto cx = oracle::covariance(x);
    const auto cy = oracle::covariance(y);
    for (std::size_t i = 0; i < cx.size(); ++i) CHECK(std::abs(cx[i] - cy[i]) <= 1e-6);
    CHECK(max_abs_diff(y, x) <= 1e-9);
  }
  SUBCASE("random 4-channel 32x32 output covariance matches the style") {
    const Tensor x = random_tensor(rng, 4, 32, 32);
    Tensor y = random_tensor(rng, 4, 32, 32);
    // correlate the style channels
    for (std::size_t i = 0; i < y.shape().plane(); ++i) y.channel(1)[i] += 0.5 * y.channel(0)[i];
    const Tensor out = wct(x, y, 1e-5);
    const auto co = oracle::covariance(out);
    const auto cs = oracle::covariance(y);
    for (std::size_t i = 0; i < co.size(); ++i) CHECK(std::abs(co[i] - cs[i]) <= 1e-4);
    const auto mo = channel_stats(out);
    const auto ms = channel_stats(y);
    for (std::size_t c = 0; c < 4; ++c) CHECK(mo.mean[c] == doctest::Approx(ms.mean[c]));
  }
  SUBCASE("channel_covariance agrees with the loop oracle") {
    const Tensor x = random_tensor(rng, 3, 5, 7);
    const auto a = channel_covariance(x);
    const auto b = oracle::covariance(x);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(wct(Tensor(2, 4, 4), Tensor(3, 4, 4), 1e-5), Error);
    CHECK_THROWS_AS(wct(Tensor(2, 1, 1), Tensor(2, 4, 4), 1e-5), Error);
  }
}

TEST_CASE("transfer_image with style equal to content is the identity") {
  std::mt19937_64 rng(5);
  const Tensor img = random_tensor(rng, 1, 37, 29);
  for (std::size_t levels : {1u, 2u, 3u}) {
    const Network net = make_identity_network(levels);
    for (auto method : {TransferMethod::AdaIN, TransferMethod::AdaINDepth, TransferMethod::WCT}) {
      TransferConfig cfg;
      cfg.method = method;
      const Tensor out = transfer_image(img, img, net, cfg);
      CHECK(out.shape() == img.shape());
      CHECK(max_abs_diff(out, img) <= 1e-6);
    }
  }
}

TEST_CASE("transfer_image at the bottleneck matches the flat oracle") {
  std::mt19937_64 rng(6);
  const Network net = make_identity_network(1);
  const Tensor content = random_tensor(rng, 1, 16, 12, 0.3, 0.6);
  Tensor style = content;
  for (double& v : style.data()) v = 0.8 * v + 0.1;  // constant gain plus offset
  TransferConfig cfg;
  cfg.method = TransferMethod::AdaIN;
  cfg.sites = {"bottleneck"};
  const Tensor out = transfer_image(content, style, net, cfg);
  CHECK(max_abs_diff(out, oracle::flat_pool_adain_unpool(content, style, 1e-5)) <= 1e-12);
  const auto so = channel_stats(haar_pool(out).ll);
  const auto ss = channel_stats(haar_pool(style).ll);
  CHECK(so.mean[0] == doctest::Approx(ss.mean[0]).epsilon(1e-9));
  CHECK(so.std[0] == doctest::Approx(ss.std[0]).epsilon(1e-9));
}

TEST_CASE("transfer_image undoes a TGC shift when the original is the style") {
  const Phantom ph = gen_phantom(17, 64, 64);
  GainProfile profile{{{0.0, 1.4}, {0.5, 1.0}, {1.0, 0.6}}};
  const Tensor variant = apply_tgc(ph.image, profile);
  TransferConfig cfg;
  const Tensor out = transfer_image(variant, ph.image, make_identity_network(2), cfg);
  CHECK(psnr(out, ph.image) > psnr(variant, ph.image));
  CHECK(ssim(out, ph.image) > ssim(variant, ph.image));
}

TEST_CASE("transfer config validation") {
  TransferConfig cfg;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(parse_transfer_method("adain-d") == TransferMethod::AdaINDepth);
  CHECK(parse_transfer_method("adain_d") == TransferMethod::AdaINDepth);
  CHECK_THROWS_AS(parse_transfer_method("gatys"), Error);
  TransferConfig bad_site;
  bad_site.sites = {"nowhere"};
  CHECK_THROWS_AS(transfer_image(Tensor(1, 8, 8, 0.5), Tensor(1, 8, 8, 0.5), make_identity_network(1), bad_site),
                  Error);
}

TEST_CASE("hist_equalize") {
  SUBCASE("two-value image maps to its CDF") {
    Tensor img(1, 2, 4, 0.25);
    for (std::size_t x = 0; x < 4; ++x) img(0, 1, x) = 0.75;
    const Tensor out = hist_equalize(img);
    CHECK(out(0, 0, 0) == 0.5);
    CHECK(out(0, 1, 0) == 1.0);
  }
  SUBCASE("uniform histogram is nearly unchanged") {
    Tensor img(1, 16, 16);
    for (std::size_t i = 0; i < 256; ++i) img.data()[i] = static_cast<double>(i) / 255.0;
    CHECK(max_abs_diff(hist_equalize(img), img) <= 1.0 / 255.0);
  }
  SUBCASE("constant image stays constant") {
    const Tensor out = hist_equalize(Tensor(1, 5, 5, 0.3));
    for (double v : out.data()) CHECK(v == out.data()[0]);
  }
  SUBCASE("multi-channel input") { CHECK_THROWS_AS(hist_equalize(Tensor(3, 2, 2)), Error); }
}

TEST_CASE("adain is at least 10x faster than wct on 256x64x64 features") {
  std::mt19937_64 rng(7);
  const Tensor x = random_tensor(rng, 256, 64, 64);
  const Tensor y = random_tensor(rng, 256, 64, 64);
  using clock = std::chrono::steady_clock;
  const auto time = [](auto&& fn) {
    std::vector<double> samples;
    for (int i = 0; i < 3; ++i) {
      const auto t0 = clock::now();
      fn();
      samples.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    return samples[1];
  };
  const double t_adain = time([&] { return adain(x, channel_stats(y), 1e-5); });
  const double t_wct = time([&] { return wct(x, y, 1e-5); });
  MESSAGE("adain " << t_adain * 1e3 << " ms, wct " << t_wct * 1e3 << " ms");
  CHECK(t_wct >= 10.0 * t_adain);
}
