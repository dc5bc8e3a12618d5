#include <doctest.h>

#include <fstream>

#include "oracles.hpp"
#include "test_util.hpp"
#include "usstyle/error.hpp"
#include "usstyle/network.hpp"
#include "usstyle/transfer.hpp"
#include "usstyle/wavelet.hpp"

using namespace usstyle;
using usstyle::testing::random_tensor;
using usstyle::testing::TempDir;

namespace {

ConvWeights make_conv(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw,
                      std::vector<double> kernel, std::vector<double> bias) {
  return ConvWeights{out, in, kh, kw, std::move(kernel), std::move(bias)};
}

ConvWeights random_conv(std::mt19937_64& rng, std::size_t out, std::size_t in, std::size_t kh,
                        std::size_t kw) {
  // float-representable values so WTS1 round trips are exact
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  ConvWeights w{out, in, kh, kw, std::vector<double>(out * in * kh * kw), std::vector<double>(out)};
  for (double& v : w.kernel) v = dist(rng);
  for (double& v : w.bias) v = dist(rng);
  return w;
}

// Two-level network with real channel expansion and ReLUs.
Network small_network(std::mt19937_64& rng) {
  Network net;
  net.spec.input_channels = 1;
  net.spec.levels = 2;
  net.spec.encoder = {{Layer::conv("e0a", 3, 3, 1, 4), Layer::relu()},
                      {Layer::conv("e1a", 3, 3, 4, 6), Layer::relu()}};
  net.spec.decoder = {{Layer::conv("d0a", 3, 3, 4, 1)},
                      {Layer::conv("d1a", 3, 3, 6, 3), Layer::relu(), Layer::conv("d1b", 1, 1, 3, 4)}};
  net.spec.transfer_sites = net.spec.site_names();
  net.weights["e0a"] = random_conv(rng, 4, 1, 3, 3);
  net.weights["e1a"] = random_conv(rng, 6, 4, 3, 3);
  net.weights["d0a"] = random_conv(rng, 1, 4, 3, 3);
  net.weights["d1a"] = random_conv(rng, 3, 6, 3, 3);
  net.weights["d1b"] = random_conv(rng, 4, 3, 1, 1);
  return net;
}

}  // namespace

TEST_CASE("conv2d examples") {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(rng, 1, 5, 6);

  SUBCASE("1x1 kernel scales") {
    const Tensor y = conv2d(x, make_conv(1, 1, 1, 1, {2.0}, {0.0}));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == 2.0 * x.data()[i]);
  }
  SUBCASE("3x3 delta kernel is identity") {
    std::vector<double> k(9, 0.0);
    k[4] = 1.0;
    CHECK(conv2d(x, make_conv(1, 1, 3, 3, k, {0.0})) == x);
  }
  SUBCASE("all-ones 3x3 on 2x2 with zero padding") {
    const Tensor t(Shape{1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    const Tensor y = conv2d(t, make_conv(1, 1, 3, 3, std::vector<double>(9, 1.0), {0.0}));
    for (double v : y.data()) CHECK(v == 10.0);
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(conv2d(x, make_conv(1, 2, 1, 1, {1, 1}, {0})), Error);
  }
}

TEST_CASE("conv2d agrees with the brute-force oracle") {
  std::mt19937_64 rng(21);
  for (std::size_t k : {1u, 2u, 3u, 4u, 5u}) {
    const Tensor x = random_tensor(rng, 3, 7, 9, -1.0, 1.0);
    const ConvWeights w = random_conv(rng, 2, 3, k, k == 2 ? 3 : k);
    CHECK(max_abs_diff(conv2d(x, w), oracle::conv2d(x, w)) <= 1e-12);
  }
}

TEST_CASE("network spec validation") {
  std::mt19937_64 rng(1);
  Network net = small_network(rng);
  CHECK_NOTHROW(net.spec.validate());

  NetworkSpec broken = net.spec;
  broken.encoder[1][0].in_channels = 5;
  CHECK_THROWS_AS(broken.validate(), Error);

  broken = net.spec;
  broken.decoder.pop_back();
  CHECK_THROWS_AS(broken.validate(), Error);

  broken = net.spec;
  broken.transfer_sites = {"level7"};
  CHECK_THROWS_AS(broken.validate(), Error);

  broken = net.spec;
  broken.decoder[0][0].name = "e0a";
  CHECK_THROWS_AS(broken.validate(), Error);

  CHECK(net.spec.site_names() == std::vector<std::string>{"level1", "bottleneck"});
}

TEST_CASE("network spec JSON round trip") {
  std::mt19937_64 rng(1);
  const Network net = small_network(rng);
  TempDir dir("net");
  save_network_spec(net.spec, dir / "net.json");
  const NetworkSpec loaded = load_network_spec(dir / "net.json");
  CHECK(network_spec_to_json(loaded) == network_spec_to_json(net.spec));
  CHECK_THROWS_AS(parse_network_spec("{\"levels\": 1}"), Error);
  CHECK_THROWS_AS(load_network_spec(dir / "missing.json"), Error);
}

TEST_CASE("identity network shapes") {
  const Network net = make_identity_network(2);
  std::mt19937_64 rng(4);
  const EncodedState s = encode(random_tensor(rng, 1, 8, 8), net.spec, net.weights);
  CHECK(s.trunk.shape() == Shape{1, 2, 2});
  REQUIRE(s.skips.size() == 2);
  CHECK(s.skips[0].lh.shape() == Shape{1, 4, 4});
  CHECK(s.skips[1].hh.shape() == Shape{1, 2, 2});
  CHECK(s.sites.at("level1").shape() == Shape{1, 4, 4});
  CHECK(s.sites.at("bottleneck") == s.trunk);

  const Network one = make_identity_network(1);
  const EncodedState s1 = encode(random_tensor(rng, 1, 4, 4), one.spec, one.weights);
  CHECK(s1.trunk.shape() == Shape{1, 2, 2});
  CHECK(s1.skips.size() == 1);
}

TEST_CASE("identity network site features are the wavelet ll cascade") {
  const Network net = make_identity_network(3);
  std::mt19937_64 rng(14);
  const Tensor img = random_tensor(rng, 1, 16, 24);
  const EncodedState s = encode(img, net.spec, net.weights);
  Tensor ll = img;
  for (std::size_t d = 1; d <= 3; ++d) {
    const WaveletBands b = haar_pool(ll);
    ll = b.ll;
    CHECK(max_abs_diff(s.sites.at(site_name(d, 3)), ll) == 0.0);
    CHECK(max_abs_diff(s.skips[d - 1].lh, b.lh) == 0.0);
  }
}

TEST_CASE("identity network round trip is exact and energy preserving") {
  std::mt19937_64 rng(77);
  for (std::size_t levels = 1; levels <= 3; ++levels) {
    const Network net = make_identity_network(levels);
    const std::size_t m = std::size_t{1} << levels;
    for (int trial = 0; trial < 10; ++trial) {
      const Tensor img = random_tensor(rng, 1, m * (1 + trial % 4), m * (2 + trial % 3));
      const EncodedState s = encode(img, net.spec, net.weights);
      CHECK(max_abs_diff(decode(s, net.spec, net.weights), img) <= 1e-9);

      double e_in = 0.0;
      for (double v : img.data()) e_in += v * v;
      double e_out = 0.0;
      for (double v : s.trunk.data()) e_out += v * v;
      for (const SkipBands& sk : s.skips)
        for (const Tensor* t : {&sk.lh, &sk.hl, &sk.hh})
          for (double v : t->data()) e_out += v * v;
      CHECK(std::abs(e_in - e_out) <= 1e-12 * e_in);
    }
  }
}

TEST_CASE("decode with AdaIN at the bottleneck") {
  const Network net = make_identity_network(1);
  std::mt19937_64 rng(31);
  const Tensor img = random_tensor(rng, 1, 8, 10);
  const EncodedState s = encode(img, net.spec, net.weights);

  SUBCASE("style equal to content reproduces the input") {
    const auto stats = channel_stats(s.trunk);
    SiteTransforms t{{"bottleneck", [&](const Tensor& f) { return adain(f, stats, 1e-5); }}};
    CHECK(max_abs_diff(decode(s, net.spec, net.weights, t), img) <= 1e-12);
  }
  SUBCASE("shifted style matches the flat pool/adain/unpool oracle") {
    Tensor style = random_tensor(rng, 1, 8, 10);
    for (double& v : style.data()) v = 0.6 * v + 0.3;
    const EncodedState st = encode(style, net.spec, net.weights);
    const auto stats = channel_stats(st.trunk);
    SiteTransforms t{{"bottleneck", [&](const Tensor& f) { return adain(f, stats, 1e-5); }}};
    const Tensor out = decode(s, net.spec, net.weights, t);
    CHECK(max_abs_diff(out, oracle::flat_pool_adain_unpool(img, style, 1e-5)) <= 1e-12);
  }
}

TEST_CASE("transforms never modify skip bands") {
  std::mt19937_64 rng(32);
  const Network net = make_identity_network(2);
  const Tensor img = random_tensor(rng, 1, 16, 16);
  const EncodedState s = encode(img, net.spec, net.weights);
  const EncodedState before = s;
  SiteTransforms t{{"bottleneck", [](const Tensor& f) { return Tensor(f.shape(), 0.5); }},
                   {"level1", [](const Tensor& f) { return Tensor(f.shape(), 0.25); }}};
  const Tensor out = decode(s, net.spec, net.weights, t);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(s.skips[l].lh == before.skips[l].lh);
    CHECK(s.skips[l].hl == before.skips[l].hl);
    CHECK(s.skips[l].hh == before.skips[l].hh);
  }
  // Re-analysing the output recovers the untouched finest detail bands.
  const WaveletBands b = haar_pool(out);
  CHECK(max_abs_diff(b.lh, s.skips[0].lh) <= 1e-12);
  CHECK(max_abs_diff(b.hh, s.skips[0].hh) <= 1e-12);
}

TEST_CASE("decode errors") {
  const Network net = make_identity_network(2);
  std::mt19937_64 rng(3);
  EncodedState s = encode(random_tensor(rng, 1, 8, 8), net.spec, net.weights);
  SiteTransforms unknown{{"level9", [](const Tensor& f) { return f; }}};
  CHECK_THROWS_AS(decode(s, net.spec, net.weights, unknown), Error);
  SiteTransforms reshaping{{"bottleneck", [](const Tensor&) { return Tensor(1, 1, 1); }}};
  CHECK_THROWS_AS(decode(s, net.spec, net.weights, reshaping), Error);
  s.skips.pop_back();
  CHECK_THROWS_AS(decode(s, net.spec, net.weights), Error);
  CHECK_THROWS_AS(encode(random_tensor(rng, 1, 6, 8), net.spec, net.weights), Error);
}

TEST_CASE("encode rejects weights that do not match the spec") {
  std::mt19937_64 rng(9);
  Network net = small_network(rng);
  net.weights["e1a"] = random_conv(rng, 6, 4, 1, 1);
  CHECK_THROWS_AS(encode(random_tensor(rng, 1, 8, 8), net.spec, net.weights), Error);
  net.weights.erase("e1a");
  CHECK_THROWS_AS(encode(random_tensor(rng, 1, 8, 8), net.spec, net.weights), Error);
}

TEST_CASE("non-identity network is deterministic") {
  std::mt19937_64 rng(10);
  const Network net = small_network(rng);
  const Tensor img = random_tensor(rng, 1, 12, 8);
  const Tensor a = decode(encode(img, net.spec, net.weights), net.spec, net.weights);
  const Tensor b = decode(encode(img, net.spec, net.weights), net.spec, net.weights);
  CHECK(a == b);
  CHECK(a.shape() == img.shape());
}

TEST_CASE("WTS1 weight files") {
  std::mt19937_64 rng(12);
  const Network net = small_network(rng);
  TempDir dir("wts");
  const auto path = dir / "w.wts";
  save_weights(net.weights, path);

  SUBCASE("round trip") {
    const WeightStore loaded = load_weights(path);
    CHECK(loaded == net.weights);
    CHECK_NOTHROW(check_weights(net.spec, loaded));
  }
  SUBCASE("wrong magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    try {
      load_weights(path);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Format);
    }
  }
  SUBCASE("header declares more floats than the blob holds") {
    WeightStore one{{"c", ConvWeights{1, 1, 3, 3, std::vector<double>(9, 0.5), {}}}};
    save_weights(one, dir / "one.wts");
    const auto size = std::filesystem::file_size(dir / "one.wts");
    std::filesystem::resize_file(dir / "one.wts", size - 4);  // 8 floats left
    try {
      load_weights(dir / "one.wts");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Truncated);
    }
  }
  SUBCASE("missing file") {
    try {
      load_weights(dir / "nope.wts");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FileNotFound);
      CHECK(std::string(e.what()).find("nope.wts") != std::string::npos);
    }
  }
  SUBCASE("shape mismatch against the spec") {
    WeightStore w = load_weights(path);
    w["d0a"].kernel_h = 1;
    CHECK_THROWS_AS(check_weights(net.spec, w), Error);
  }
}
