#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "apollo/codec/codec.hpp"
#include "apollo/codec/token_file.hpp"
#include "apollo/dsp/butterworth.hpp"
#include "apollo/dsp/filtfilt.hpp"
#include "apollo/error.hpp"
#include "synth.hpp"

using namespace apollo;
using namespace apollo::codec;

namespace {

QuantizationConfig cfg(std::uint32_t q = 10000, RoundingMode m = RoundingMode::floor) {
  return QuantizationConfig{q, m};
}

std::vector<double> random_series(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.01, 1000.0);
  std::uniform_real_distribution<double> shift(-500.0, 500.0);
  const double a = scale(rng);
  const double b = shift(rng);
  auto x = testsupport::white_noise(seed + 1, n, 1.0);
  for (double& v : x) v = a * v + b;
  return x;
}

}  // namespace

TEST_CASE("normalize maps endpoints and records min/max") {
  const auto n = normalize(std::vector<double>{0, 5, 10});
  CHECK(n.values == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(n.record.min_val == 0.0);
  CHECK(n.record.max_val == 10.0);
  CHECK_FALSE(n.record.degenerate);
}

TEST_CASE("constant series normalizes to 0.5 with a degenerate record") {
  const auto n = normalize(std::vector<double>{-2, -2, -2});
  CHECK(n.values == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(n.record.min_val == -2.0);
  CHECK(n.record.max_val == -2.0);
  CHECK(n.record.degenerate);
  for (double v : denormalize(n.values, n.record)) CHECK(v == -2.0);
}

TEST_CASE("denormalize inverts normalize") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_series(seed, 100);
    const auto n = normalize(x);
    const auto back = denormalize(n.values, n.record);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(back[i] - x[i]) <= 1e-12 * std::max(1.0, std::abs(x[i])));
    }
  }
}

TEST_CASE("normalize rejects empty and non-finite input") {
  CHECK_THROWS_AS(normalize(std::vector<double>{}), InputError);
  CHECK_THROWS_AS(normalize(std::vector<double>{1.0, NAN}), InputError);
}

TEST_CASE("quantize examples") {
  CHECK(quantize(std::vector<double>{0.12345}, cfg())[0] == doctest::Approx(0.1234).epsilon(1e-15));
  CHECK(quantize(std::vector<double>{1.0}, cfg())[0] == 1.0);
  CHECK(quantize_index(1.0, cfg()) == 10000);
  CHECK(quantize_index(0.0, cfg()) == 0);
  CHECK(quantize_index(0.12345, cfg()) == 1234);
  CHECK(quantize_index(0.12345, cfg(10000, RoundingMode::nearest)) == 1235);
  CHECK(quantize_index(0.12344, cfg(10000, RoundingMode::nearest)) == 1234);
  // Values that sit on the grid but are not representable exactly.
  CHECK(quantize_index(0.3, cfg(10)) == 3);
  CHECK(quantize_index(0.7, cfg(10)) == 7);
  CHECK_THROWS_AS(quantize(std::vector<double>{1.0001}, cfg()), InputError);
  CHECK_THROWS_AS(quantize(std::vector<double>{-1e-6}, cfg()), InputError);
  CHECK_THROWS_AS(validate(cfg(0)), ConfigError);
}

TEST_CASE("quantization error stays inside the rounding interval") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint32_t q : {1u, 7u, 10000u}) {
    const double inv = 1.0 / q;
    for (int i = 0; i < 20000; ++i) {
      const double v = u(rng);
      const double ef = quantize_index(v, cfg(q)) * inv - v;
      CHECK((ef > -inv && ef <= 0.0));
      const double en = quantize_index(v, cfg(q, RoundingMode::nearest)) * inv - v;
      CHECK(std::abs(en) <= 0.5 * inv + 1e-15);
    }
  }
}

TEST_CASE("tokenize examples and grid checks") {
  CHECK(tokenize(std::vector<double>{0.1234}, cfg()).tokens[0] == 1234);
  CHECK(tokenize(std::vector<double>{0.0, 1.0}, cfg()).tokens == std::vector<Token>{0, 10000});
  CHECK_THROWS_AS(tokenize(std::vector<double>{0.12345}, cfg()), InputError);
  CHECK_THROWS_AS(tokenize(std::vector<double>{1.5}, cfg()), InputError);
}

TEST_CASE("detokenize and decode examples") {
  TokenSequence t{{0, 5000, 10000}, NormalizationRecord{10, 20, false}, cfg()};
  CHECK(decode(t) == std::vector<double>{10.0, 15.0, 20.0});
  t.norm = NormalizationRecord{4.5, 4.5, true};
  for (double v : decode(t)) CHECK(v == 4.5);
  t.tokens = {10001};
  CHECK_THROWS_AS(detokenize(t), InputError);
}

TEST_CASE("tokenize is a bijection on the grid and order preserving") {
  for (std::uint32_t q : {3u, 10000u}) {
    std::vector<double> grid;
    for (std::uint32_t i = 0; i <= q; ++i) grid.push_back(static_cast<double>(i) / q);
    const auto t = tokenize(grid, cfg(q));
    for (std::uint32_t i = 0; i <= q; ++i) CHECK(t.tokens[i] == i);
    CHECK(detokenize(t) == grid);
  }
}

TEST_CASE("encode without a filter reconstructs within range/Q") {
  for (auto mode : {RoundingMode::floor, RoundingMode::nearest}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto x = random_series(seed, 200);
      const auto seq = encode(x, std::nullopt, cfg(10000, mode));
      const double bound = seq.norm.range() / 10000.0 * (mode == RoundingMode::floor ? 1.0 : 0.5);
      const auto back = decode(seq);
      for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(std::abs(back[i] - x[i]) <= bound * (1.0 + 1e-9));
      }
      for (Token t : seq.tokens) CHECK(t <= 10000);
    }
  }
}

TEST_CASE("encode with a filter reconstructs the filtered series") {
  const dsp::FilterSpec spec{5, 10.0, 100.0};
  const auto x = testsupport::lowband_plus_highband(9, 512, 100.0, 5.0, 20.0, 0.5).x();
  const auto filtered = dsp::filtfilt(dsp::design_butterworth(spec), x);
  const auto seq = encode(x, spec, cfg());
  const auto back = decode(seq);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(back[i] - filtered[i]) <= seq.norm.range() / 10000.0 * (1.0 + 1e-9));
  }
}

TEST_CASE("constant series encodes to equal tokens") {
  const auto seq = encode(std::vector<double>(64, 3.25), dsp::FilterSpec{5, 10.0, 100.0}, cfg());
  for (Token t : seq.tokens) CHECK(t == seq.tokens.front());
  for (double v : decode(seq)) CHECK(std::abs(v - 3.25) < 1e-9);
}

TEST_CASE("filtered encoding is closer to the clean tone than the unfiltered one") {
  const auto d = testsupport::lowband_plus_highband(17, 1024, 100.0, 4.0, 20.0, 0.8);
  const auto x = d.x();
  auto error_power = [&](const TokenSequence& seq) {
    const auto y = decode(seq);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - d.s[i]) * (y[i] - d.s[i]);
    return acc;
  };
  const double with = error_power(encode(x, dsp::FilterSpec{5, 10.0, 100.0}, cfg()));
  const double without = error_power(encode(x, std::nullopt, cfg()));
  CHECK(with < without);
}

TEST_CASE("near-identity filter moves almost no sample by more than one step") {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::sin(2.0 * testsupport::kPi * 0.01 * static_cast<double>(i));
  }
  const auto a = encode(x, dsp::FilterSpec{1, 0.99, 2.0}, cfg());
  const auto b = encode(x, std::nullopt, cfg());
  const auto ya = decode(a);
  const auto yb = decode(b);
  const double step = b.norm.range() / 10000.0;
  // Interior only: the pole near z = -1 rings through the short odd
  // extension for a few dozen samples at each end.
  const std::size_t edge = 50;
  std::size_t moved = 0;
  for (std::size_t i = edge; i + edge < x.size(); ++i) moved += std::abs(ya[i] - yb[i]) > step;
  CHECK(moved <= x.size() / 100);
}

TEST_CASE("token file round trip and header layout") {
  const TokenSequence seq{{0, 1, 9999, 10000}, NormalizationRecord{-1.5, 2.25, false},
                          cfg(10000, RoundingMode::nearest)};
  std::stringstream buf;
  write_tokens(buf, seq);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == kTokenFileHeaderSize + 4 * seq.size());
  CHECK(bytes.substr(0, 4) == "APQT");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[6]) == 1);
  CHECK(read_tokens(buf) == seq);

  testsupport::TempDir dir("codec");
  TokenSequence degenerate{{5000, 5000}, NormalizationRecord{7, 7, true}, cfg()};
  write_token_file(dir / "t.bin", degenerate);
  CHECK(read_token_file(dir / "t.bin") == degenerate);
}

TEST_CASE("token file reader rejects corrupt input") {
  const TokenSequence seq{{1, 2, 3}, NormalizationRecord{0, 1, false}, cfg(10)};
  std::stringstream buf;
  write_tokens(buf, seq);
  const std::string good = buf.str();

  auto read = [](std::string bytes) {
    std::stringstream in(bytes);
    return read_tokens(in);
  };
  CHECK_THROWS_AS(read(good.substr(0, 20)), InputError);
  CHECK_THROWS_AS(read(good.substr(0, good.size() - 2)), InputError);
  std::string bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(read(bad), InputError);
  bad = good;
  bad[4] = 9;
  CHECK_THROWS_AS(read(bad), InputError);
  bad = good;
  bad[kTokenFileHeaderSize] = 11;  // token above Q = 10
  CHECK_THROWS_AS(read(bad), InputError);
  CHECK_THROWS_AS(read_token_file("/nonexistent/dir/t.bin"), InputError);
}
