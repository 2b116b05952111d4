#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>
#include <vector>

#include "apollo/codec/codec.hpp"
#include "apollo/error.hpp"
#include "apollo/forecast/frame_stream.hpp"
#include "apollo/forecast/predictor.hpp"
#include "apollo/forecast/reference.hpp"
#include "apollo/forecast/subprocess.hpp"
#include "synth.hpp"

using namespace apollo;
using namespace apollo::forecast;

namespace {

ForecastRequest request(std::vector<Token> ctx, std::size_t horizon, std::size_t samples = 1,
                        std::uint64_t seed = 0) {
  ForecastRequest r;
  r.context.tokens = std::move(ctx);
  r.context.config = codec::QuantizationConfig{};
  r.horizon = horizon;
  r.num_samples = samples;
  r.seed = seed;
  return r;
}

ForecastRequest encoded_request(const std::vector<double>& x, std::size_t horizon,
                                std::size_t samples, std::uint64_t seed) {
  ForecastRequest r;
  r.context = codec::encode(x, std::nullopt, codec::QuantizationConfig{});
  r.horizon = horizon;
  r.num_samples = samples;
  r.seed = seed;
  return r;
}

// Yule-Walker by explicit autocovariances and Gaussian elimination.
std::vector<double> yule_walker(const std::vector<double>& x, std::size_t p) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> r(p + 1, 0.0);
  for (std::size_t lag = 0; lag <= p; ++lag) {
    for (std::size_t t = lag; t < n; ++t) r[lag] += (x[t] - mean) * (x[t - lag] - mean);
    r[lag] /= static_cast<double>(n);
  }
  std::vector<std::vector<double>> m(p, std::vector<double>(p + 1));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) m[i][j] = r[i > j ? i - j : j - i];
    m[i][p] = r[i + 1];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < p; ++i) {
      if (std::abs(m[i][c]) > std::abs(m[piv][c])) piv = i;
    }
    std::swap(m[c], m[piv]);
    for (std::size_t i = 0; i < p; ++i) {
      if (i == c) continue;
      const double f = m[i][c] / m[c][c];
      for (std::size_t j = c; j <= p; ++j) m[i][j] -= f * m[c][j];
    }
  }
  std::vector<double> phi(p);
  for (std::size_t i = 0; i < p; ++i) phi[i] = m[i][p] / m[i][i];
  return phi;
}

}  // namespace

TEST_CASE("persistence repeats the last context token in every sample") {
  const auto h = make_reference_predictor(ReferenceKind::persistence);
  CHECK(h.model_id == "persistence");
  const auto r = predict(h, request({7, 99, 1234}, 5, 3));
  REQUIRE(r.frames() == 5);
  for (Token t : r.tokens) CHECK(t == 1234);
}

TEST_CASE("seasonal naive continues a periodic context exactly") {
  const std::vector<Token> period{10, 20, 30, 40, 50, 60, 70};
  std::vector<Token> ctx;
  for (int rep = 0; rep < 4; ++rep) ctx.insert(ctx.end(), period.begin(), period.end());
  const auto h = make_reference_predictor(ReferenceKind::seasonal_naive, {7, 1});
  CHECK(h.model_id == "seasonal_naive(7)");
  const auto r = predict(h, request(ctx, 17, 2));
  for (std::size_t j = 0; j < 17; ++j) {
    CHECK(r.frame(j)[0] == period[j % 7]);
    CHECK(r.frame(j)[1] == period[j % 7]);
  }
}

TEST_CASE("seasonal naive of period 24 repeats the last 24 frames") {
  std::vector<Token> ctx;
  for (Token i = 0; i < 60; ++i) ctx.push_back(i * 3);
  const auto r =
      predict(make_reference_predictor(ReferenceKind::seasonal_naive, {24, 1}), request(ctx, 30));
  for (std::size_t j = 0; j < 30; ++j) CHECK(r.frame(j)[0] == ctx[60 - 24 + j % 24]);
}

TEST_CASE("reference parameters are validated") {
  CHECK_THROWS_AS(make_reference_predictor(ReferenceKind::seasonal_naive, {0, 1}), ConfigError);
  CHECK_THROWS_AS(make_reference_predictor(ReferenceKind::ar, {1, 0}), ConfigError);
  CHECK(parse_reference_kind("seasonal_naive") == ReferenceKind::seasonal_naive);
  CHECK_THROWS_AS(parse_reference_kind("lstm"), ConfigError);
  const auto sn = make_reference_predictor(ReferenceKind::seasonal_naive, {50, 1});
  CHECK_THROWS_AS(predict(sn, request({1, 2, 3}, 2)), InputError);
}

TEST_CASE("request validation") {
  const auto h = make_reference_predictor(ReferenceKind::persistence);
  CHECK_THROWS_AS(predict(h, request({}, 2)), InputError);
  CHECK_THROWS_AS(predict(h, request({1}, 0)), ConfigError);
  CHECK_THROWS_AS(predict(h, request({1}, 1, 0)), ConfigError);
  CHECK_THROWS_AS(predict(h, request({10001}, 1)), InputError);
}

TEST_CASE("AR(2) one-step forecast lies within 3 sigma of the conditional mean") {
  const std::vector<double> phi{0.6, -0.3};
  const double sigma = 0.5;
  const double c = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = testsupport::ar_process(seed, 512, phi, sigma, c);
    const auto m = fit_ar(x, 2);
    const std::size_t n = x.size();
    const double truth = c + phi[0] * x[n - 1] + phi[1] * x[n - 2];
    CHECK(std::abs(m.predict_next(x) - truth) < 3.0 * sigma);

    // Through the predictor, in normalized units.
    const auto req = encoded_request(x, 1, 101, seed);
    const auto r = predict(make_reference_predictor(ReferenceKind::ar, {1, 2}), req);
    std::vector<Token> f(r.frame(0).begin(), r.frame(0).end());
    std::nth_element(f.begin(), f.begin() + 50, f.end());
    const double range = req.context.norm.range();
    const double median = req.context.norm.min_val + f[50] / 10000.0 * range;
    CHECK(std::abs(median - truth) < 3.0 * sigma);
  }
}

TEST_CASE("AR(3) least-squares coefficients agree with Yule-Walker") {
  const std::vector<double> phi{0.5, -0.2, 0.15};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = testsupport::ar_process(100 + seed, 512, phi, 1.0);
    const auto yw = yule_walker(x, 3);
    const auto m = fit_ar(x, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CAPTURE(i);
      CHECK(std::abs(m.coeffs[i] - yw[i]) <= 0.1 * std::abs(yw[i]));
    }
  }
}

TEST_CASE("fit_ar rejects short series") {
  CHECK_THROWS_AS(fit_ar(std::vector<double>(7, 1.0), 3), InputError);
  CHECK_NOTHROW(fit_ar(testsupport::white_noise(1, 8, 1.0), 3));
}

TEST_CASE("reference predictors are deterministic and emit tokens in range") {
  const auto x = testsupport::ar_process(3, 300, {0.9}, 1.0);
  const auto req = encoded_request(x, 40, 16, 77);
  for (const auto& h : {make_reference_predictor(ReferenceKind::ar, {1, 4}),
                        make_reference_predictor(ReferenceKind::persistence),
                        make_reference_predictor(ReferenceKind::seasonal_naive, {12, 1})}) {
    const auto a = predict(h, req);
    const auto b = predict(h, req);
    CHECK(a.tokens == b.tokens);
    for (Token t : a.tokens) CHECK(t <= 10000);
  }
  auto other = req;
  other.seed = 78;
  const auto ar = make_reference_predictor(ReferenceKind::ar, {1, 4});
  CHECK(predict(ar, req).tokens != predict(ar, other).tokens);
}

TEST_CASE("sample paths are independent draws of the same model") {
  const auto x = testsupport::ar_process(5, 300, {0.5}, 1.0);
  const auto r = predict(make_reference_predictor(ReferenceKind::ar, {1, 1}),
                         encoded_request(x, 10, 8, 1));
  CHECK(r.path(0) != r.path(1));
  CHECK(r.path(3).size() == 10);
}

TEST_CASE("simulated latency leaves values unchanged and paces the stream") {
  const auto base = make_reference_predictor(ReferenceKind::ar, {1, 2});
  const auto req = encoded_request(testsupport::ar_process(9, 200, {0.7}, 1.0), 100, 4, 2);
  const auto fast = predict(base, req);
  const auto slow_h = with_simulated_latency(base, 0.010);

  const auto t0 = std::chrono::steady_clock::now();
  const auto slow = predict(slow_h, req);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(slow.tokens == fast.tokens);
  CHECK(elapsed >= 1.0);
  CHECK(elapsed <= 1.1);
  CHECK(slow.frame_done_at.back() >= 1.0);
  for (std::size_t j = 1; j < slow.frames(); ++j) {
    CHECK(slow.frame_done_at[j] >= slow.frame_done_at[j - 1]);
  }

  CHECK_THROWS_AS(with_simulated_latency(base, -0.1), ConfigError);
  CHECK_THROWS_AS(with_simulated_latency(base, 0.1, NAN), ConfigError);
}

TEST_CASE("main/draft latency ratio is at least 8 at 20 ms vs 2 ms") {
  const auto base = make_reference_predictor(ReferenceKind::ar, {1, 2});
  const auto req = encoded_request(testsupport::ar_process(9, 200, {0.7}, 1.0), 100, 4, 2);
  const auto main = predict(with_simulated_latency(base, 0.020), req);
  const auto draft = predict(with_simulated_latency(base, 0.002), req);
  CHECK(main.frame_done_at.back() / draft.frame_done_at.back() >= 8.0);
}

TEST_CASE("simulated clock stamps cumulative delays without sleeping") {
  const auto h = with_simulated_latency(make_reference_predictor(ReferenceKind::persistence), 0.5,
                                        0.1);
  StreamOptions opts;
  opts.clock = ClockMode::simulated;
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = predict(h, request({5}, 50), opts);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 1.0);
  CHECK(a.frame_done_at.back() == doctest::Approx(25.0).epsilon(0.05));
  for (std::size_t j = 0; j < a.frames(); ++j) {
    const double gap = a.frame_done_at[j] - (j == 0 ? 0.0 : a.frame_done_at[j - 1]);
    CHECK(gap >= 0.4 - 1e-12);
    CHECK(gap <= 0.6 + 1e-12);
  }
  CHECK(predict(h, request({5}, 50), opts).frame_done_at == a.frame_done_at);
}

TEST_CASE("frame stream publishes in order and a reader sees only whole frames") {
  const std::size_t horizon = 2000;
  const std::size_t samples = 64;
  FrameStream sink(horizon, samples);
  std::jthread producer([&] {
    std::vector<Token> frame(samples);
    for (std::size_t j = 0; j < horizon; ++j) {
      std::fill(frame.begin(), frame.end(), static_cast<Token>(j));
      sink.publish(frame, static_cast<double>(j));
    }
  });
  bool consistent = true;
  while (!sink.terminal()) {
    const std::size_t k = sink.published();
    for (std::size_t j = 0; j < k; ++j) {
      for (Token t : sink.frame(j)) consistent = consistent && t == j;
    }
  }
  producer.join();
  CHECK(consistent);
  CHECK(sink.complete());
  CHECK(sink.snapshot("m").frames() == horizon);
  CHECK(sink.snapshot("m", 10).tokens.size() == 10 * samples);
}

TEST_CASE("stop token cancels a stream at a frame boundary") {
  const auto h =
      with_simulated_latency(make_reference_predictor(ReferenceKind::persistence), 0.01);
  const auto req = request({42}, 1000);
  FrameStream sink(req.horizon, req.num_samples);
  std::stop_source stop;
  StreamOptions opts;
  opts.stop = stop.get_token();
  std::jthread t([&] { predict_stream(h, req, sink, opts); });
  sink.wait([&] { return sink.published() >= 5; });
  stop.request_stop();
  t.join();
  CHECK(sink.state() == FrameStream::State::cancelled);
  CHECK(sink.published() < 1000);
  CHECK(sink.published() >= 5);
}

TEST_CASE("a failing predictor marks the sink failed and keeps earlier frames") {
  struct Flaky : Predictor {
    std::string describe() const override { return "flaky"; }
    std::unique_ptr<FrameGenerator> start(const ForecastRequest&) const override {
      struct Gen : FrameGenerator {
        int n = 0;
        void next(std::span<Token> frame) override {
          if (++n > 3) throw RuntimeError("model crashed");
          std::fill(frame.begin(), frame.end(), 1);
        }
      };
      return std::make_unique<Gen>();
    }
  };
  PredictorHandle h{"flaky", Role::main, 0.0, std::make_shared<Flaky>(), {}};
  const auto req = request({1}, 10);
  FrameStream sink(req.horizon, req.num_samples);
  CHECK_THROWS_AS(predict_stream(h, req, sink), RuntimeError);
  CHECK(sink.state() == FrameStream::State::failed);
  CHECK(sink.published() == 3);
  REQUIRE(sink.error().has_value());
  CHECK(sink.error()->find("model crashed") != std::string::npos);
}

TEST_CASE("protocol lines round trip") {
  const std::vector<Token> frame{0, 17, 10000};
  const auto line = format_frame_line(frame);
  CHECK(line == "0,17,10000");
  CHECK(parse_frame_line(line, 3, 10000) == frame);
  CHECK_THROWS_AS(parse_frame_line("1,2", 3, 10000), InputError);
  CHECK_THROWS_AS(parse_frame_line("1,x,3", 3, 10000), InputError);
  CHECK_THROWS_AS(parse_frame_line("1,2,10001", 3, 10000), InputError);

  auto req = request({3, 4, 5}, 6, 2, 9);
  std::stringstream buf;
  write_request(buf, req);
  const auto back = read_request(buf);
  CHECK(back.context.tokens == req.context.tokens);
  CHECK(back.horizon == 6);
  CHECK(back.num_samples == 2);
  CHECK(back.seed == 9);

  std::stringstream bad("apollo-forecast/2 horizon=1 samples=1 seed=0 quant=10\n1\n");
  CHECK_THROWS_AS(read_request(bad), InputError);
}

TEST_CASE("serve_request streams what the in-process predictor produces") {
  const auto h = make_reference_predictor(ReferenceKind::seasonal_naive, {3, 1});
  const auto req = request({1, 2, 3, 4, 5, 6}, 5, 2);
  std::stringstream in;
  write_request(in, req);
  std::stringstream out;
  serve_request(h, in, out);
  CHECK(out.str() == "4,4\n5,5\n6,6\n4,4\n5,5\n");
}

TEST_CASE("subprocess predictor matches the in-process model") {
  const std::string cli = APOLLO_CLI_PATH;
  const auto remote = make_subprocess_predictor(cli + " forecast --serve --model ar:order=3");
  const auto local = make_reference_predictor(ReferenceKind::ar, {1, 3});
  const auto req = encoded_request(testsupport::ar_process(4, 256, {0.8, -0.1}, 1.0), 12, 5, 31);
  CHECK(predict(remote, req).tokens == predict(local, req).tokens);

  const auto broken = make_subprocess_predictor("echo not-a-frame");
  CHECK_THROWS_AS(predict(broken, req), Error);
  const auto missing = make_subprocess_predictor("exit 3");
  CHECK_THROWS_AS(predict(missing, req), Error);
}
