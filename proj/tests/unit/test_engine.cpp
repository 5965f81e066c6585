#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <thread>

#include "polyshare/engine.hpp"
#include "polyshare/errors.hpp"
#include "test_support.hpp"

using namespace polyshare;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ModelGraph identity_fc(int n) {
  ModelGraph g;
  g.input_shape = {n};
  g.classes = n;
  Dense d{n, n, std::vector<float>(static_cast<std::size_t>(n * n), 0.0f), std::vector<float>(static_cast<std::size_t>(n), 0.0f)};
  for (int i = 0; i < n; ++i) d.weight[static_cast<std::size_t>(i * n + i)] = 1.0f;
  g.layers = {d};
  return g;
}

}  // namespace

TEST_CASE("identity layer returns its input") {
  const auto g = identity_fc(4);
  const std::vector<double> x{0.5, -2.25, 3.0, 0.0078125};
  const auto run = run_secure_inference(g, x, Protocol::espn, testsupport::options(7), 8);
  // One local truncation: at most one unit of 2^-16 off.
  CHECK(max_abs_diff(run.logits, x) <= std::ldexp(1.0, -16));
  CHECK(run.layer_rounds == std::vector<std::uint64_t>{1});
  CHECK(run.prediction == 2);
}

TEST_CASE("secure mlp tracks the plain fixed-point replay") {
  const auto g = testsupport::toy_mlp(11);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto x = testsupport::random_input(8, rng);
    const auto run = run_secure_inference(g, x, Protocol::espn, testsupport::options(100 + t), 200 + t);
    const auto plain = plain_infer_fixed(g, x);
    const auto real = plain_infer_real(g, x);
    CAPTURE(t);
    // Each share truncation may land one unit high; that unit passes through
    // the polynomial and a 12-term dot product.
    CHECK(max_abs_diff(run.logits, plain) <= std::ldexp(1.0, -10));
    CHECK(max_abs_diff(run.logits, real) <= std::ldexp(1.0, -10));
  }
}

TEST_CASE("per-layer rounds on the toy cnn") {
  const auto g = testsupport::toy_cnn(21);
  std::mt19937_64 rng(22);
  const auto x = testsupport::random_input(64, rng);
  const auto run = run_secure_inference(g, x, Protocol::espn, testsupport::options(23), 24);
  // conv act pool conv bn act pool fc act fc
  CHECK(run.layer_rounds == std::vector<std::uint64_t>{1, 1, 0, 1, 0, 1, 0, 1, 1, 1});
  CHECK(run.transcript.rounds == 7);
  CHECK_FALSE(run.relu_substituted);
  const auto plain = plain_infer_fixed(g, x);
  CHECK(max_abs_diff(run.logits, plain) <= std::ldexp(1.0, -8));
}

TEST_CASE("espn and honeybadger agree on rounds and logits") {
  const auto g = testsupport::toy_cnn(31);
  std::mt19937_64 rng(32);
  for (int t = 0; t < 5; ++t) {
    const auto x = testsupport::random_input(64, rng);
    const auto e = run_secure_inference(g, x, Protocol::espn, testsupport::options(40 + t), 50 + t);
    const auto h = run_secure_inference(g, x, Protocol::honeybadger, testsupport::options(40 + t), 50 + t);
    CHECK(e.layer_rounds == h.layer_rounds);
    CHECK(e.prediction == h.prediction);
    CHECK(h.transcript.total_bytes() < e.transcript.total_bytes());
    CHECK(max_abs_diff(e.logits, h.logits) <= std::ldexp(1.0, -8));
  }
}

TEST_CASE("square-and-multiply spends more rounds per activation") {
  const auto g = testsupport::toy_mlp(41);
  std::mt19937_64 rng(42);
  const auto x = testsupport::random_input(8, rng);
  const auto run = run_secure_inference(g, x, Protocol::sqmul, testsupport::options(43), 44);
  CHECK(run.layer_rounds == std::vector<std::uint64_t>{1, 2, 1});
  CHECK(max_abs_diff(run.logits, plain_infer_fixed(g, x, Protocol::sqmul)) <= std::ldexp(1.0, -10));
}

TEST_CASE("binary relu replaces the polynomial and reports it") {
  const auto g = testsupport::toy_mlp(51);
  std::mt19937_64 rng(52);
  const auto x = testsupport::random_input(8, rng);
  const auto run = run_secure_inference(g, x, Protocol::binary_relu, testsupport::options(53), 54);
  CHECK(run.relu_substituted);
  CHECK(run.layer_rounds == std::vector<std::uint64_t>{1, 9, 1});
  CHECK(max_abs_diff(run.logits, plain_infer_real(g, x, true)) <= std::ldexp(1.0, -10));
  CHECK(max_abs_diff(run.logits, plain_infer_fixed(g, x, Protocol::binary_relu)) <= std::ldexp(1.0, -10));
}

TEST_CASE("out-of-range ratio") {
  auto g = testsupport::toy_mlp(61);
  std::mt19937_64 rng(62);
  std::vector<std::vector<double>> inputs;
  for (int i = 0; i < 50; ++i) inputs.push_back(testsupport::random_input(8, rng));

  auto zero = g;
  for (auto& l : zero.layers)
    if (auto* d = std::get_if<Dense>(&l)) {
      std::fill(d->weight.begin(), d->weight.end(), 0.0f);
      std::fill(d->bias.begin(), d->bias.end(), 0.0f);
    }
  CHECK(oor_ratio(zero, inputs, 5.0) == 0.0);

  auto big = g;
  auto& fc1 = std::get<Dense>(big.layers[0]);
  for (auto& w : fc1.weight) w *= 1000.0f;
  for (auto& b : fc1.bias) b = 0.0f;
  CHECK(oor_ratio(big, inputs, 5.0) > 0.95);
  const double r = oor_ratio(g, inputs, 5.0);
  CHECK(r >= 0.0);
  CHECK(r <= 1.0);
}

TEST_CASE("dealer exhaustion surfaces as a resource error") {
  const auto g = testsupport::toy_mlp(71);
  std::mt19937_64 rng(72);
  const auto x = testsupport::random_input(8, rng);
  auto opts = testsupport::options(73);
  opts.triple_limit = 50;  // fc1 alone needs 96
  CHECK_THROWS_AS(run_secure_inference(g, x, Protocol::espn, opts, 74), ResourceError);
}

TEST_CASE("serial and parallel kernels give identical shares") {
  const auto g = testsupport::toy_cnn(81);
  std::mt19937_64 rng(82);
  const auto x = testsupport::random_input(64, rng);
  for (Protocol proto : all_protocols()) {
    const auto par = run_secure_inference(g, x, proto, testsupport::options(83, 16, kernels::Exec::parallel), 84);
    const auto ser = run_secure_inference(g, x, proto, testsupport::options(83, 16, kernels::Exec::serial), 84);
    CAPTURE(protocol_name(proto));
    CHECK(par.logits == ser.logits);
    CHECK(par.transcript.rounds == ser.transcript.rounds);
    CHECK(par.transcript.bytes_sent == ser.transcript.bytes_sent);
  }
}

TEST_CASE("residual connections add the earlier output") {
  ModelGraph g;
  g.input_shape = {3};
  g.classes = 3;
  g.layers = {identity_fc(3).layers[0], ResidualAdd{-1}, ResidualAdd{0}};
  const std::vector<double> x{0.25, -0.5, 1.0};
  const auto run = run_secure_inference(g, x, Protocol::espn, testsupport::options(91), 92);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(run.logits[i] - 3 * x[i]) <= 2 * std::ldexp(1.0, -16));
  CHECK(run.layer_rounds == std::vector<std::uint64_t>{1, 0, 0});
}

TEST_CASE("input validation") {
  const auto g = testsupport::toy_mlp(1);
  const std::vector<double> short_input(7, 0.0);
  CHECK_THROWS_AS(plain_infer_fixed(g, short_input), ConfigError);
  CHECK_THROWS_AS(run_secure_inference(g, short_input, Protocol::espn, testsupport::options(1), 2), ConfigError);
}

TEST_CASE("split-process inference over a socket") {
  const auto g = testsupport::toy_mlp(101);
  std::mt19937_64 rng(102);
  const auto x = testsupport::random_input(8, rng);
  const auto opts = testsupport::options(103);
  SocketListener listener(0);
  const auto port = listener.port();
  InferenceRun server;
  std::thread t([&] { server = run_party_inference(Role::B, listener.accept(), g, {}, Protocol::espn, opts, 104); });
  const auto client = run_party_inference(Role::A, socket_connect("127.0.0.1", port), g, x, Protocol::espn, opts, 104);
  t.join();
  CHECK(server.logits.empty());
  CHECK(client.layer_rounds == std::vector<std::uint64_t>{1, 1, 1});
  CHECK(client.transcript.rounds == 3);
  CHECK(server.transcript.rounds == 3);
  CHECK(max_abs_diff(client.logits, plain_infer_fixed(g, x)) <= std::ldexp(1.0, -10));
}
