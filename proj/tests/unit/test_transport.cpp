#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <random>
#include <thread>

#include "polyshare/errors.hpp"
#include "polyshare/poly_protocols.hpp"
#include "polyshare/transport.hpp"
#include "test_support.hpp"

using namespace polyshare;

TEST_CASE("wire format is a count prefix and little-endian words") {
  const std::vector<u64> v{1, 0x0102030405060708ULL};
  const auto bytes = encode_wire(v);
  REQUIRE(bytes.size() == 24);
  CHECK(bytes[0] == 2);
  for (int i = 1; i < 8; ++i) CHECK(bytes[i] == 0);
  CHECK(bytes[8] == 1);
  CHECK(bytes[16] == 0x08);
  CHECK(bytes[23] == 0x01);
  CHECK(decode_wire(bytes) == v);
  CHECK(wire_size(1000) == 8008);
  CHECK(decode_wire(encode_wire({})).empty());
}

TEST_CASE("malformed frames are transport errors") {
  auto bytes = encode_wire(std::vector<u64>{1, 2, 3});
  bytes.pop_back();
  CHECK_THROWS_AS(decode_wire(bytes), TransportError);
  CHECK_THROWS_AS(decode_wire(std::vector<std::uint8_t>{1, 2}), TransportError);
  auto huge = encode_wire(std::vector<u64>{1});
  huge[7] = 0xFF;
  CHECK_THROWS_AS(decode_wire(huge), TransportError);
}

TEST_CASE("exchange delivers both payloads and counts bytes") {
  const std::vector<u64> pa(1000, 7);
  const std::vector<u64> pb{1, 2, 3};
  const auto r = simulate_exchange(NetworkConfig{}, pa, pb);
  CHECK(r.received_by_b == pa);
  CHECK(r.received_by_a == pb);
  CHECK(r.transcript.rounds == 1);
  CHECK(r.transcript.bytes_sent[0] == 8008);
  CHECK(r.transcript.bytes_sent[1] == wire_size(3));
}

TEST_CASE("injected delay adds up per exchange") {
  auto [ca, cb] = make_local_channel_pair();
  const NetworkConfig cfg{100.0, std::nullopt, TransportMode::in_process};
  Endpoint a(Role::A, std::move(ca), cfg);
  Endpoint b(Role::B, std::move(cb), cfg);
  const std::vector<u64> payload{1};
  std::thread tb([&] {
    for (int i = 0; i < 3; ++i) b.exchange(payload);
  });
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 3; ++i) a.exchange(payload);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  tb.join();
  const auto snap = a.transcript().snapshot();
  CHECK(snap.rounds == 3);
  CHECK(snap.injected_delay_s == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(wall >= 0.3);
  CHECK(wall < 0.4);
}

TEST_CASE("bandwidth adds serialization time") {
  const NetworkConfig cfg{0.0, 80080.0, TransportMode::in_process};
  const std::vector<u64> payload(1000, 1);
  const auto r = simulate_exchange(cfg, payload, payload);
  CHECK(r.transcript.injected_delay_s == doctest::Approx(0.1));
}

TEST_CASE("network presets and validation") {
  CHECK(NetworkConfig::lan().roundtrip_delay_ms == 0.25);
  CHECK(NetworkConfig::wan().roundtrip_delay_ms == 100.0);
  CHECK_THROWS_AS((NetworkConfig{-1.0, std::nullopt, TransportMode::in_process}.validate()), ConfigError);
  CHECK_THROWS_AS((NetworkConfig{0.0, 0.0, TransportMode::in_process}.validate()), ConfigError);
}

TEST_CASE("closing a channel wakes the blocked peer") {
  auto [ca, cb] = make_local_channel_pair();
  std::thread closer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    ca->close();
  });
  CHECK_THROWS_AS(cb->receive(), TransportError);
  closer.join();
}

TEST_CASE("a failing party does not hang its peer") {
  CHECK_THROWS_AS(run_two_party(
                      testsupport::options(1), [](Session&) { throw ConfigError("party A gives up"); },
                      [](Session& s) { s.open(Share{1, Role::B, 0}); }),
                  ConfigError);
}

TEST_CASE("socket frames carry the same payloads") {
  SocketListener listener(0);
  std::unique_ptr<FrameChannel> client;
  std::thread t([&] { client = socket_connect("127.0.0.1", listener.port()); });
  auto server = listener.accept();
  t.join();
  const std::vector<u64> v{42, ~u64{0}};
  client->send(encode_wire(v));
  CHECK(decode_wire(server->receive()) == v);
  server->send(encode_wire({}));
  CHECK(decode_wire(client->receive()).empty());
  server->close();
  CHECK_THROWS_AS(client->receive(), TransportError);
}

TEST_CASE("socket and in-process transcripts are identical") {
  std::mt19937_64 rng(21);
  const auto [xa, xb] = testsupport::share_reals(testsupport::random_input(257, rng, -5, 5), 16, rng);
  for (Protocol p : all_protocols()) {
    CAPTURE(protocol_name(p));
    auto f = [p](Session& s, const ShareVec& x) { return apply_activation(s, p, x, PolynomialSpec::default_relu()); };
    auto opts = testsupport::options(3);
    const auto local = testsupport::run_pair(xa, xb, f, opts);
    opts.net.mode = TransportMode::socket;
    const auto sock = testsupport::run_pair(xa, xb, f, opts);
    CHECK(local.run.a.rounds == sock.run.a.rounds);
    CHECK(local.run.a.bytes_sent == sock.run.a.bytes_sent);
    CHECK(local.run.b.bytes_sent == sock.run.b.bytes_sent);
    CHECK(reconstruct(local.a, local.b) == reconstruct(sock.a, sock.b));
  }
}

TEST_CASE("wall time follows rounds times delay") {
  std::mt19937_64 rng(22);
  const auto [xa, xb] = testsupport::share_reals(testsupport::random_input(64, rng, -5, 5), 16, rng);
  auto f = [](Session& s, const ShareVec& x) { return relu_binary(s, x); };
  for (double delay : {10.0, 30.0}) {
    auto opts = testsupport::options(4);
    opts.net.roundtrip_delay_ms = delay;
    const auto r = testsupport::run_pair(xa, xb, f, opts);
    const double predicted = static_cast<double>(r.run.a.rounds) * delay / 1000.0;
    CHECK(r.run.a.wall_time_s >= predicted);
    CHECK(r.run.a.wall_time_s <= predicted * 1.1);
  }
}
