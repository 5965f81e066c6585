#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "polyshare/dealer.hpp"
#include "polyshare/errors.hpp"
#include "polyshare/session.hpp"
#include "polyshare/share.hpp"
#include "test_support.hpp"

using namespace polyshare;
using testsupport::options;

TEST_CASE("share masks with the first rng output") {
  std::mt19937_64 rng(42);
  std::mt19937_64 copy(42);
  const u64 first = copy();
  auto [a, b] = share(encode(0.0, RingConfig{}), rng);
  CHECK(a.value == first);
  CHECK(b.value == u64{0} - first);
  CHECK(a.role == Role::A);
  CHECK(b.role == Role::B);
  CHECK(reconstruct(a, b).raw == 0);
}

TEST_CASE("reconstruct adds shares") {
  CHECK(reconstruct(Share{7, Role::A, 16}, Share{u64{0} - 7, Role::B, 16}).raw == 0);
  CHECK(reconstruct(Share{10, Role::A, 16}, Share{u64{0} - 7, Role::B, 16}).raw == 3);
  CHECK_THROWS_AS(reconstruct(Share{1, Role::A, 16}, Share{1, Role::B, 8}), ProtocolError);
  CHECK_THROWS_AS(reconstruct(Share{1, Role::A, 16}, Share{1, Role::A, 16}), ProtocolError);
}

TEST_CASE("share round trip on random values") {
  std::mt19937_64 values(1);
  std::mt19937_64 rng(2);
  std::vector<u64> raw(100000);
  for (auto& v : raw) v = values();
  auto [a, b] = share(raw, 16, rng);
  CHECK(reconstruct(a, b) == raw);

  std::mt19937_64 other(3);
  auto [a2, b2] = share(raw, 16, other);
  CHECK(a2.values != a.values);
  CHECK(reconstruct(a2, b2) == raw);
}

TEST_CASE("linear combination is local and exact") {
  const Share xa{5, Role::A, 0};
  const Share xb{u64{0} - 4, Role::B, 0};  // x = 1
  const Share ya{100, Role::A, 0};
  const Share yb{u64{0} - 98, Role::B, 0};  // y = 2
  const u64 identity[1] = {1};
  CHECK(reconstruct(linear_combine(identity, std::vector<Share>{xa}, 0),
                    linear_combine(identity, std::vector<Share>{xb}, 0)).raw == 1);
  const u64 consts[2] = {2, 3};
  const Share za = linear_combine(consts, std::vector<Share>{xa, ya}, 5);
  const Share zb = linear_combine(consts, std::vector<Share>{xb, yb}, 5);
  CHECK(reconstruct(za, zb).raw == 13);
  CHECK_THROWS_AS(linear_combine(consts, std::vector<Share>{xa, yb}, 0), ProtocolError);

  std::mt19937_64 rng(9);
  for (int t = 0; t < 10000; ++t) {
    const u64 c1 = rng(), c2 = rng(), off = rng(), x = rng(), y = rng();
    const u64 mx = rng(), my = rng();
    const u64 cs[2] = {c1, c2};
    const Share a = linear_combine(cs, std::vector<Share>{{mx, Role::A, 0}, {my, Role::A, 0}}, off);
    const Share b = linear_combine(cs, std::vector<Share>{{x - mx, Role::B, 0}, {y - my, Role::B, 0}}, off);
    CHECK(reconstruct(a, b).raw == c1 * x + c2 * y + off);
  }
}

TEST_CASE("beaver multiplication on the hand example") {
  // x = 6, y = 7 with triple a = 2, b = 3, c = 6.
  const ShareVec xa(Role::A, 0, std::vector<u64>{4});
  const ShareVec xb(Role::B, 0, std::vector<u64>{2});
  const ShareVec ya(Role::A, 0, std::vector<u64>{10});
  const ShareVec yb(Role::B, 0, std::vector<u64>{u64{0} - 3});
  const std::vector<TripleShare> ta{{1, 1, 5}};
  const std::vector<TripleShare> tb{{1, 2, 1}};
  std::vector<u64> opened_a;
  ShareVec za;
  ShareVec zb;
  TwoPartyOptions opts = options(1);
  const auto run = run_two_party(
      opts,
      [&](Session& s) {
        s.endpoint().set_receive_hook([&](std::span<const u64> m) { opened_a.assign(m.begin(), m.end()); });
        za = s.beaver_multiply(xa, ya, ta);
      },
      [&](Session& s) { zb = s.beaver_multiply(xb, yb, tb); });
  // Party A's masks are 4+1, 10+1; party B's are 2+1, -3+2. Opened: 8 and 10.
  CHECK(opened_a.size() == 2);
  CHECK(opened_a[0] + 5 == 8);
  CHECK(opened_a[1] + 11 == 10);
  CHECK(reconstruct(za, zb)[0] == 42);
  CHECK(run.a.rounds == 1);
}

TEST_CASE("beaver multiplication of a large batch costs one round") {
  std::mt19937_64 rng(4);
  const std::size_t n = std::size_t{1} << 15;
  std::vector<u64> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng();
    y[i] = i % 7 == 0 ? 0 : rng();
  }
  auto [xa, xb] = share(x, 8, rng);
  auto [ya, yb] = share(y, 8, rng);
  ShareVec za, zb;
  const auto run = run_two_party(
      options(5), [&](Session& s) { za = s.beaver_multiply(xa, ya); },
      [&](Session& s) { zb = s.beaver_multiply(xb, yb); });
  CHECK(run.a.rounds == 1);
  CHECK(run.b.rounds == 1);
  CHECK(za.scale == 16);
  const auto z = reconstruct(za, zb);
  for (std::size_t i = 0; i < n; ++i) REQUIRE(z[i] == x[i] * y[i]);
  CHECK(run.a.bytes_sent == run.b.bytes_sent);
  CHECK(run.a.bytes_sent[0] == wire_size(2 * n));
}

TEST_CASE("opens cost one round per call regardless of batch") {
  std::mt19937_64 rng(6);
  auto [a, b] = share(std::vector<u64>{5, 9}, 0, rng);
  std::vector<u64> seen_a, seen_b;
  auto body = [](const ShareVec& mine, std::vector<u64>& seen) {
    return [&mine, &seen](Session& s) {
      seen.push_back(s.open(mine.at(0)));
      seen.push_back(s.open(mine.at(1)));
      CHECK(s.snapshot().rounds == 2);
      const auto both = s.open(mine);
      CHECK(s.snapshot().rounds == 3);
      seen.insert(seen.end(), both.begin(), both.end());
    };
  };
  run_two_party(options(2), body(a, seen_a), body(b, seen_b));
  CHECK(seen_a == std::vector<u64>{5, 9, 5, 9});
  CHECK(seen_b == seen_a);
}

TEST_CASE("local operations consume no rounds") {
  std::mt19937_64 rng(8);
  auto [a, b] = share(std::vector<u64>{3, 4}, 16, rng);
  const auto run = run_two_party(
      options(2),
      [&](Session& s) {
        s.truncate(add_public(scale_by(add(a, a), 3), 7), 1);
      },
      [&](Session& s) { s.truncate(add_public(scale_by(add(b, b), 3), 7), 1); });
  CHECK(run.a.rounds == 0);
  CHECK(run.a.total_bytes() == 0);
}

TEST_CASE("dealer triples satisfy ab = c") {
  std::mt19937_64 rng(12);
  const auto t = dealer_triples(10000, rng);
  for (std::size_t i = 0; i < t.a_side.size(); ++i) {
    const u64 a = t.a_side[i].a + t.b_side[i].a;
    const u64 b = t.a_side[i].b + t.b_side[i].b;
    const u64 c = t.a_side[i].c + t.b_side[i].c;
    REQUIRE(a * b == c);
  }
  const auto x = dealer_and_triples(1000, rng);
  for (std::size_t i = 0; i < x.a_side.size(); ++i) {
    REQUIRE(((x.a_side[i].a ^ x.b_side[i].a) & (x.a_side[i].b ^ x.b_side[i].b)) == (x.a_side[i].c ^ x.b_side[i].c));
  }
  const auto bits = dealer_random_bits(1000, rng);
  for (std::size_t i = 0; i < bits.a_side.size(); ++i) {
    const u64 bin = (bits.a_side[i].binary ^ bits.b_side[i].binary) & 1;
    REQUIRE(bits.a_side[i].arithmetic + bits.b_side[i].arithmetic == bin);
  }
}

TEST_CASE("power tuples hold consecutive powers of one blind") {
  std::mt19937_64 rng(13);
  const auto t = dealer_power_tuples(100, 4, 8, rng);
  CHECK(t.a_side.count() == 100);
  for (std::size_t e = 0; e < 100; ++e) {
    const u64 r = t.a_side.tuple(e)[0] + t.b_side.tuple(e)[0];
    for (int j = 1; j <= 4; ++j) {
      REQUIRE(t.a_side.tuple(e)[j - 1] + t.b_side.tuple(e)[j - 1] == testsupport::pow_mod64(r, j));
    }
  }
}

TEST_CASE("both dealer views hand out halves of the same material") {
  Dealer da(77, Role::A);
  Dealer db(77, Role::B);
  const auto ta = da.triples(50);
  const auto tb = db.triples(50);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK((ta[i].a + tb[i].a) * (ta[i].b + tb[i].b) == ta[i].c + tb[i].c);
  }
}

TEST_CASE("an exhausted dealer fails cleanly") {
  Dealer empty(1, Role::A, 0);
  CHECK_THROWS_AS(empty.triples(1), ResourceError);
  CHECK(empty.triples(0).empty());

  std::mt19937_64 rng(1);
  auto [a, b] = share(std::vector<u64>{1, 2, 3}, 0, rng);
  TwoPartyOptions opts = options(1);
  opts.triple_limit = 2;
  CHECK_THROWS_AS(run_two_party(
                      opts, [&](Session& s) { s.beaver_multiply(a, a); },
                      [&](Session& s) { s.beaver_multiply(b, b); }),
                  ResourceError);
}

TEST_CASE("session rejects the other party's shares") {
  std::mt19937_64 rng(1);
  auto [a, b] = share(std::vector<u64>{1}, 0, rng);
  CHECK_THROWS_AS(run_two_party(
                      options(1), [&](Session& s) { s.open(b); }, [&](Session& s) { s.open(b); }),
                  ProtocolError);
}
