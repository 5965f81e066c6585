#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>

#include "polyshare/errors.hpp"
#include "polyshare/kernels.hpp"
#include "polyshare/ring.hpp"

using namespace polyshare;
using boost::multiprecision::cpp_int;

namespace {

const RingConfig kCfg{};

u64 mod64(const cpp_int& v) {
  cpp_int m = v % (cpp_int(1) << 64);
  if (m < 0) m += cpp_int(1) << 64;
  return m.convert_to<u64>();
}

std::pair<Share, Share> split(u64 v, u64 a) {
  return {Share{a, Role::A, 16}, Share{v - a, Role::B, 16}};
}

i64 reconstruct_truncated(u64 v, u64 a, int bits) {
  auto [sa, sb] = split(v, a);
  return static_cast<i64>(local_truncate(sa, bits, kCfg).value + local_truncate(sb, bits, kCfg).value);
}

}  // namespace

TEST_CASE("encode scales and rounds half away from zero") {
  CHECK(encode(0.0, kCfg).raw == 0);
  CHECK(encode(1.0, kCfg).raw == 65536);
  CHECK(encode(-0.5, kCfg).raw == ~u64{0} - 32768 + 1);
  CHECK(encode(1.0, kCfg).scale == 16);
  CHECK(encode(std::ldexp(1.5, -16), kCfg).raw == 2);
  CHECK(static_cast<i64>(encode(std::ldexp(-1.5, -16), kCfg).raw) == -2);
  CHECK(static_cast<i64>(encode(std::ldexp(-2.5, -16), kCfg).raw) == -3);
}

TEST_CASE("encode rejects values outside the representable range") {
  CHECK_THROWS_AS(encode(std::ldexp(1.0, 47), kCfg), RangeError);
  CHECK_THROWS_AS(encode(-std::ldexp(1.0, 47), kCfg), RangeError);
  CHECK_THROWS_AS(encode(std::nan(""), kCfg), RangeError);
  CHECK_NOTHROW(encode(std::ldexp(1.0, 46), kCfg));
}

TEST_CASE("decode inverts encode") {
  CHECK(decode(FixedPoint{65536, 16}, kCfg) == 1.0);
  CHECK(decode(FixedPoint{~u64{0} - 32767, 16}, kCfg) == -0.5);
  CHECK(decode(FixedPoint{322, 10}, kCfg) == 0.314453125);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = dist(rng);
    CHECK(std::abs(decode(encode(v, kCfg), kCfg) - v) <= std::ldexp(1.0, -16));
  }
}

TEST_CASE("ring operations match wide integers mod 2^64") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20000; ++i) {
    const u64 a = rng();
    const u64 b = rng();
    CHECK(ring::add(a, b, kCfg) == mod64(cpp_int(a) + cpp_int(b)));
    CHECK(ring::sub(a, b, kCfg) == mod64(cpp_int(a) - cpp_int(b)));
    CHECK(ring::mul(a, b, kCfg) == mod64(cpp_int(a) * cpp_int(b)));
    CHECK(ring::neg(a, kCfg) == mod64(-cpp_int(a)));
    const cpp_int signed_ref = cpp_int(a) >= (cpp_int(1) << 63) ? cpp_int(a) - (cpp_int(1) << 64) : cpp_int(a);
    CHECK(cpp_int(ring::to_signed(a, kCfg)) == signed_ref);
  }
}

TEST_CASE("smaller rings wrap at their own modulus") {
  const RingConfig small{32, 8};
  CHECK(ring::add(0xFFFFFFFFu, 2, small) == 1);
  CHECK(ring::to_signed(0xFFFFFFFFu, small) == -1);
  CHECK(decode(encode(-3.25, small), small) == -3.25);
  const Share sa{ring::from_signed(-1000, small), Role::A, 8};
  const Share sb{ring::from_signed(1000 + 4096, small), Role::B, 8};
  const u64 sum = ring::add(local_truncate(sa, 4, small).value, local_truncate(sb, 4, small).value, small);
  CHECK(ring::to_signed(sum, small) == 256);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS((RingConfig{64, 32}.validate()), ConfigError);
  CHECK_THROWS_AS((RingConfig{64, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((RingConfig{70, 16}.validate()), ConfigError);
  CHECK_NOTHROW((RingConfig{64, 16}.validate()));
}

TEST_CASE("local truncation of a random split stays within one unit") {
  std::mt19937_64 rng(5);
  const u64 v = u64{1} << 20;
  int exact = 0;
  for (int i = 0; i < 2000; ++i) {
    const i64 r = reconstruct_truncated(v, rng(), 4);
    CHECK(std::abs(r - (i64{1} << 16)) <= 1);
    exact += r == (i64{1} << 16);
  }
  CHECK(exact > 0);
}

TEST_CASE("degenerate splits truncate to floor or ceil") {
  // (v, 0): party A's arithmetic shift is a floor.
  CHECK(reconstruct_truncated(1000, 1000, 4) == 62);
  CHECK(reconstruct_truncated(static_cast<u64>(-1000), static_cast<u64>(-1000), 4) == -63);
  // (0, v): party B's mirrored shift rounds up instead.
  CHECK(reconstruct_truncated(1000, 0, 4) == 63);
  CHECK(reconstruct_truncated(static_cast<u64>(-1000), 0, 4) == -62);
  CHECK(reconstruct_truncated(1024, 0, 4) == 64);
  Share zero{0, Role::A, 16};
  CHECK(local_truncate(zero, 7, kCfg).value == 0);
  CHECK(local_truncate(zero, 7, kCfg).scale == 9);
}

TEST_CASE("truncation error is at most two ulp when no wrap occurs") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<i64> value(-(i64{1} << 40), i64{1} << 40);
  for (int i = 0; i < 20000; ++i) {
    const i64 v = value(rng);
    const u64 a = rng();
    const u64 b = static_cast<u64>(v) - a;
    // Skip the rare splits whose signed sum overflows.
    const cpp_int signed_sum = cpp_int(static_cast<i64>(a)) + cpp_int(static_cast<i64>(b));
    if (signed_sum != cpp_int(v)) continue;
    const int bits = 1 + static_cast<int>(rng() % 30);
    const double got = std::ldexp(static_cast<double>(reconstruct_truncated(static_cast<u64>(v), a, bits)), -(16 - bits));
    const double want = std::ldexp(static_cast<double>(v), -16);
    CHECK(std::abs(got - want) <= 2 * std::ldexp(1.0, -(16 - bits)));
  }
}

TEST_CASE("wrap rate at 2^54 is within three standard deviations of 2^-10") {
  const std::uint64_t trials = 1000000;
  const double p = std::ldexp(1.0, -10);
  const auto failures = kernels::truncation_wraps(kernels::Exec::parallel, u64{1} << 54, 16, trials, 99);
  const double sd = std::sqrt(static_cast<double>(trials) * p * (1 - p));
  CHECK(std::abs(static_cast<double>(failures) - static_cast<double>(trials) * p) <= 3 * sd);
}

TEST_CASE("failure bound is magnitude over ring size") {
  CHECK(truncation_failure_bound(0.0, kCfg) == 0.0);
  CHECK(truncation_failure_bound(std::ldexp(1.0, 48), kCfg) == std::ldexp(1.0, -16));
  CHECK(truncation_failure_bound(std::ldexp(1.0, 20), kCfg) == std::ldexp(1.0, -44));
  CHECK(truncation_failure_bound(std::ldexp(1.0, 70), kCfg) == 1.0);
}
