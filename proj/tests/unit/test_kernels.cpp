#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <vector>

#include "polyshare/kernels.hpp"

using namespace polyshare;
using kernels::Exec;

namespace {

// Odd length so chunked loops see a ragged tail.
constexpr std::size_t kN = 10007;

std::vector<u64> random_ring(std::size_t n, u64 seed) {
  std::mt19937_64 rng(seed);
  std::vector<u64> v(n);
  for (auto& x : v) x = rng();
  return v;
}

std::vector<TripleShare> random_triples(std::size_t n, u64 seed) {
  std::mt19937_64 rng(seed);
  std::vector<TripleShare> t(n);
  for (auto& x : t) x = {rng(), rng(), rng()};
  return t;
}

}  // namespace

TEST_CASE("beaver kernels") {
  const auto x = random_ring(kN, 1);
  const auto y = random_ring(kN, 2);
  const auto t = random_triples(kN, 3);
  std::vector<u64> ms(2 * kN), mp(2 * kN), zs(kN), zp(kN);
  kernels::beaver_masks(Exec::serial, x, y, t, ms);
  kernels::beaver_masks(Exec::parallel, x, y, t, mp);
  CHECK(ms == mp);
  CHECK(ms[5] == x[5] + t[5].a);
  CHECK(ms[kN + 5] == y[5] + t[5].b);
  const std::span<const u64> m(ms);
  kernels::beaver_combine(Exec::serial, y, t, m.first(kN), m.last(kN), zs);
  kernels::beaver_combine(Exec::parallel, y, t, m.first(kN), m.last(kN), zp);
  CHECK(zs == zp);
  CHECK(zs[7] == ms[7] * y[7] - ms[kN + 7] * t[7].a + t[7].c);
}

TEST_CASE("truncation kernels") {
  const auto x = random_ring(kN, 4);
  for (Role r : {Role::A, Role::B}) {
    std::vector<u64> s(kN), p(kN);
    kernels::truncate(Exec::serial, r, x, 13, s);
    kernels::truncate(Exec::parallel, r, x, 13, p);
    CHECK(s == p);
    CHECK(s[0] == ring::truncate_share(x[0], 13, r));
  }
  CHECK(kernels::truncation_wraps(Exec::serial, u64{1} << 60, 16, 100003, 5) ==
        kernels::truncation_wraps(Exec::parallel, u64{1} << 60, 16, 100003, 5));
}

TEST_CASE("espn operands and segment sums") {
  const auto x = random_ring(kN, 6);
  for (Role r : {Role::A, Role::B}) {
    for (int k : {0, 1, 4, 8}) {
      const auto w = kN * static_cast<std::size_t>(k + 1);
      std::vector<u64> us(w), vs(w), up(w), vp(w);
      kernels::espn_operands(Exec::serial, r, x, k, us, vs);
      kernels::espn_operands(Exec::parallel, r, x, k, up, vp);
      CHECK(us == up);
      CHECK(vs == vp);
    }
  }
  const auto in = random_ring(kN * 9, 7);
  std::vector<u64> s(kN), p(kN);
  kernels::segment_sum(Exec::serial, in, 9, s);
  kernels::segment_sum(Exec::parallel, in, 9, p);
  CHECK(s == p);
  u64 first = 0;
  for (int i = 0; i < 9; ++i) first += in[static_cast<std::size_t>(i)];
  CHECK(s[0] == first);
}

TEST_CASE("honeybadger recursion kernel") {
  const int n = 6;
  const auto opened = random_ring(kN, 8);
  const PowerTupleBatch tuples{n, 0, random_ring(kN * n, 9)};
  for (Role r : {Role::A, Role::B}) {
    std::vector<u64> s(kN * n), p(kN * n);
    kernels::hb_powers(Exec::serial, r, opened, tuples, n, s);
    kernels::hb_powers(Exec::parallel, r, opened, tuples, n, p);
    CHECK(s == p);
  }
}

TEST_CASE("and kernels") {
  const auto u = random_ring(kN, 10);
  const auto v = random_ring(kN, 11);
  const auto t = random_triples(kN, 12);
  std::vector<u64> ms(2 * kN), mp(2 * kN);
  kernels::and_masks(Exec::serial, u, v, t, ms);
  kernels::and_masks(Exec::parallel, u, v, t, mp);
  CHECK(ms == mp);
  const std::span<const u64> m(ms);
  for (Role r : {Role::A, Role::B}) {
    std::vector<u64> s(kN), p(kN);
    kernels::and_combine(Exec::serial, r, t, m.first(kN), m.last(kN), s);
    kernels::and_combine(Exec::parallel, r, t, m.first(kN), m.last(kN), p);
    CHECK(s == p);
  }
}

TEST_CASE("im2col") {
  const kernels::ConvGeometry g{3, 9, 7, 3, 2, 1};
  const auto image = random_ring(static_cast<std::size_t>(g.channels) * g.height * g.width, 13);
  std::vector<u64> s(g.patch() * g.pixels()), p(g.patch() * g.pixels());
  kernels::im2col(Exec::serial, image, g, s);
  kernels::im2col(Exec::parallel, image, g, p);
  CHECK(s == p);
  // Top-left output pixel, top-left kernel tap, sits in the padding.
  CHECK(s[0] == 0);
  // Centre tap of the first output pixel reads image(0, 0, 0).
  CHECK(s[4 * g.pixels()] == image[0]);
}

TEST_CASE("binomial row") {
  std::vector<u64> row(9);
  kernels::binomial_row(8, row);
  CHECK(row == std::vector<u64>{1, 8, 28, 56, 70, 56, 28, 8, 1});
}
