#include "polyshare/dealer.hpp"

#include <string>

#include "polyshare/errors.hpp"

namespace polyshare {

TriplePair dealer_triples(std::size_t count, std::mt19937_64& rng) {
  TriplePair out;
  out.a_side.resize(count);
  out.b_side.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const u64 a = rng();
    const u64 b = rng();
    const u64 c = a * b;
    TripleShare& sa = out.a_side[i];
    sa = {rng(), rng(), rng()};
    out.b_side[i] = {a - sa.a, b - sa.b, c - sa.c};
  }
  return out;
}

TriplePair dealer_and_triples(std::size_t count, std::mt19937_64& rng) {
  TriplePair out;
  out.a_side.resize(count);
  out.b_side.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const u64 a = rng();
    const u64 b = rng();
    const u64 c = a & b;
    TripleShare& sa = out.a_side[i];
    sa = {rng(), rng(), rng()};
    out.b_side[i] = {a ^ sa.a, b ^ sa.b, c ^ sa.c};
  }
  return out;
}

PowerTuplePair dealer_power_tuples(std::size_t count, int degree, int range_scale, std::mt19937_64& rng) {
  if (degree < 1) throw ConfigError("power tuple degree must be >= 1");
  const auto d = static_cast<std::size_t>(degree);
  PowerTuplePair out;
  out.a_side = {degree, range_scale, std::vector<u64>(count * d)};
  out.b_side = {degree, range_scale, std::vector<u64>(count * d)};
  for (std::size_t e = 0; e < count; ++e) {
    const u64 r = rng();
    u64 power = 1;
    for (std::size_t j = 0; j < d; ++j) {
      power *= r;
      const u64 mask = rng();
      out.a_side.r_powers[e * d + j] = mask;
      out.b_side.r_powers[e * d + j] = power - mask;
    }
  }
  return out;
}

RandomBitPair dealer_random_bits(std::size_t count, std::mt19937_64& rng) {
  RandomBitPair out;
  out.a_side.resize(count);
  out.b_side.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const u64 bit = rng() & 1;
    const u64 bin_mask = rng() & 1;
    const u64 arith_mask = rng();
    out.a_side[i] = {bin_mask, arith_mask};
    out.b_side[i] = {bit ^ bin_mask, bit - arith_mask};
  }
  return out;
}

Dealer::Dealer(u64 seed, Role role, std::optional<std::size_t> triple_limit)
    : rng_(seed), role_(role), limit_(triple_limit) {}

void Dealer::reserve(std::size_t n) {
  if (limit_ && issued_ + n > *limit_) {
    throw ResourceError("dealer exhausted: requested " + std::to_string(n) + " triples, " +
                        std::to_string(*limit_ - issued_) + " remaining");
  }
  issued_ += n;
}

std::vector<TripleShare> Dealer::triples(std::size_t n) {
  reserve(n);
  TriplePair pair = dealer_triples(n, rng_);
  return role_ == Role::A ? std::move(pair.a_side) : std::move(pair.b_side);
}

std::vector<TripleShare> Dealer::and_triples(std::size_t n) {
  reserve(n);
  TriplePair pair = dealer_and_triples(n, rng_);
  return role_ == Role::A ? std::move(pair.a_side) : std::move(pair.b_side);
}

PowerTupleBatch Dealer::power_tuples(std::size_t n, int degree, int scale) {
  PowerTuplePair pair = dealer_power_tuples(n, degree, scale, rng_);
  return role_ == Role::A ? std::move(pair.a_side) : std::move(pair.b_side);
}

std::vector<BitShare> Dealer::random_bits(std::size_t n) {
  RandomBitPair pair = dealer_random_bits(n, rng_);
  return role_ == Role::A ? std::move(pair.a_side) : std::move(pair.b_side);
}

}  // namespace polyshare
