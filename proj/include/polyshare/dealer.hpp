#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "polyshare/ring.hpp"

namespace polyshare {

// One party's share of a multiplication triple. Arithmetic triples are
// additive shares with a*b = c mod 2^64; AND triples are XOR shares of
// 64-bit words with a & b = c.
struct TripleShare {
  u64 a = 0;
  u64 b = 0;
  u64 c = 0;
};

struct TriplePair {
  std::vector<TripleShare> a_side;
  std::vector<TripleShare> b_side;
};

// Shares of r, r^2, ..., r^degree for `count` independent blinds r.
// Power j carries scale j * scale.
struct PowerTupleBatch {
  int degree = 0;
  int scale = 0;
  std::vector<u64> r_powers;  // row-major: element e, power j at e * degree + (j - 1)

  std::size_t count() const { return degree == 0 ? 0 : r_powers.size() / static_cast<std::size_t>(degree); }
  std::span<const u64> tuple(std::size_t e) const {
    return std::span<const u64>(r_powers).subspan(e * static_cast<std::size_t>(degree),
                                                  static_cast<std::size_t>(degree));
  }
};

struct PowerTuplePair {
  PowerTupleBatch a_side;
  PowerTupleBatch b_side;
};

// One party's shares of a uniform random bit, both XOR-shared (low bit) and
// additively shared.
struct BitShare {
  u64 binary = 0;
  u64 arithmetic = 0;
};

struct RandomBitPair {
  std::vector<BitShare> a_side;
  std::vector<BitShare> b_side;
};

TriplePair dealer_triples(std::size_t count, std::mt19937_64& rng);
TriplePair dealer_and_triples(std::size_t count, std::mt19937_64& rng);
// r is uniform over the whole ring so that x - r is a uniform mask.
PowerTuplePair dealer_power_tuples(std::size_t count, int degree, int range_scale, std::mt19937_64& rng);
RandomBitPair dealer_random_bits(std::size_t count, std::mt19937_64& rng);

// One party's view of the trusted dealer. Both parties construct their view
// from the same seed and request material in the same order, so each view
// hands out its half of the same correlated randomness.
class Dealer {
 public:
  Dealer(u64 seed, Role role, std::optional<std::size_t> triple_limit = std::nullopt);

  Role role() const { return role_; }

  // Throws ResourceError once the triple limit would be exceeded.
  std::vector<TripleShare> triples(std::size_t n);
  std::vector<TripleShare> and_triples(std::size_t n);
  PowerTupleBatch power_tuples(std::size_t n, int degree, int scale);
  std::vector<BitShare> random_bits(std::size_t n);

  std::size_t triples_issued() const { return issued_; }

 private:
  void reserve(std::size_t n);

  std::mt19937_64 rng_;
  Role role_;
  std::optional<std::size_t> limit_;
  std::size_t issued_ = 0;
};

}  // namespace polyshare
