#pragma once

#include <cstdint>

namespace polyshare {

using u64 = std::uint64_t;
using i64 = std::int64_t;

// Ring Z mod 2^total_bits carrying fixed-point values with `precision`
// fractional bits. Protocol code requires total_bits == 64 so that native
// unsigned wrap-around is the ring reduction.
struct RingConfig {
  int total_bits = 64;
  int precision = 16;

  void validate() const;
  u64 mask() const { return total_bits == 64 ? ~u64{0} : ((u64{1} << total_bits) - 1); }
  bool native() const { return total_bits == 64; }
};

struct FixedPoint {
  u64 raw = 0;
  int scale = 0;
};

enum class Role : std::uint8_t { A = 0, B = 1 };

constexpr Role peer_of(Role r) { return r == Role::A ? Role::B : Role::A; }
constexpr int index_of(Role r) { return static_cast<int>(r); }

// One party's additive share of a ring element.
struct Share {
  u64 value = 0;
  Role role = Role::A;
  int scale = 0;
};

namespace ring {

inline u64 wrap(u64 v, const RingConfig& cfg) { return v & cfg.mask(); }

// Two's-complement interpretation: residues >= 2^(L-1) map to negatives.
i64 to_signed(u64 raw, const RingConfig& cfg);
u64 from_signed(i64 v, const RingConfig& cfg);

inline u64 add(u64 a, u64 b, const RingConfig& cfg) { return wrap(a + b, cfg); }
inline u64 sub(u64 a, u64 b, const RingConfig& cfg) { return wrap(a - b, cfg); }
inline u64 mul(u64 a, u64 b, const RingConfig& cfg) { return wrap(a * b, cfg); }
inline u64 neg(u64 a, const RingConfig& cfg) { return wrap(u64{0} - a, cfg); }

// Per-party local truncation on the native 64-bit ring. Party A takes the
// arithmetic shift of its share; party B negates, shifts, and negates back.
// The pair reconstructs to floor or ceil of x / 2^bits unless the signed sum
// of the shares overflowed, which happens with probability |x| / 2^64.
inline u64 truncate_share(u64 v, int bits, Role role) {
  if (bits == 0) return v;
  if (role == Role::A) return static_cast<u64>(static_cast<i64>(v) >> bits);
  return u64{0} - static_cast<u64>(static_cast<i64>(u64{0} - v) >> bits);
}

}  // namespace ring

// Round-half-away-from-zero encoding at cfg.precision fractional bits.
// Throws RangeError when |value| >= 2^(L-1-precision).
FixedPoint encode(double value, const RingConfig& cfg);
FixedPoint encode(double value, int scale, const RingConfig& cfg);

double decode(const FixedPoint& fp, const RingConfig& cfg);

Share local_truncate(const Share& sh, int bits, const RingConfig& cfg);

// min(1, magnitude / 2^L), magnitude in raw ring units.
double truncation_failure_bound(double value_magnitude, const RingConfig& cfg);

}  // namespace polyshare
