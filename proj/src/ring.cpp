#include "polyshare/ring.hpp"

#include <cmath>
#include <string>

#include "polyshare/errors.hpp"

namespace polyshare {

void RingConfig::validate() const {
  if (total_bits < 2 || total_bits > 64) {
    throw ConfigError("ring size must be between 2 and 64 bits, got " + std::to_string(total_bits));
  }
  if (precision <= 0 || 2 * precision >= total_bits) {
    throw ConfigError("precision must satisfy 0 < p < L/2, got p=" + std::to_string(precision) +
                      " L=" + std::to_string(total_bits));
  }
}

namespace ring {

i64 to_signed(u64 raw, const RingConfig& cfg) {
  raw = wrap(raw, cfg);
  if (cfg.total_bits == 64) return static_cast<i64>(raw);
  const u64 sign = u64{1} << (cfg.total_bits - 1);
  if (raw & sign) return static_cast<i64>(raw | ~cfg.mask());
  return static_cast<i64>(raw);
}

u64 from_signed(i64 v, const RingConfig& cfg) { return wrap(static_cast<u64>(v), cfg); }

}  // namespace ring

FixedPoint encode(double value, int scale, const RingConfig& cfg) {
  const double limit = std::ldexp(1.0, cfg.total_bits - 1 - scale);
  if (!std::isfinite(value) || std::fabs(value) >= limit) {
    throw RangeError("value " + std::to_string(value) + " outside representable range at scale " +
                     std::to_string(scale));
  }
  // llround rounds halfway cases away from zero.
  const i64 scaled = std::llround(std::ldexp(value, scale));
  return FixedPoint{ring::from_signed(scaled, cfg), scale};
}

FixedPoint encode(double value, const RingConfig& cfg) { return encode(value, cfg.precision, cfg); }

double decode(const FixedPoint& fp, const RingConfig& cfg) {
  return std::ldexp(static_cast<double>(ring::to_signed(fp.raw, cfg)), -fp.scale);
}

Share local_truncate(const Share& sh, int bits, const RingConfig& cfg) {
  if (bits < 0) throw ConfigError("truncation by a negative bit count");
  Share out = sh;
  out.scale = sh.scale - bits;
  if (cfg.native()) {
    out.value = ring::truncate_share(sh.value, bits, sh.role);
    return out;
  }
  const i64 v = ring::to_signed(sh.value, cfg);
  if (sh.role == Role::A) {
    out.value = ring::from_signed(v >> bits, cfg);
  } else {
    const i64 negated = ring::to_signed(ring::neg(sh.value, cfg), cfg);
    out.value = ring::neg(ring::from_signed(negated >> bits, cfg), cfg);
  }
  return out;
}

double truncation_failure_bound(double value_magnitude, const RingConfig& cfg) {
  if (value_magnitude <= 0.0) return 0.0;
  return std::fmin(1.0, std::ldexp(value_magnitude, -cfg.total_bits));
}

}  // namespace polyshare
