#include "polyshare/share.hpp"

#include <string>

#include "polyshare/errors.hpp"

namespace polyshare {

std::pair<Share, Share> share(const FixedPoint& value, std::mt19937_64& rng) {
  const u64 mask = rng();
  return {Share{mask, Role::A, value.scale}, Share{value.raw - mask, Role::B, value.scale}};
}

std::pair<ShareVec, ShareVec> share(std::span<const u64> raw, int scale, std::mt19937_64& rng) {
  ShareVec a(Role::A, scale, raw.size());
  ShareVec b(Role::B, scale, raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    a.values[i] = rng();
    b.values[i] = raw[i] - a.values[i];
  }
  return {std::move(a), std::move(b)};
}

namespace {

void check_pair(Role ra, int sa, Role rb, int sb) {
  if (sa != sb) {
    throw ProtocolError("scale mismatch: " + std::to_string(sa) + " vs " + std::to_string(sb));
  }
  if (ra == rb) throw ProtocolError("both shares belong to the same party");
}

void check_compatible(const ShareVec& x, const ShareVec& y) {
  if (x.role != y.role) throw ProtocolError("mixed roles in local operation");
  if (x.scale != y.scale) {
    throw ProtocolError("scale mismatch: " + std::to_string(x.scale) + " vs " + std::to_string(y.scale));
  }
  if (x.size() != y.size()) throw ProtocolError("length mismatch in local operation");
}

}  // namespace

FixedPoint reconstruct(const Share& a, const Share& b) {
  check_pair(a.role, a.scale, b.role, b.scale);
  return FixedPoint{a.value + b.value, a.scale};
}

std::vector<u64> reconstruct(const ShareVec& a, const ShareVec& b) {
  check_pair(a.role, a.scale, b.role, b.scale);
  if (a.size() != b.size()) throw ProtocolError("length mismatch in reconstruct");
  std::vector<u64> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values[i] + b.values[i];
  return out;
}

Share linear_combine(std::span<const u64> constants, std::span<const Share> shares, u64 offset) {
  if (constants.size() != shares.size()) throw ProtocolError("constants and shares differ in length");
  if (shares.empty()) throw ProtocolError("linear combination of no shares");
  Share out{0, shares[0].role, shares[0].scale};
  for (std::size_t k = 0; k < shares.size(); ++k) {
    if (shares[k].role != out.role) throw ProtocolError("mixed roles in linear combination");
    if (shares[k].scale != out.scale) throw ProtocolError("mixed scales in linear combination");
    out.value += constants[k] * shares[k].value;
  }
  if (out.role == Role::A) out.value += offset;
  return out;
}

ShareVec add(const ShareVec& x, const ShareVec& y) {
  check_compatible(x, y);
  ShareVec out(x.role, x.scale, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x.values[i] + y.values[i];
  return out;
}

ShareVec sub(const ShareVec& x, const ShareVec& y) {
  check_compatible(x, y);
  ShareVec out(x.role, x.scale, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x.values[i] - y.values[i];
  return out;
}

ShareVec scale_by(const ShareVec& x, u64 constant) {
  ShareVec out(x.role, x.scale, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x.values[i] * constant;
  return out;
}

ShareVec add_public(const ShareVec& x, u64 raw) {
  ShareVec out = x;
  if (x.role == Role::A) {
    for (auto& v : out.values) v += raw;
  }
  return out;
}

ShareVec shift_up(const ShareVec& x, int bits) {
  ShareVec out = scale_by(x, u64{1} << bits);
  out.scale = x.scale + bits;
  return out;
}

ShareVec public_share(Role role, int scale, std::span<const u64> raw) {
  ShareVec out(role, scale, raw.size());
  if (role == Role::A) out.values.assign(raw.begin(), raw.end());
  return out;
}

}  // namespace polyshare
