#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "polyshare/ring.hpp"

namespace polyshare {

// A batch of one party's shares, all with the same role and scale.
struct ShareVec {
  Role role = Role::A;
  int scale = 0;
  std::vector<u64> values;

  ShareVec() = default;
  ShareVec(Role r, int s, std::vector<u64> v) : role(r), scale(s), values(std::move(v)) {}
  ShareVec(Role r, int s, std::size_t n) : role(r), scale(s), values(n, 0) {}

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  Share at(std::size_t i) const { return Share{values[i], role, scale}; }
};

// The first share is uniform in the ring, the second completes the sum.
std::pair<Share, Share> share(const FixedPoint& value, std::mt19937_64& rng);
std::pair<ShareVec, ShareVec> share(std::span<const u64> raw, int scale, std::mt19937_64& rng);

FixedPoint reconstruct(const Share& a, const Share& b);
std::vector<u64> reconstruct(const ShareVec& a, const ShareVec& b);

// sum_k constants[k] * shares[k] + offset; the offset is added by role A only.
// Constants are public integers (scale 0), so the result keeps the shares' scale.
Share linear_combine(std::span<const u64> constants, std::span<const Share> shares, u64 offset);

// Element-wise helpers with the same zero-round semantics.
ShareVec add(const ShareVec& x, const ShareVec& y);
ShareVec sub(const ShareVec& x, const ShareVec& y);
ShareVec scale_by(const ShareVec& x, u64 constant);
ShareVec add_public(const ShareVec& x, u64 raw);
// Multiplies by 2^bits and relabels the scale.
ShareVec shift_up(const ShareVec& x, int bits);
// A public constant vector held as (v, 0).
ShareVec public_share(Role role, int scale, std::span<const u64> raw);

}  // namespace polyshare
