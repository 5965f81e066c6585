#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyshare/dealer.hpp"
#include "polyshare/kernels.hpp"
#include "polyshare/ring.hpp"
#include "polyshare/share.hpp"
#include "polyshare/transport.hpp"

namespace polyshare {

// One party's protocol context. Every call that talks to the peer costs
// exactly one exchange; both parties must issue the same sequence of calls.
class Session {
 public:
  Session(Endpoint& endpoint, Dealer& dealer, RingConfig ring = {},
          kernels::Exec exec = kernels::Exec::parallel);

  Role role() const { return endpoint_.role(); }
  const RingConfig& ring() const { return ring_; }
  kernels::Exec exec() const { return exec_; }
  Dealer& dealer() { return dealer_; }
  Endpoint& endpoint() { return endpoint_; }

  std::vector<u64> exchange(std::span<const u64> payload) { return endpoint_.exchange(payload); }

  // Reveals shares to both parties, one round for the whole batch.
  u64 open(const Share& sh);
  std::vector<u64> open(const ShareVec& sh);

  // Element-wise products, one round. Output scale is the sum of the input
  // scales; no truncation happens here.
  ShareVec beaver_multiply(const ShareVec& x, const ShareVec& y);
  ShareVec beaver_multiply(const ShareVec& x, const ShareVec& y, std::span<const TripleShare> triples);
  // Raw form for operands that are not uniformly scaled.
  std::vector<u64> beaver_multiply_raw(std::span<const u64> x, std::span<const u64> y,
                                       std::span<const TripleShare> triples);

  // Local truncation of every element; zero rounds.
  ShareVec truncate(const ShareVec& x, int bits) const;

  TranscriptSnapshot snapshot() const { return endpoint_.transcript().snapshot(); }

  void warn(std::string message);
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void check_owned(const ShareVec& x) const;

  Endpoint& endpoint_;
  Dealer& dealer_;
  RingConfig ring_;
  kernels::Exec exec_;
  std::vector<std::string> warnings_;
};

struct TwoPartyOptions {
  NetworkConfig net;
  u64 dealer_seed = 0;
  RingConfig ring;
  kernels::Exec exec = kernels::Exec::parallel;
  std::optional<std::size_t> triple_limit;
};

struct TwoPartyRun {
  TranscriptSnapshot a;
  TranscriptSnapshot b;
};

// Runs both parties on their own threads over an in-process channel, or over
// a loopback TCP connection when net.mode is socket. The first party error is
// rethrown after both threads have finished.
TwoPartyRun run_two_party(const TwoPartyOptions& opts, const std::function<void(Session&)>& party_a,
                          const std::function<void(Session&)>& party_b);

// Runs one party of a split-process session over an established channel.
TranscriptSnapshot run_party(Role role, std::unique_ptr<FrameChannel> channel, const TwoPartyOptions& opts,
                             const std::function<void(Session&)>& body);

}  // namespace polyshare
