#include "polyshare/session.hpp"

#include <exception>
#include <memory>
#include <thread>

#include "polyshare/errors.hpp"

namespace polyshare {

Session::Session(Endpoint& endpoint, Dealer& dealer, RingConfig ring, kernels::Exec exec)
    : endpoint_(endpoint), dealer_(dealer), ring_(ring), exec_(exec) {
  ring_.validate();
  if (!ring_.native()) throw ConfigError("protocols require a 64-bit ring");
  if (dealer.role() != endpoint.role()) throw ConfigError("dealer view and endpoint belong to different parties");
}

void Session::check_owned(const ShareVec& x) const {
  if (x.role != role()) throw ProtocolError("share belongs to the other party");
}

u64 Session::open(const Share& sh) {
  if (sh.role != role()) throw ProtocolError("share belongs to the other party");
  const u64 mine[1] = {sh.value};
  const auto theirs = exchange(mine);
  if (theirs.size() != 1) throw ProtocolError("peer opened a different number of values");
  return sh.value + theirs[0];
}

std::vector<u64> Session::open(const ShareVec& sh) {
  check_owned(sh);
  auto out = exchange(sh.values);
  if (out.size() != sh.size()) throw ProtocolError("peer opened a different number of values");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sh.values[i];
  return out;
}

ShareVec Session::beaver_multiply(const ShareVec& x, const ShareVec& y) {
  const auto triples = dealer_.triples(x.size());
  return beaver_multiply(x, y, triples);
}

ShareVec Session::beaver_multiply(const ShareVec& x, const ShareVec& y, std::span<const TripleShare> triples) {
  check_owned(x);
  check_owned(y);
  return ShareVec(role(), x.scale + y.scale, beaver_multiply_raw(x.values, y.values, triples));
}

std::vector<u64> Session::beaver_multiply_raw(std::span<const u64> x, std::span<const u64> y,
                                              std::span<const TripleShare> triples) {
  const std::size_t n = x.size();
  if (y.size() != n) throw ProtocolError("beaver operands differ in length");
  if (triples.size() != n) throw ResourceError("need one triple per product");

  std::vector<u64> masks(2 * n);
  kernels::beaver_masks(exec_, x, y, triples, masks);
  auto opened = exchange(masks);
  if (opened.size() != 2 * n) throw ProtocolError("peer sent a different batch size");
  for (std::size_t i = 0; i < 2 * n; ++i) opened[i] += masks[i];

  std::vector<u64> z(n);
  const std::span<const u64> all(opened);
  kernels::beaver_combine(exec_, y, triples, all.first(n), all.subspan(n), z);
  return z;
}

ShareVec Session::truncate(const ShareVec& x, int bits) const {
  check_owned(x);
  if (bits < 0 || bits >= 64) throw ConfigError("truncation shift out of range");
  ShareVec out(role(), x.scale - bits, x.size());
  kernels::truncate(exec_, role(), x.values, bits, out.values);
  return out;
}

void Session::warn(std::string message) { warnings_.push_back(std::move(message)); }

namespace {

void run_side(Role role, std::unique_ptr<FrameChannel> channel, const TwoPartyOptions& opts,
              const std::function<void(Session&)>& body, TranscriptSnapshot& result,
              std::exception_ptr& error) {
  Endpoint endpoint(role, std::move(channel), opts.net);
  try {
    Dealer dealer(opts.dealer_seed, role, opts.triple_limit);
    Session session(endpoint, dealer, opts.ring, opts.exec);
    endpoint.transcript().reset();
    body(session);
    result = session.snapshot();
  } catch (...) {
    error = std::current_exception();
    endpoint.close();
  }
}

// A TransportError on one side is usually the echo of the peer's failure, so
// prefer the other error when both sides failed.
void rethrow_first(std::exception_ptr ea, std::exception_ptr eb) {
  auto is_transport = [](const std::exception_ptr& e) {
    try {
      std::rethrow_exception(e);
    } catch (const TransportError&) {
      return true;
    } catch (...) {
      return false;
    }
  };
  if (ea && eb && is_transport(ea) && !is_transport(eb)) std::rethrow_exception(eb);
  if (ea) std::rethrow_exception(ea);
  if (eb) std::rethrow_exception(eb);
}

}  // namespace

TwoPartyRun run_two_party(const TwoPartyOptions& opts, const std::function<void(Session&)>& party_a,
                          const std::function<void(Session&)>& party_b) {
  opts.net.validate();
  std::unique_ptr<FrameChannel> ca;
  std::unique_ptr<FrameChannel> cb;
  if (opts.net.mode == TransportMode::socket) {
    SocketListener listener(0);
    std::exception_ptr connect_error;
    std::thread connector([&] {
      try {
        cb = socket_connect("127.0.0.1", listener.port());
      } catch (...) {
        connect_error = std::current_exception();
      }
    });
    ca = listener.accept();
    connector.join();
    if (connect_error) std::rethrow_exception(connect_error);
  } else {
    std::tie(ca, cb) = make_local_channel_pair();
  }

  TwoPartyRun run;
  std::exception_ptr ea;
  std::exception_ptr eb;
  std::thread tb([&] { run_side(Role::B, std::move(cb), opts, party_b, run.b, eb); });
  run_side(Role::A, std::move(ca), opts, party_a, run.a, ea);
  tb.join();
  rethrow_first(ea, eb);
  return run;
}

TranscriptSnapshot run_party(Role role, std::unique_ptr<FrameChannel> channel, const TwoPartyOptions& opts,
                             const std::function<void(Session&)>& body) {
  TranscriptSnapshot result;
  std::exception_ptr error;
  run_side(role, std::move(channel), opts, body, result, error);
  if (error) std::rethrow_exception(error);
  return result;
}

}  // namespace polyshare
