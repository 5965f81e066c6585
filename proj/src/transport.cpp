#include "polyshare/transport.hpp"

#include <bit>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <exception>
#include <thread>

#include "polyshare/errors.hpp"

namespace polyshare {

void NetworkConfig::validate() const {
  if (roundtrip_delay_ms < 0.0) throw ConfigError("roundtrip delay must be >= 0");
  if (bandwidth_bytes_per_s && *bandwidth_bytes_per_s <= 0.0) throw ConfigError("bandwidth must be > 0");
}

Transcript::Transcript() : start_(std::chrono::steady_clock::now()) {}

void Transcript::record_exchange(Role self, std::size_t sent_bytes, std::size_t received_bytes, double delay_s) {
  std::lock_guard lock(mu_);
  data_.rounds += 1;
  data_.bytes_sent[index_of(self)] += sent_bytes;
  data_.bytes_sent[index_of(peer_of(self))] += received_bytes;
  data_.injected_delay_s += delay_s;
}

TranscriptSnapshot Transcript::snapshot() const {
  std::lock_guard lock(mu_);
  TranscriptSnapshot out = data_;
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return out;
}

void Transcript::reset() {
  std::lock_guard lock(mu_);
  data_ = {};
  start_ = std::chrono::steady_clock::now();
}

namespace {

void put_le64(std::uint8_t* dst, u64 v) {
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

u64 get_le64(const std::uint8_t* src) {
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(src[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_wire(std::span<const u64> elements) {
  std::vector<std::uint8_t> out(wire_size(elements.size()));
  put_le64(out.data(), elements.size());
  if constexpr (std::endian::native == std::endian::little) {
    if (!elements.empty()) std::memcpy(out.data() + 8, elements.data(), 8 * elements.size());
  } else {
    for (std::size_t i = 0; i < elements.size(); ++i) put_le64(out.data() + 8 + 8 * i, elements[i]);
  }
  return out;
}

std::vector<u64> decode_wire(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw TransportError("wire frame shorter than its count prefix");
  const u64 count = get_le64(bytes.data());
  if (count > (bytes.size() - 8) / 8 || bytes.size() != wire_size(count)) {
    throw TransportError("wire frame length " + std::to_string(bytes.size()) + " does not match count " +
                         std::to_string(count));
  }
  std::vector<u64> out(count);
  if constexpr (std::endian::native == std::endian::little) {
    if (count) std::memcpy(out.data(), bytes.data() + 8, 8 * count);
  } else {
    for (std::size_t i = 0; i < count; ++i) out[i] = get_le64(bytes.data() + 8 + 8 * i);
  }
  return out;
}

namespace {

struct LocalLink {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> queue[2];  // queue[i]: frames addressed to side i
  bool closed = false;
};

class LocalChannel final : public FrameChannel {
 public:
  LocalChannel(std::shared_ptr<LocalLink> link, int side) : link_(std::move(link)), side_(side) {}
  ~LocalChannel() override { close(); }

  void send(std::vector<std::uint8_t> frame) override {
    {
      std::lock_guard lock(link_->mu);
      if (link_->closed) throw TransportError("send on closed channel");
      link_->queue[1 - side_].push_back(std::move(frame));
    }
    link_->cv.notify_all();
  }

  std::vector<std::uint8_t> receive() override {
    std::unique_lock lock(link_->mu);
    auto& q = link_->queue[side_];
    link_->cv.wait(lock, [&] { return !q.empty() || link_->closed; });
    if (q.empty()) throw TransportError("peer closed the channel");
    auto frame = std::move(q.front());
    q.pop_front();
    return frame;
  }

  void close() override {
    {
      std::lock_guard lock(link_->mu);
      link_->closed = true;
    }
    link_->cv.notify_all();
  }

 private:
  std::shared_ptr<LocalLink> link_;
  int side_;
};

}  // namespace

std::pair<std::unique_ptr<FrameChannel>, std::unique_ptr<FrameChannel>> make_local_channel_pair() {
  auto link = std::make_shared<LocalLink>();
  return {std::make_unique<LocalChannel>(link, 0), std::make_unique<LocalChannel>(link, 1)};
}

Endpoint::Endpoint(Role role, std::unique_ptr<FrameChannel> channel, NetworkConfig cfg)
    : role_(role), channel_(std::move(channel)), cfg_(cfg) {
  cfg_.validate();
}

std::vector<u64> Endpoint::exchange(std::span<const u64> payload) {
  auto frame = encode_wire(payload);
  const std::size_t sent = frame.size();
  channel_->send(std::move(frame));
  auto incoming = channel_->receive();
  const std::size_t received = incoming.size();
  auto elements = decode_wire(incoming);

  double delay_s = cfg_.roundtrip_delay_ms / 1000.0;
  if (cfg_.bandwidth_bytes_per_s) delay_s += static_cast<double>(sent) / *cfg_.bandwidth_bytes_per_s;
  if (delay_s > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));

  transcript_.record_exchange(role_, sent, received, delay_s);
  if (hook_) hook_(elements);
  return elements;
}

void Endpoint::close() {
  if (channel_) channel_->close();
}

ExchangeResult simulate_exchange(const NetworkConfig& cfg, std::span<const u64> payload_a,
                                 std::span<const u64> payload_b) {
  auto [ca, cb] = make_local_channel_pair();
  Endpoint a(Role::A, std::move(ca), cfg);
  Endpoint b(Role::B, std::move(cb), cfg);
  ExchangeResult out;
  std::exception_ptr error;
  std::thread tb([&] {
    try {
      out.received_by_b = b.exchange(payload_b);
    } catch (...) {
      error = std::current_exception();
      b.close();
    }
  });
  out.received_by_a = a.exchange(payload_a);
  tb.join();
  if (error) std::rethrow_exception(error);
  out.transcript = a.transcript().snapshot();
  return out;
}

}  // namespace polyshare
