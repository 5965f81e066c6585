#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyshare/ring.hpp"

namespace polyshare {

enum class TransportMode { in_process, socket };

struct NetworkConfig {
  double roundtrip_delay_ms = 0.0;
  std::optional<double> bandwidth_bytes_per_s;  // unset = unlimited
  TransportMode mode = TransportMode::in_process;

  static NetworkConfig lan() { return NetworkConfig{0.25, std::nullopt, TransportMode::in_process}; }
  static NetworkConfig wan() { return NetworkConfig{100.0, std::nullopt, TransportMode::in_process}; }
  void validate() const;
};

struct TranscriptSnapshot {
  std::uint64_t rounds = 0;
  std::array<std::uint64_t, 2> bytes_sent{};  // indexed by Role
  double wall_time_s = 0.0;
  double injected_delay_s = 0.0;

  std::uint64_t total_bytes() const { return bytes_sent[0] + bytes_sent[1]; }
};

// Per-endpoint session counters. Only the owning endpoint writes; snapshot()
// may be called from any thread.
class Transcript {
 public:
  Transcript();
  void record_exchange(Role self, std::size_t sent_bytes, std::size_t received_bytes, double delay_s);
  TranscriptSnapshot snapshot() const;
  void reset();

 private:
  mutable std::mutex mu_;
  TranscriptSnapshot data_;
  std::chrono::steady_clock::time_point start_;
};

// Wire format: 8-byte little-endian element count followed by the elements
// as little-endian 64-bit words.
constexpr std::size_t wire_size(std::size_t count) { return 8 + 8 * count; }
std::vector<std::uint8_t> encode_wire(std::span<const u64> elements);
std::vector<u64> decode_wire(std::span<const std::uint8_t> bytes);

// Ordered, reliable delivery of whole frames between two parties.
class FrameChannel {
 public:
  virtual ~FrameChannel() = default;
  virtual void send(std::vector<std::uint8_t> frame) = 0;
  virtual std::vector<std::uint8_t> receive() = 0;
  // Wakes a peer blocked in receive(); later calls throw TransportError.
  virtual void close() = 0;
};

std::pair<std::unique_ptr<FrameChannel>, std::unique_ptr<FrameChannel>> make_local_channel_pair();

// Stream-socket frames: 8-byte little-endian payload length, then the payload.
class SocketListener {
 public:
  explicit SocketListener(std::uint16_t port);  // 0 picks an ephemeral port
  ~SocketListener();
  SocketListener(const SocketListener&) = delete;
  SocketListener& operator=(const SocketListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<FrameChannel> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<FrameChannel> socket_connect(const std::string& host, std::uint16_t port,
                                             std::chrono::milliseconds timeout = std::chrono::seconds(10));

// A party's end of the link: frames payloads, injects the configured delay
// once per paired exchange and keeps the transcript.
class Endpoint {
 public:
  Endpoint(Role role, std::unique_ptr<FrameChannel> channel, NetworkConfig cfg);

  Role role() const { return role_; }
  const NetworkConfig& config() const { return cfg_; }

  // Sends `payload`, receives the peer's payload of the same exchange.
  std::vector<u64> exchange(std::span<const u64> payload);

  const Transcript& transcript() const { return transcript_; }
  Transcript& transcript() { return transcript_; }

  // Observer for every payload received from the peer.
  void set_receive_hook(std::function<void(std::span<const u64>)> hook) { hook_ = std::move(hook); }
  void close();

 private:
  Role role_;
  std::unique_ptr<FrameChannel> channel_;
  NetworkConfig cfg_;
  Transcript transcript_;
  std::function<void(std::span<const u64>)> hook_;
};

// Runs one paired exchange between two in-process endpoints.
struct ExchangeResult {
  std::vector<u64> received_by_b;
  std::vector<u64> received_by_a;
  TranscriptSnapshot transcript;
};
ExchangeResult simulate_exchange(const NetworkConfig& cfg, std::span<const u64> payload_a,
                                 std::span<const u64> payload_b);

}  // namespace polyshare
