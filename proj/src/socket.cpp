#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "polyshare/errors.hpp"
#include "polyshare/transport.hpp"

namespace polyshare {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

class SocketChannel final : public FrameChannel {
 public:
  explicit SocketChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~SocketChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(std::vector<std::uint8_t> frame) override {
    std::uint8_t header[8];
    const u64 len = frame.size();
    for (int i = 0; i < 8; ++i) header[i] = static_cast<std::uint8_t>(len >> (8 * i));
    write_all(header, sizeof(header));
    write_all(frame.data(), frame.size());
  }

  std::vector<std::uint8_t> receive() override {
    std::uint8_t header[8];
    read_all(header, sizeof(header));
    u64 len = 0;
    for (int i = 0; i < 8; ++i) len |= static_cast<u64>(header[i]) << (8 * i);
    if (len > (u64{1} << 34)) throw TransportError("socket frame length " + std::to_string(len) + " is implausible");
    std::vector<std::uint8_t> frame(len);
    read_all(frame.data(), frame.size());
    return frame;
  }

  void close() override {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  void write_all(const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
      const ssize_t w = ::send(fd_, data, n, MSG_NOSIGNAL);
      if (w < 0) {
        if (errno == EINTR) continue;
        fail("socket send");
      }
      data += w;
      n -= static_cast<std::size_t>(w);
    }
  }

  void read_all(std::uint8_t* data, std::size_t n) {
    while (n > 0) {
      const ssize_t r = ::recv(fd_, data, n, 0);
      if (r == 0) throw TransportError("socket closed by peer");
      if (r < 0) {
        if (errno == EINTR) continue;
        fail("socket recv");
      }
      data += r;
      n -= static_cast<std::size_t>(r);
    }
  }

  int fd_;
};

}  // namespace

SocketListener::SocketListener(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd_);
    fail("bind port " + std::to_string(port));
  }
  if (::listen(fd_, 1) < 0) {
    ::close(fd_);
    fail("listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SocketListener::~SocketListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<FrameChannel> SocketListener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<SocketChannel>(fd);
    if (errno != EINTR) fail("accept");
  }
}

std::unique_ptr<FrameChannel> socket_connect(const std::string& host, std::uint16_t port,
                                             std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
      ::freeaddrinfo(res);
      fail("socket");
    }
    if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return std::make_unique<SocketChannel>(fd);
    }
    const int err = errno;
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      ::freeaddrinfo(res);
      errno = err;
      fail("connect " + host + ":" + service);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace polyshare
