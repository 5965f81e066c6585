#pragma once

#include <stdexcept>
#include <string>

namespace polyshare {

// Value cannot be represented in the ring at the requested scale.
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shares combined incorrectly (scale or role mismatch).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Correlated randomness exhausted or too small for the request.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed model container; the message names the failing position.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace polyshare
