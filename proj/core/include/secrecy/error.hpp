#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace secrecy {

enum class Errc {
  ModeMismatch,
  ReplicationInconsistency,
  LengthMismatch,
  TransportClosed,
  PayloadCountMismatch,
  UnknownColumn,
  NonPowerOfTwo,
  UnknownPair,
  GuardFailed,
  SyntaxError,
  UnsupportedFeature,
  SentinelCollision,
  SchemaMismatch,
  BadFile,
  UnknownTable,
};

std::string_view to_string(Errc e);

/// Protocol-level failures (transport, desynchronization, corrupted shares).
bool is_protocol_error(Errc e);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace secrecy
