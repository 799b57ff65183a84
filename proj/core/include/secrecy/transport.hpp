#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "secrecy/share.hpp"

namespace secrecy {

enum class TransportKind { InProcess, Tcp };

/// Ring link of one party: frames go to the successor and arrive from the
/// predecessor.
class Transport {
 public:
  virtual ~Transport() = default;

  /// Sends one frame to the successor and returns the predecessor's frame.
  virtual std::vector<Word> exchange(std::span<const Word> out) = 0;
  virtual void close() = 0;
  virtual TransportKind kind() const = 0;
};

/// Three in-memory links sharing one set of FIFO channels.
class InProcRing {
 public:
  InProcRing();
  Transport& at(int party) { return *links_[party]; }
  void close_all();

 private:
  struct Channel {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<Word>> frames;
    bool closed = false;
  };
  class Link;

  std::array<Channel, kParties> inbox_;
  std::array<std::unique_ptr<Transport>, kParties> links_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static Endpoint parse(const std::string& text);
};

/// Length-prefixed frames over TCP: u32 little-endian byte length, then the
/// payload as consecutive little-endian u64 words.
class TcpTransport final : public Transport {
 public:
  TcpTransport(int to_successor, int from_predecessor);
  ~TcpTransport() override;

  std::vector<Word> exchange(std::span<const Word> out) override;
  void close() override;
  TransportKind kind() const override { return TransportKind::Tcp; }

  /// Listens on bind, connects to the successor (retrying until it is up) and
  /// accepts the predecessor.
  static std::unique_ptr<TcpTransport> connect_ring(const Endpoint& bind, const Endpoint& successor,
                                                    int timeout_ms = 10000);

 private:
  int out_fd_;
  int in_fd_;
  std::atomic<bool> closed_{false};
};

/// Three TCP links over loopback on ephemeral ports, for single-process runs.
std::array<std::unique_ptr<TcpTransport>, kParties> make_loopback_tcp_ring();

}  // namespace secrecy
