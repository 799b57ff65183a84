#pragma once

#include <array>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "secrecy/share.hpp"
#include "secrecy/task.hpp"
#include "secrecy/transport.hpp"

namespace secrecy {

enum class Delivery { Batched, Eager };

struct Counters {
  std::uint64_t ops = 0;
  std::uint64_t remote_ops = 0;
  std::uint64_t rounds = 0;
  std::uint64_t payloads = 0;
  std::uint64_t bytes = 0;

  Counters operator-(const Counters& o) const {
    return {ops - o.ops, remote_ops - o.remote_ops, rounds - o.rounds, payloads - o.payloads, bytes - o.bytes};
  }
  friend bool operator==(const Counters&, const Counters&) = default;
};

struct TraceEntry {
  std::uint64_t round = 0;
  std::uint64_t count = 0;
  std::uint64_t bytes = 0;
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

/// Per-party record of every flushed round.
struct CommTrace {
  int party = 0;
  std::vector<TraceEntry> rounds;

  std::uint64_t total_rounds() const { return rounds.size(); }
  /// Per-round (count, bytes) shape, without round indices.
  bool same_shape(const CommTrace& o) const;
  void write_jsonl(std::ostream& out) const;
};

/// One protocol participant. Circuits post payloads for the successor, await
/// round(), then read the predecessor's payloads at the same offsets.
class Party {
 public:
  Party(int id, SetupKeys keys, Transport& transport, unsigned width = kWordBits);
  Party(const Party&) = delete;
  Party& operator=(const Party&) = delete;

  int id() const { return id_; }
  unsigned width() const { return width_; }
  /// All-ones in the active width.
  Word mask() const { return mask_; }
  Word msb() const { return Word{1} << (width_ - 1); }

  SetupKeys& keys() { return keys_; }
  Scheduler& scheduler() { return sched_; }

  Delivery delivery() const { return delivery_; }
  void set_delivery(Delivery d) { delivery_ = d; }

  /// Queues payloads for the next flush and returns their offset.
  std::size_t post(Word w);
  std::size_t post(std::span<const Word> ws);
  /// Predecessor payloads of the last flush.
  const std::vector<Word>& received() const { return recv_; }
  Word received(std::size_t i) const { return recv_[i]; }

  RoundAwaiter round() { return RoundAwaiter{sched_}; }

  /// Sends everything pending as one round (Batched) or one round per
  /// payload (Eager). No-op when nothing is pending.
  void flush();

  /// Synchronous exchange outside of any circuit.
  std::vector<Word> exchange(std::span<const Word> out);

  void count(std::uint64_t ops, std::uint64_t remote = 0) {
    counters_.ops += ops;
    counters_.remote_ops += remote;
  }
  const Counters& counters() const { return counters_; }
  const CommTrace& trace() const { return trace_; }

  template <class T>
  T run(Task<T> task) {
    sched_.schedule(task.raw());
    drive();
    return task.result();
  }

 private:
  void drive();

  int id_;
  unsigned width_;
  Word mask_;
  SetupKeys keys_;
  Transport& transport_;
  Scheduler sched_;
  Delivery delivery_ = Delivery::Batched;
  std::vector<Word> pending_;
  std::vector<Word> recv_;
  Counters counters_;
  CommTrace trace_;
};

/// Transports for three in-process parties.
class PartyNetwork {
 public:
  explicit PartyNetwork(TransportKind kind = TransportKind::InProcess);
  Transport& at(int party);
  void close_all();
  TransportKind kind() const { return kind_; }

 private:
  TransportKind kind_;
  std::unique_ptr<InProcRing> inproc_;
  std::array<std::unique_ptr<TcpTransport>, kParties> tcp_;
};

struct RunOptions {
  TransportKind transport = TransportKind::InProcess;
  std::uint64_t seed = 1;
  unsigned width = kWordBits;
  Delivery delivery = Delivery::Batched;
};

/// Runs body on three threads, one per party. On failure every transport is
/// closed so blocked peers unwind; the most informative error is rethrown.
template <class R>
struct PartyResults {
  std::array<R, kParties> values;
  std::array<CommTrace, kParties> traces;
  std::array<Counters, kParties> counters;
};

namespace detail {
void rethrow_first(std::array<std::exception_ptr, kParties>& errors);
}

template <class F>
auto run_parties(const RunOptions& opt, F&& body) {
  using R = std::invoke_result_t<F&, Party&>;
  PartyNetwork net(opt.transport);
  auto keys = setup_keys(opt.seed);
  PartyResults<R> out;
  std::array<std::exception_ptr, kParties> errors;
  std::vector<std::thread> threads;
  for (int i = 0; i < kParties; ++i) {
    threads.emplace_back([&, i] {
      try {
        Party p(i, std::move(keys[i]), net.at(i), opt.width);
        p.set_delivery(opt.delivery);
        out.values[i] = body(p);
        out.traces[i] = p.trace();
        out.counters[i] = p.counters();
      } catch (...) {
        errors[i] = std::current_exception();
        net.close_all();
      }
    });
  }
  for (auto& t : threads) t.join();
  detail::rethrow_first(errors);
  return out;
}

}  // namespace secrecy
