#include "secrecy/party.hpp"

#include "secrecy/error.hpp"

namespace secrecy {

bool CommTrace::same_shape(const CommTrace& o) const {
  if (rounds.size() != o.rounds.size()) return false;
  for (std::size_t i = 0; i < rounds.size(); ++i)
    if (rounds[i].count != o.rounds[i].count || rounds[i].bytes != o.rounds[i].bytes) return false;
  return true;
}

void CommTrace::write_jsonl(std::ostream& out) const {
  for (const auto& r : rounds)
    out << "{\"party\":" << party + 1 << ",\"round\":" << r.round << ",\"count\":" << r.count
        << ",\"bytes\":" << r.bytes << "}\n";
}

Party::Party(int id, SetupKeys keys, Transport& transport, unsigned width)
    : id_(id),
      width_(width),
      mask_(width >= kWordBits ? ~Word{0} : (Word{1} << width) - 1),
      keys_(std::move(keys)),
      transport_(transport) {
  if (width == 0 || width > kWordBits) throw Error(Errc::LengthMismatch, "word width must be in 1..64");
  trace_.party = id;
}

std::size_t Party::post(Word w) {
  pending_.push_back(w);
  return pending_.size() - 1;
}

std::size_t Party::post(std::span<const Word> ws) {
  const std::size_t at = pending_.size();
  pending_.insert(pending_.end(), ws.begin(), ws.end());
  return at;
}

void Party::flush() {
  if (pending_.empty()) return;
  auto record = [&](std::uint64_t count) {
    trace_.rounds.push_back({counters_.rounds, count, count * sizeof(Word)});
    ++counters_.rounds;
    counters_.payloads += count;
    counters_.bytes += count * sizeof(Word);
  };
  if (delivery_ == Delivery::Batched) {
    recv_ = transport_.exchange(pending_);
    if (recv_.size() != pending_.size())
      throw Error(Errc::PayloadCountMismatch, "sent " + std::to_string(pending_.size()) + " payloads, received " +
                                                  std::to_string(recv_.size()));
    record(pending_.size());
  } else {
    recv_.resize(pending_.size());
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      auto one = transport_.exchange(std::span<const Word>(&pending_[i], 1));
      if (one.size() != 1) throw Error(Errc::PayloadCountMismatch, "eager exchange expects one payload");
      recv_[i] = one[0];
      record(1);
    }
  }
  pending_.clear();
}

std::vector<Word> Party::exchange(std::span<const Word> out) {
  pending_.assign(out.begin(), out.end());
  flush();
  if (out.empty()) return {};
  return recv_;
}

void Party::drive() {
  for (;;) {
    sched_.drain();
    if (!sched_.parked()) break;
    flush();
    sched_.release();
  }
}

PartyNetwork::PartyNetwork(TransportKind kind) : kind_(kind) {
  if (kind == TransportKind::InProcess)
    inproc_ = std::make_unique<InProcRing>();
  else
    tcp_ = make_loopback_tcp_ring();
}

Transport& PartyNetwork::at(int party) {
  if (inproc_) return inproc_->at(party);
  return *tcp_[party];
}

void PartyNetwork::close_all() {
  if (inproc_)
    inproc_->close_all();
  else
    for (auto& t : tcp_) t->close();
}

namespace detail {

void rethrow_first(std::array<std::exception_ptr, kParties>& errors) {
  // A peer that only saw its channel close is a symptom; prefer the cause.
  std::exception_ptr fallback;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      if (err.code() != Errc::TransportClosed) throw;
      if (!fallback) fallback = e;
    } catch (...) {
      throw;
    }
  }
  if (fallback) std::rethrow_exception(fallback);
}

}  // namespace detail
}  // namespace secrecy
