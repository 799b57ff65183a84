#include "secrecy/share.hpp"

#include <sodium.h>

#include <cstring>

#include "secrecy/error.hpp"

namespace secrecy {

std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::ModeMismatch: return "ModeMismatch";
    case Errc::ReplicationInconsistency: return "ReplicationInconsistency";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TransportClosed: return "TransportClosed";
    case Errc::PayloadCountMismatch: return "PayloadCountMismatch";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::NonPowerOfTwo: return "NonPowerOfTwo";
    case Errc::UnknownPair: return "UnknownPair";
    case Errc::GuardFailed: return "GuardFailed";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnsupportedFeature: return "UnsupportedFeature";
    case Errc::SentinelCollision: return "SentinelCollision";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::BadFile: return "BadFile";
    case Errc::UnknownTable: return "UnknownTable";
  }
  return "Unknown";
}

bool is_protocol_error(Errc e) {
  return e == Errc::TransportClosed || e == Errc::PayloadCountMismatch ||
         e == Errc::ReplicationInconsistency || e == Errc::ModeMismatch;
}

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  (void)rc;
}

}  // namespace

Prg::Prg() : Prg(random_key()) {}

Prg::Prg(const Key& key) : key_(key) { ensure_sodium(); }

void Prg::refill() {
  static const unsigned char nonce[crypto_stream_chacha20_ietf_NONCEBYTES] = {};
  constexpr std::size_t bytes = sizeof(buf_);
  constexpr std::size_t blocks = bytes / 64;
  std::memset(buf_.data(), 0, bytes);
  auto* p = reinterpret_cast<unsigned char*>(buf_.data());
  crypto_stream_chacha20_ietf_xor_ic(p, p, bytes, nonce, static_cast<std::uint32_t>(block_),
                                     key_.data());
  block_ += blocks;
  pos_ = 0;
}

Word Prg::next() {
  if (pos_ == buf_.size()) refill();
  ++counter_;
  return buf_[pos_++];
}

void Prg::fill(std::span<Word> out) {
  for (auto& w : out) w = next();
}

Prg::Key Prg::derive(std::uint64_t seed, std::uint32_t label) {
  ensure_sodium();
  unsigned char in[12];
  std::memcpy(in, &seed, 8);
  std::memcpy(in + 8, &label, 4);
  Key k{};
  crypto_generichash(k.data(), k.size(), in, sizeof in, nullptr, 0);
  return k;
}

Prg::Key Prg::random_key() {
  ensure_sodium();
  Key k{};
  randombytes_buf(k.data(), k.size());
  return k;
}

namespace {

// Seed for the pair (i, i+1) is index i.
std::array<SetupKeys, kParties> keys_from(const std::array<Prg::Key, kParties>& pair) {
  return {SetupKeys{Prg(pair[2]), Prg(pair[0])},
          SetupKeys{Prg(pair[0]), Prg(pair[1])},
          SetupKeys{Prg(pair[1]), Prg(pair[2])}};
}

}  // namespace

std::array<SetupKeys, kParties> setup_keys(std::uint64_t seed) {
  return keys_from({Prg::derive(seed, 0), Prg::derive(seed, 1), Prg::derive(seed, 2)});
}

std::array<SetupKeys, kParties> setup_keys_random() {
  return keys_from({Prg::random_key(), Prg::random_key(), Prg::random_key()});
}

ShareTriple share_with(Word secret, Mode mode, Word s1, Word s2) {
  const Word s3 = mode == Mode::Boolean ? secret ^ s1 ^ s2 : secret - s1 - s2;
  return {ReplicatedShare{s1, s2, mode}, ReplicatedShare{s2, s3, mode},
          ReplicatedShare{s3, s1, mode}};
}

ShareTriple share(Word secret, Mode mode, Prg& rng) {
  const Word s1 = rng.next();
  const Word s2 = rng.next();
  return share_with(secret, mode, s1, s2);
}

Word reconstruct(const ReplicatedShare& p1, const ReplicatedShare& p2, const ReplicatedShare& p3) {
  if (p1.mode != p2.mode || p2.mode != p3.mode)
    throw Error(Errc::ModeMismatch, "shares are in different modes");
  if (p1.hi != p2.lo || p2.hi != p3.lo || p3.hi != p1.lo)
    throw Error(Errc::ReplicationInconsistency, "replicated shares disagree");
  return p1.mode == Mode::Boolean ? p1.lo ^ p2.lo ^ p3.lo : p1.lo + p2.lo + p3.lo;
}

Word reconstruct(const ShareTriple& t) { return reconstruct(t[0], t[1], t[2]); }

std::vector<ProactiveShares> proactive_share(Word secret, std::span<const Word> constants,
                                             Prg& rng) {
  std::vector<ProactiveShares> out;
  out.reserve(constants.size());
  for (Word c : constants) {
    out.push_back({c, share(secret - c, Mode::Boolean, rng), share(c - secret, Mode::Boolean, rng)});
  }
  return out;
}

}  // namespace secrecy
