#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace secrecy {

using Word = std::uint64_t;

inline constexpr int kParties = 3;
inline constexpr unsigned kWordBits = 64;

/// Reserved all-ones word marking invalid and padding rows.
inline constexpr Word kSentinel = ~Word{0};

enum class Mode : std::uint8_t { Boolean = 0, Arithmetic = 1 };

/// One party's replicated holding: share s_i (lo) and s_{i+1} (hi).
struct ReplicatedShare {
  Word lo = 0;
  Word hi = 0;
  Mode mode = Mode::Boolean;

  friend bool operator==(const ReplicatedShare&, const ReplicatedShare&) = default;
};

using ShareTriple = std::array<ReplicatedShare, kParties>;

/// Parties are indexed 0..2 internally; party i's ring successor is (i+1) mod 3.
constexpr int successor(int party) { return (party + 1) % kParties; }
constexpr int predecessor(int party) { return (party + kParties - 1) % kParties; }

/// ChaCha20 keystream generator. Draws are counted so that two holders of the
/// same key stay aligned as long as they draw in the same order.
class Prg {
 public:
  using Key = std::array<unsigned char, 32>;

  Prg();
  explicit Prg(const Key& key);

  Word next();
  void fill(std::span<Word> out);
  std::uint64_t counter() const { return counter_; }

  static Key derive(std::uint64_t seed, std::uint32_t label);
  static Key random_key();

 private:
  void refill();

  Key key_{};
  std::array<Word, 512> buf_{};
  std::size_t pos_ = 512;
  std::uint64_t block_ = 0;
  std::uint64_t counter_ = 0;
};

/// Pairwise seeds held by one party: prev is shared with the ring predecessor,
/// next with the ring successor.
struct SetupKeys {
  Prg prev;
  Prg next;

  /// Local term of a fresh sharing of zero under XOR.
  Word zero_bool() { return next.next() ^ prev.next(); }
  /// Local term of a fresh sharing of zero under addition mod 2^64.
  Word zero_arith() { return next.next() - prev.next(); }
  /// Replicated sharing of a uniformly random word, no communication.
  ReplicatedShare random_share(Mode m) { return {prev.next(), next.next(), m}; }

  std::uint64_t counter() const { return next.counter() + prev.counter(); }
};

/// Keys for the three parties from a master seed. Party i's next key equals
/// party i+1's prev key.
std::array<SetupKeys, kParties> setup_keys(std::uint64_t seed);
std::array<SetupKeys, kParties> setup_keys_random();

ShareTriple share(Word secret, Mode mode, Prg& rng);

/// Deterministic split with caller-chosen s1, s2 (s3 is forced).
ShareTriple share_with(Word secret, Mode mode, Word s1, Word s2);

/// Throws ModeMismatch or ReplicationInconsistency.
Word reconstruct(const ReplicatedShare& p1, const ReplicatedShare& p2, const ReplicatedShare& p3);
Word reconstruct(const ShareTriple& t);

/// Sharings of secret - c and c - secret for each public constant c, in that
/// order, so comparisons against c reduce to sign checks.
struct ProactiveShares {
  Word constant;
  ShareTriple minus_const;  // secret - c
  ShareTriple const_minus;  // c - secret
};
std::vector<ProactiveShares> proactive_share(Word secret, std::span<const Word> constants, Prg& rng);

}  // namespace secrecy
