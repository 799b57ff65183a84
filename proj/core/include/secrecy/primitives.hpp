#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "secrecy/party.hpp"
#include "secrecy/share.hpp"
#include "secrecy/task.hpp"

namespace secrecy {

/// One party's holdings of a vector of shared values. bits is the number of
/// active bits per element (1 for flags, the party width for words) and
/// drives op accounting.
struct SVec {
  std::vector<Word> lo;
  std::vector<Word> hi;
  Mode mode = Mode::Boolean;
  unsigned bits = kWordBits;

  SVec() = default;
  SVec(std::size_t n, Mode m, unsigned b) : lo(n), hi(n), mode(m), bits(b) {}

  std::size_t size() const { return lo.size(); }
  bool empty() const { return lo.empty(); }
  ReplicatedShare at(std::size_t i) const { return {lo[i], hi[i], mode}; }
  void set(std::size_t i, const ReplicatedShare& s) {
    lo[i] = s.lo;
    hi[i] = s.hi;
  }
  void push_back(Word l, Word h) {
    lo.push_back(l);
    hi.push_back(h);
  }

  SVec slice(std::size_t begin, std::size_t count) const;
  SVec gather(std::span<const std::size_t> idx) const;
  void append(const SVec& o);
  static SVec concat(const std::vector<const SVec*>& parts);
};

namespace gates {

// Local, round-free building blocks.

/// Sharing of public values: share 0 carries the value.
SVec constant(const Party& p, std::span<const Word> values, Mode m, unsigned bits);
SVec constant(const Party& p, Word value, std::size_t n, Mode m, unsigned bits);
/// Fresh replicated sharing of uniform values from the pairwise streams.
SVec random(Party& p, std::size_t n, Mode m, unsigned bits);
/// Restricts every share to the party width.
SVec masked(const Party& p, SVec x);

SVec xor_(Party& p, const SVec& x, const SVec& y);
/// XOR without op accounting, for wiring inside circuits.
SVec xor_raw(const SVec& x, const SVec& y);
/// XOR with a public value (free).
SVec xor_public(const Party& p, SVec x, Word c);
SVec not_(const Party& p, const SVec& x);
/// Replicates bit 0 into every active bit position (free).
SVec expand(const Party& p, const SVec& bit);
/// Extracts bit j of every element (free).
SVec bit_at(const SVec& x, unsigned j);
/// Most significant active bit (free).
SVec ltz(const Party& p, const SVec& x);

SVec add(Party& p, const SVec& x, const SVec& y);
SVec sub(Party& p, const SVec& x, const SVec& y);
SVec scale(Party& p, Word c, const SVec& x);
SVec add_public(const Party& p, SVec x, Word c);
/// Local arithmetic sharing of share component k of a boolean bit vector.
SVec lift(const Party& p, const SVec& bit, int k);

// Interactive gates; each completes in one batched round unless noted.
// Arguments are taken by value since a task may start after the caller's
// temporaries are gone.

/// Resharing step shared by AND and mul. Does not count ops.
Task<SVec> and_raw(Party& p, SVec x, SVec y);
Task<SVec> mul_raw(Party& p, SVec x, SVec y);

Task<SVec> and_(Party& p, SVec x, SVec y);
Task<SVec> or_(Party& p, SVec x, SVec y);
/// b ? x : y with b a flag vector. 3 ops per element.
Task<SVec> mux(Party& p, SVec b, SVec x, SVec y);
Task<SVec> mul(Party& p, SVec x, SVec y);

/// Boolean bit to arithmetic bit; 2 rounds.
Task<SVec> b2a_bit(Party& p, SVec bit);
/// Boolean word to arithmetic word by per-bit conversion; 2 rounds.
Task<SVec> b2a(Party& p, SVec x);
/// Arithmetic word to boolean word; width + 1 rounds.
Task<SVec> a2b(Party& p, SVec x);

/// Ripple-carry x + y + carry_in with public carry_in in {0,1}; width rounds.
Task<SVec> rca(Party& p, SVec x, SVec y, bool carry_in = false);
/// x - y as x + ~y + 1.
Task<SVec> rca_sub(Party& p, SVec x, SVec y);

/// One key unit of a lexicographic comparison.
struct Unit {
  bool desc = false;
  bool is_signed = true;
};

/// Bitwise equality of x and y; result in bit 0.
Task<SVec> eq(Party& p, SVec x, SVec y);
/// Signed x < y; result in bit 0.
Task<SVec> lt(Party& p, SVec x, SVec y);
/// Lexicographic "x before y" over several units, first unit most
/// significant. Unit widths come from the vectors.
Task<SVec> lt_multi(Party& p, std::vector<SVec> x, std::vector<SVec> y,
                    std::vector<Unit> units);
Task<SVec> eq_multi(Party& p, std::vector<SVec> x, std::vector<SVec> y);

struct Swapped {
  SVec min;
  SVec max;
};
Task<Swapped> compare_swap(Party& p, SVec x, SVec y);

/// Reveals x to every party.
Task<std::vector<Word>> open(Party& p, SVec x);

}  // namespace gates
}  // namespace secrecy
