#pragma once

#include <functional>
#include <vector>

#include "secrecy/party.hpp"
#include "secrecy/primitives.hpp"

namespace secrecy::test {

struct Input {
  std::vector<Word> values;
  Mode mode = Mode::Boolean;
  unsigned bits = kWordBits;
};

struct Measured {
  std::vector<Word> values;
  Counters cost;  // party 0, circuit only (opening excluded)
  std::array<CommTrace, kParties> traces;
};

using Circuit = std::function<Task<SVec>(Party&, std::vector<SVec>&)>;

/// Shares the inputs with a dealer PRG, runs the circuit on three parties and
/// opens its output.
inline Measured run_circuit(const std::vector<Input>& inputs, const Circuit& circuit, RunOptions opt = {},
                            std::uint64_t dealer_seed = 99) {
  Prg dealer(Prg::derive(dealer_seed, 0xdea1));
  const Word mask = opt.width >= 64 ? ~Word{0} : (Word{1} << opt.width) - 1;
  std::array<std::vector<SVec>, kParties> held;
  for (const auto& in : inputs) {
    const unsigned bits = in.bits == kWordBits ? opt.width : in.bits;
    for (int i = 0; i < kParties; ++i) held[i].emplace_back(in.values.size(), in.mode, bits);
    for (std::size_t r = 0; r < in.values.size(); ++r) {
      auto t = share(in.values[r] & mask, in.mode, dealer);
      for (int i = 0; i < kParties; ++i) held[i].back().set(r, t[i]);
    }
  }
  struct Out {
    std::vector<Word> values;
    Counters cost;
  };
  auto res = run_parties(opt, [&](Party& p) {
    auto& mine = held[p.id()];
    SVec result = p.run(circuit(p, mine));
    Out o;
    o.cost = p.counters();
    o.values = p.run(gates::open(p, result));
    return o;
  });
  Measured m;
  m.values = res.values[0].values;
  m.cost = res.values[0].cost;
  m.traces = res.traces;
  return m;
}

inline Input words(std::vector<Word> v) { return {std::move(v), Mode::Boolean, kWordBits}; }
inline Input arith(std::vector<Word> v) { return {std::move(v), Mode::Arithmetic, kWordBits}; }
inline Input flags(std::vector<Word> v) { return {std::move(v), Mode::Boolean, 1}; }

}  // namespace secrecy::test
