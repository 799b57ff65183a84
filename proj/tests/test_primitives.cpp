#include <doctest.h>

#include <random>

#include "harness.hpp"
#include "secrecy/error.hpp"
#include "stats.hpp"

using namespace secrecy;
using test::run_circuit;

namespace {

std::vector<Word> rand_words(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::vector<Word> v(n);
  for (auto& w : v) w = g();
  return v;
}

// Plaintext references, written without any engine code.
std::int64_t as_signed(Word x, unsigned w) {
  if (w == 64) return static_cast<std::int64_t>(x);
  const Word m = (Word{1} << w) - 1;
  x &= m;
  return (x >> (w - 1)) ? static_cast<std::int64_t>(x) - (std::int64_t{1} << w) : static_cast<std::int64_t>(x);
}

}  // namespace

TEST_CASE("xor is local and matches plaintext") {
  auto x = rand_words(1000, 1), y = rand_words(1000, 2);
  auto m = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return gates::xor_(p, in[0], in[1]); });
  CHECK(m.cost.rounds == 0);
  CHECK(m.cost.ops == 1000 * 64);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(m.values[i] == (x[i] ^ y[i]));

  auto self = run_circuit({test::words(x)},
                          [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return gates::xor_(p, in[0], in[0]); });
  for (auto v : self.values) CHECK(v == 0);
}

TEST_CASE("and gate: annihilator, identity, one round for a batch") {
  auto x = rand_words(1000, 3);
  std::vector<Word> zeros(1000, 0), ones(1000, ~Word{0});
  auto z = run_circuit({test::words(x), test::words(zeros)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::and_(p, in[0], in[1]); });
  for (auto v : z.values) CHECK(v == 0);
  CHECK(z.cost.rounds == 1);
  CHECK(z.cost.ops == 1000 * 64);
  auto id = run_circuit({test::words(x), test::words(ones)},
                        [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::and_(p, in[0], in[1]); });
  CHECK(id.values == x);
}

TEST_CASE("or and not") {
  auto x = rand_words(500, 4), y = rand_words(500, 5);
  std::vector<Word> ones(500, ~Word{0});
  auto o = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::or_(p, in[0], in[1]); });
  CHECK(o.cost.rounds == 1);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(o.values[i] == (x[i] | y[i]));
  auto all = run_circuit({test::words(x), test::words(ones)},
                         [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::or_(p, in[0], in[1]); });
  for (auto v : all.values) CHECK(v == ~Word{0});
  auto nn = run_circuit({test::words(x)}, [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
    co_return gates::not_(p, gates::not_(p, in[0]));
  });
  CHECK(nn.values == x);
  CHECK(nn.cost.rounds == 0);
}

TEST_CASE("equality: values, 6 rounds, 127 ops per element") {
  auto x = rand_words(10000, 6), y = rand_words(10000, 7);
  for (std::size_t i = 0; i < x.size(); i += 3) y[i] = x[i];
  for (std::size_t i = 1; i < x.size(); i += 7) y[i] = x[i] ^ (Word{1} << (i % 64));
  auto m = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::eq(p, in[0], in[1]); });
  CHECK(m.cost.rounds == 6);
  CHECK(m.cost.ops == 10000 * 127);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(m.values[i] == (x[i] == y[i] ? 1u : 0u));

  auto small = run_circuit({test::words({5, 5}), test::words({5, 6})},
                           [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::eq(p, in[0], in[1]); });
  CHECK(small.values == std::vector<Word>{1, 0});
}

TEST_CASE("signed less-than: values, 7 rounds, 253 ops per element") {
  auto x = rand_words(10000, 8), y = rand_words(10000, 9);
  for (std::size_t i = 0; i < x.size(); i += 5) y[i] = x[i];
  for (std::size_t i = 1; i < x.size(); i += 5) y[i] = x[i] + 1;
  auto m = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::lt(p, in[0], in[1]); });
  CHECK(m.cost.rounds == 7);
  CHECK(m.cost.ops == 10000 * 253);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(m.values[i] == (static_cast<std::int64_t>(x[i]) < static_cast<std::int64_t>(y[i]) ? 1u : 0u));
  auto neg = run_circuit({test::words({static_cast<Word>(-1), 3}), test::words({0, 3})},
                         [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::lt(p, in[0], in[1]); });
  CHECK(neg.values == std::vector<Word>{1, 0});
}

TEST_CASE("ltz is local and agrees with lt against zero") {
  auto x = rand_words(1000, 10);
  x[0] = static_cast<Word>(-1);
  x[1] = 0;
  std::vector<Word> zeros(1000, 0);
  auto z = run_circuit({test::words(x)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return gates::ltz(p, in[0]); });
  CHECK(z.cost.rounds == 0);
  CHECK(z.values[0] == 1);
  CHECK(z.values[1] == 0);
  auto l = run_circuit({test::words(x), test::words(zeros)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::lt(p, in[0], in[1]); });
  CHECK(z.values == l.values);
}

TEST_CASE("mux selects per flag in one round") {
  auto x = rand_words(1000, 11), y = rand_words(1000, 12), b = rand_words(1000, 13);
  for (auto& v : b) v &= 1;
  auto m = run_circuit({test::flags(b), test::words(x), test::words(y)}, [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
    co_return co_await gates::mux(p, in[0], in[1], in[2]);
  });
  CHECK(m.cost.rounds == 1);
  CHECK(m.cost.ops == 1000 * 3);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(m.values[i] == (b[i] ? x[i] : y[i]));
  auto same = run_circuit({test::flags(b), test::words(x)}, [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
    co_return co_await gates::mux(p, in[0], in[1], in[1]);
  });
  CHECK(same.values == x);
}

TEST_CASE("compare and swap orders each pair") {
  auto x = rand_words(1000, 14), y = rand_words(1000, 15);
  x[0] = 3, y[0] = 9, x[1] = 9, y[1] = 3;
  Counters cost;
  auto lo = run_circuit({test::words(x), test::words(y)}, [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
    auto s = co_await gates::compare_swap(p, in[0], in[1]);
    co_return s.min;
  });
  auto hi = run_circuit({test::words(x), test::words(y)}, [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
    auto s = co_await gates::compare_swap(p, in[0], in[1]);
    co_return s.max;
  });
  CHECK(lo.cost.rounds == 8);
  CHECK(lo.cost.ops == 1000 * 259);
  CHECK(lo.values[0] == 3);
  CHECK(hi.values[0] == 9);
  CHECK(lo.values[1] == 3);
  CHECK(hi.values[1] == 9);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto a = static_cast<std::int64_t>(x[i]), b = static_cast<std::int64_t>(y[i]);
    CHECK(lo.values[i] == static_cast<Word>(std::min(a, b)));
    CHECK(hi.values[i] == static_cast<Word>(std::max(a, b)));
  }
  auto again = run_circuit({test::words(lo.values), test::words(hi.values)}, [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
    auto s = co_await gates::compare_swap(p, in[0], in[1]);
    co_return s.min;
  });
  CHECK(again.values == lo.values);
}

TEST_CASE("ripple carry adder") {
  auto x = rand_words(10000, 16), y = rand_words(10000, 17);
  x[0] = ~Word{0}, y[0] = 1;
  y[1] = 0;
  auto m = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::rca(p, in[0], in[1]); });
  CHECK(m.cost.rounds == 64);
  CHECK(m.cost.ops == 10000 * 317);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(m.values[i] == x[i] + y[i]);
  CHECK(m.values[0] == 0);
  CHECK(m.values[1] == x[1]);

  auto d = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::rca_sub(p, in[0], in[1]); });
  CHECK(d.cost.rounds == 64);
  CHECK(d.cost.ops == 10000 * 317);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(d.values[i] == x[i] - y[i]);
}

TEST_CASE("arithmetic add, scale and mul") {
  auto x = rand_words(1000, 18), y = rand_words(1000, 19);
  std::vector<Word> zeros(1000, 0);
  auto a = run_circuit({test::arith(x), test::arith(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return gates::add(p, in[0], in[1]); });
  auto s = run_circuit({test::arith(x)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return gates::scale(p, 7, in[0]); });
  auto one = run_circuit({test::arith(x)},
                         [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return gates::scale(p, 1, in[0]); });
  auto m = run_circuit({test::arith(x), test::arith(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::mul(p, in[0], in[1]); });
  auto z = run_circuit({test::arith(x), test::arith(zeros)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::mul(p, in[0], in[1]); });
  CHECK(a.cost.rounds == 0);
  CHECK(m.cost.rounds == 1);
  CHECK(one.values == x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(a.values[i] == x[i] + y[i]);
    CHECK(s.values[i] == 7 * x[i]);
    CHECK(m.values[i] == x[i] * y[i]);
    CHECK(z.values[i] == 0);
  }
  CHECK_THROWS_AS(run_circuit({test::words(x), test::arith(y)},
                              [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return gates::add(p, in[0], in[1]); }),
                  Error);
  CHECK_THROWS_AS(run_circuit({test::words(x), test::words({1, 2})},
                              [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return gates::xor_(p, in[0], in[1]); }),
                  Error);
}

TEST_CASE("bit conversion takes two rounds") {
  auto b = rand_words(1000, 20);
  for (auto& v : b) v &= 1;
  b[0] = 0, b[1] = 1;
  auto m = run_circuit({test::flags(b)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::b2a_bit(p, in[0]); });
  CHECK(m.cost.rounds == 2);
  CHECK(m.cost.ops == 1000 * 8);
  CHECK(m.values == b);
}

TEST_CASE("word conversions round trip") {
  auto x = rand_words(500, 21);
  x[0] = 0;
  auto ab = run_circuit({test::arith(x)},
                        [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::a2b(p, in[0]); });
  CHECK(ab.values == x);
  CHECK(ab.cost.rounds == 65);
  CHECK(ab.cost.ops == 500 * (1 + 64 + 317));
  auto ba = run_circuit({test::words(x)},
                        [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::b2a(p, in[0]); });
  CHECK(ba.values == x);
  CHECK(ba.cost.rounds == 2);
  auto both = run_circuit({test::words(x)}, [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
    SVec a = co_await gates::b2a(p, in[0]);
    co_return co_await gates::a2b(p, a);
  });
  CHECK(both.values == x);
}

TEST_CASE("lexicographic comparator over several units") {
  std::mt19937_64 g(22);
  const std::size_t n = 2000;
  std::vector<Word> f1(n), f2(n), a1(n), a2(n), b1(n), b2(n);
  for (std::size_t i = 0; i < n; ++i) {
    f1[i] = g() & 1, f2[i] = g() & 1;
    a1[i] = g() % 4, a2[i] = g() % 4;
    b1[i] = static_cast<Word>(static_cast<std::int64_t>(g() % 7) - 3);
    b2[i] = static_cast<Word>(static_cast<std::int64_t>(g() % 7) - 3);
  }
  // units: flag DESC (unsigned), a ASC, b DESC
  auto m = run_circuit({test::flags(f1), test::words(a1), test::words(b1), test::flags(f2), test::words(a2), test::words(b2)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
                         std::vector<SVec> x{in[0], in[1], in[2]}, y{in[3], in[4], in[5]};
                         std::vector<gates::Unit> u{{true, false}, {false, true}, {true, true}};
                         co_return co_await gates::lt_multi(p, x, y, u);
                       });
  const unsigned W = 1 + 64 + 64;
  CHECK(m.cost.ops == n * (4 * W - 3));
  CHECK(m.cost.rounds == 1 + 6 + 2);
  for (std::size_t i = 0; i < n; ++i) {
    int want;
    if (f1[i] != f2[i])
      want = f1[i] > f2[i];
    else if (a1[i] != a2[i])
      want = a1[i] < a2[i];
    else
      want = static_cast<std::int64_t>(b1[i]) > static_cast<std::int64_t>(b2[i]);
    CHECK(m.values[i] == static_cast<Word>(want));
  }
  auto e = run_circuit({test::flags(f1), test::words(a1), test::flags(f2), test::words(a2)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> {
                         std::vector<SVec> x{in[0], in[1]}, y{in[2], in[3]};
                         co_return co_await gates::eq_multi(p, x, y);
                       });
  CHECK(e.cost.ops == n * (2 * 65 - 1));
  CHECK(e.cost.rounds == 6 + 1);
  for (std::size_t i = 0; i < n; ++i) CHECK(e.values[i] == static_cast<Word>(f1[i] == f2[i] && a1[i] == a2[i]));
}

TEST_CASE("exhaustive width-8 conformance of eq, lt and rca") {
  std::vector<Word> x, y;
  for (Word a = 0; a < 256; ++a)
    for (Word b = 0; b < 256; ++b) x.push_back(a), y.push_back(b);
  RunOptions opt;
  opt.width = 8;
  auto e = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::eq(p, in[0], in[1]); }, opt);
  auto l = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::lt(p, in[0], in[1]); }, opt);
  auto r = run_circuit({test::words(x), test::words(y)},
                       [](Party& p, std::vector<SVec>& in) -> Task<SVec> { co_return co_await gates::rca(p, in[0], in[1]); }, opt);
  CHECK(e.cost.rounds == 3);
  CHECK(l.cost.rounds == 4);
  CHECK(r.cost.rounds == 8);
  CHECK(e.cost.ops == x.size() * 15);
  CHECK(l.cost.ops == x.size() * 29);
  CHECK(r.cost.ops == x.size() * 37);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    bad += e.values[i] != static_cast<Word>(x[i] == y[i]);
    bad += l.values[i] != static_cast<Word>(as_signed(x[i], 8) < as_signed(y[i], 8));
    bad += r.values[i] != ((x[i] + y[i]) & 0xff);
  }
  CHECK(bad == 0);
}

TEST_CASE("and and mul outputs are re-randomized") {
  const std::size_t n = 10000;
  std::vector<Word> x(n, 0xf0f0), y(n, 0xff00);
  RunOptions opt;
  Prg dealer(Prg::derive(5, 5));
  for (Mode mode : {Mode::Boolean, Mode::Arithmetic}) {
    std::array<std::vector<SVec>, kParties> held;
    for (int i = 0; i < kParties; ++i) held[i] = {SVec(n, mode, 64), SVec(n, mode, 64)};
    for (std::size_t r = 0; r < n; ++r)
      for (int k = 0; k < 2; ++k) {
        auto t = share(k ? y[r] : x[r], mode, dealer);
        for (int i = 0; i < kParties; ++i) held[i][k].set(r, t[i]);
      }
    auto res = run_parties(opt, [&](Party& p) {
      auto& in = held[p.id()];
      return mode == Mode::Boolean ? p.run(gates::and_(p, in[0], in[1])) : p.run(gates::mul(p, in[0], in[1]));
    });
    for (int i = 0; i < kParties; ++i) {
      CHECK(test::byte_uniformity_p(res.values[i].lo) > test::kUniformityAlpha);
      CHECK(test::byte_uniformity_p(res.values[i].hi) > test::kUniformityAlpha);
    }
  }
}
