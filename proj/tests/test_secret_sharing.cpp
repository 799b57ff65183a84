#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "secrecy/error.hpp"
#include "secrecy/share.hpp"
#include "secrecy/share_file.hpp"
#include "stats.hpp"

using namespace secrecy;

TEST_CASE("share then reconstruct returns the secret in both modes") {
  Prg rng(Prg::derive(1, 1));
  std::mt19937_64 gen(5);
  for (int i = 0; i < 10000; ++i) {
    const Word x = gen();
    CHECK(reconstruct(share(x, Mode::Boolean, rng)) == x);
    CHECK(reconstruct(share(x, Mode::Arithmetic, rng)) == x);
  }
}

TEST_CASE("fixed splits") {
  auto z = share_with(0, Mode::Boolean, 0, 0);
  CHECK(z[2].lo == 0);
  CHECK(reconstruct(z) == 0);

  auto a = share_with(5, Mode::Arithmetic, ~Word{0}, 3);
  CHECK(a[1].hi == 3);
  CHECK(reconstruct(a) == 5);

  // P1 -> (s1, s2), P2 -> (s2, s3), P3 -> (s3, s1)
  ShareTriple b{ReplicatedShare{0b01, 0b10, Mode::Boolean}, ReplicatedShare{0b10, 0b11, Mode::Boolean},
                ReplicatedShare{0b11, 0b01, Mode::Boolean}};
  CHECK(reconstruct(b) == 0);
}

TEST_CASE("arithmetic shares summing to 42") {
  auto t = share_with(42, Mode::Arithmetic, 1000, ~Word{0} - 7);
  CHECK(t[0].lo + t[1].lo + t[2].lo == 42);
  CHECK(reconstruct(t) == 42);
}

TEST_CASE("reconstruct rejects inconsistent or mixed shares") {
  Prg rng(Prg::derive(1, 2));
  auto t = share(17, Mode::Boolean, rng);
  t[0].hi ^= 1;
  CHECK_THROWS_AS(reconstruct(t), Error);
  try {
    reconstruct(t);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ReplicationInconsistency);
  }
  auto m = share(17, Mode::Boolean, rng);
  m[1].mode = Mode::Arithmetic;
  try {
    reconstruct(m);
    FAIL("expected ModeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ModeMismatch);
  }
}

TEST_CASE("replication layout after share") {
  Prg rng(Prg::derive(1, 3));
  for (int i = 0; i < 100; ++i) {
    auto t = share(static_cast<Word>(i), i % 2 ? Mode::Boolean : Mode::Arithmetic, rng);
    for (int p = 0; p < kParties; ++p) CHECK(t[p].hi == t[successor(p)].lo);
  }
}

TEST_CASE("zero sharing cancels at every counter") {
  auto keys = setup_keys(11);
  for (int i = 0; i < 1000; ++i) {
    const Word b = keys[0].zero_bool() ^ keys[1].zero_bool() ^ keys[2].zero_bool();
    CHECK(b == 0);
    const Word a = keys[0].zero_arith() + keys[1].zero_arith() + keys[2].zero_arith();
    CHECK(a == 0);
  }
  CHECK(keys[0].counter() == keys[1].counter());
}

TEST_CASE("next seed of a party is the prev seed of its successor") {
  auto keys = setup_keys(12);
  for (int p = 0; p < kParties; ++p) {
    const Word mine = keys[p].next.next();
    const Word theirs = keys[successor(p)].prev.next();
    CHECK(mine == theirs);
  }
  // the three pairwise streams are distinct
  auto fresh = setup_keys(12);
  const Word a = fresh[0].next.next(), b = fresh[1].next.next(), c = fresh[2].next.next();
  CHECK(a != b);
  CHECK(b != c);
  CHECK(a != c);
}

TEST_CASE("consecutive zero draws differ") {
  auto keys = setup_keys(13);
  std::vector<Word> seen;
  for (int i = 0; i < 10000; ++i) seen.push_back(keys[0].zero_bool());
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("desynchronized counters break the zero sharing") {
  auto keys = setup_keys(14);
  keys[1].zero_bool();
  const Word b = keys[0].zero_bool() ^ keys[1].zero_bool() ^ keys[2].zero_bool();
  CHECK(b != 0);
}

TEST_CASE("single party marginal is uniform for a fixed secret") {
  Prg rng(Prg::derive(2, 2));
  for (Mode m : {Mode::Boolean, Mode::Arithmetic}) {
    for (int party = 0; party < kParties; ++party) {
      std::vector<std::uint64_t> lo, hi;
      for (int i = 0; i < 10000; ++i) {
        auto t = share(0x1234, m, rng);
        lo.push_back(t[party].lo);
        hi.push_back(t[party].hi);
      }
      CHECK(test::byte_uniformity_p(lo) > test::kUniformityAlpha);
      CHECK(test::byte_uniformity_p(hi) > test::kUniformityAlpha);
    }
  }
}

TEST_CASE("proactive shares of secret minus constant") {
  Prg rng(Prg::derive(3, 3));
  const Word c30[] = {30};
  auto at30 = proactive_share(30, c30, rng);
  REQUIRE(at30.size() == 1);
  CHECK(reconstruct(at30[0].minus_const) == 0);
  CHECK(reconstruct(at30[0].const_minus) == 0);

  auto at35 = proactive_share(35, c30, rng);
  CHECK(reconstruct(at35[0].minus_const) == 5);
  CHECK(reconstruct(at35[0].const_minus) == static_cast<Word>(-5));

  std::mt19937_64 gen(3);
  for (int i = 0; i < 1000; ++i) {
    const Word a = gen(), c = gen();
    const Word cs[] = {c};
    auto s = proactive_share(a, cs, rng);
    CHECK(reconstruct(s[0].minus_const) == a - c);
    CHECK(reconstruct(s[0].const_minus) == c - a);
  }
}

TEST_CASE("share file round trip and header checks") {
  ShareMatrix m;
  m.party = 2;
  m.mode = Mode::Arithmetic;
  m.rows = 3;
  m.cols = 2;
  for (Word i = 0; i < 6; ++i) {
    m.lo.push_back(i * 11);
    m.hi.push_back(i * 13 + 1);
  }
  std::stringstream ss;
  write_shares(ss, m);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "SRS1");
  CHECK(static_cast<int>(bytes[4]) == 3);
  CHECK(bytes.size() == 4 + 1 + 1 + 8 + 2 + 6 * 16);
  auto back = read_shares(ss);
  CHECK(back.party == 2);
  CHECK(back.mode == Mode::Arithmetic);
  CHECK(back.rows == 3);
  CHECK(back.cols == 2);
  CHECK(back.lo == m.lo);
  CHECK(back.hi == m.hi);
  CHECK(back.at(1, 1).hi == m.hi[3]);

  std::stringstream bad("SRX1xxxxxxxxxx");
  CHECK_THROWS_AS(read_shares(bad), Error);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_shares(truncated), Error);
}
