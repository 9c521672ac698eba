#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "curator/semantic_distance.hpp"
#include "support/test_util.hpp"

using namespace curator;

namespace {

CountTable basic_table() {
  CountTable t;
  t.set_total(1000000000ULL);
  t.set_single("x", 1000);
  t.set_single("y", 2000);
  t.set_pair("x", "y", 500);
  return t;
}

}  // namespace

TEST_CASE("identical counts give zero distance") {
  CountTable t;
  t.set_total(1000);
  t.set_single("a", 17);
  t.set_single("b", 17);
  t.set_pair("a", "b", 17);
  CHECK(ngd(t, "a", "b") == doctest::Approx(0.0));
}

TEST_CASE("hand-evaluated fixture: counts 1000/2000/500 at N=1e9") {
  // max(log f) = log 2000, joint = log 500, denominator log 1e9 - log 1000.
  const double expected =
      (std::log(2000.0) - std::log(500.0)) / (std::log(1e9) - std::log(1000.0));
  CHECK(expected == doctest::Approx(0.1003).epsilon(1e-3));
  CHECK(ngd(basic_table(), "x", "y") == doctest::Approx(expected).epsilon(1e-12));
  CHECK(ngd(basic_table(), "x", "y") == doctest::Approx(0.1003).epsilon(1e-3));
}

TEST_CASE("missing pair count is a lookup error") {
  CountTable t;
  t.set_total(1000);
  t.set_single("a", 10);
  t.set_single("b", 10);
  try {
    ngd(t, "a", "b");
    FAIL("expected lookup error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Lookup);
  }
}

TEST_CASE("total not exceeding a single count is a domain error") {
  CountTable t;
  t.set_total(100);
  t.set_single("a", 100);
  t.set_single("b", 50);
  t.set_pair("a", "b", 10);
  try {
    ngd(t, "a", "b");
    FAIL("expected domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("symmetry and pair order insensitivity") {
  const CountTable t = basic_table();
  CHECK(ngd(t, "x", "y") == ngd(t, "y", "x"));
}

TEST_CASE("clamped at zero when the joint count exceeds both singles") {
  CountTable t;
  t.set_total(100000);
  t.set_single("a", 10);
  t.set_single("b", 20);
  t.set_pair("a", "b", 500);  // noisy co-occurrence table
  CHECK(ngd(t, "a", "b") == 0.0);
}

TEST_CASE("log-base invariance") {
  // The formula is a ratio of log differences, so any base cancels.
  const CountTable t = basic_table();
  const double fx = 1000, fy = 2000, fxy = 500, n = 1e9;
  const double base2 =
      (std::max(std::log2(fx), std::log2(fy)) - std::log2(fxy)) /
      (std::log2(n) - std::min(std::log2(fx), std::log2(fy)));
  const double base10 =
      (std::max(std::log10(fx), std::log10(fy)) - std::log10(fxy)) /
      (std::log10(n) - std::min(std::log10(fx), std::log10(fy)));
  CHECK(ngd(t, "x", "y") == doctest::Approx(base2).epsilon(1e-12));
  CHECK(ngd(t, "x", "y") == doctest::Approx(base10).epsilon(1e-12));
}

TEST_CASE("zero at identity when the self-pair is recorded") {
  CountTable t;
  t.set_total(5000);
  t.set_single("dog", 120);
  t.set_pair("dog", "dog", 120);
  CHECK(ngd(t, "dog", "dog") == 0.0);
}

namespace {

// Build a table that reproduces target distances by inverting the formula
// with equal single counts: f(pair) = F * (N/F)^(-distance).
CountTable inverted_table(const std::vector<std::pair<std::string, double>>& targets,
                          const std::string& center) {
  const double total = 1e9;
  const double single = 1e6;
  CountTable t;
  t.set_total(static_cast<std::uint64_t>(total));
  t.set_single(center, static_cast<std::uint64_t>(single));
  for (const auto& [phrase, distance] : targets) {
    t.set_single(phrase, static_cast<std::uint64_t>(single));
    const double joint = single * std::exp(-distance * std::log(total / single));
    t.set_pair(phrase, center, static_cast<std::uint64_t>(std::llround(joint)));
  }
  return t;
}

}  // namespace

TEST_CASE("reported distance fixture reproduced by an inverted count table") {
  const std::vector<std::pair<std::string, double>> reported{
      {"yawning dog", 0.388}, {"Eskimo dog", 0.286}, {"police dog", 0.372},
      {"down dog", 0.703},    {"hot dog", 0.213},
  };
  const CountTable t = inverted_table(reported, "dog");
  for (const auto& [phrase, distance] : reported)
    CHECK(ngd(t, phrase, "dog") == doctest::Approx(distance).epsilon(5e-4));
}

TEST_CASE("semantic_graph scores candidates and flags missing counts") {
  const std::vector<std::pair<std::string, double>> reported{{"police dog", 0.372},
                                                             {"hot dog", 0.213}};
  const CountTable t = inverted_table(reported, "dog");

  std::vector<CandidateQuery> cands(3);
  cands[0].phrase = "police dog";
  cands[1].phrase = "hot dog";
  cands[2].phrase = "martian dog";  // no counts anywhere
  semantic_graph(t, "dog", cands);

  REQUIRE(cands[0].semantic_distance);
  REQUIRE(cands[1].semantic_distance);
  CHECK(*cands[0].semantic_distance == doctest::Approx(0.372).epsilon(5e-4));
  CHECK(*cands[1].semantic_distance == doctest::Approx(0.213).epsilon(5e-4));
  CHECK(!cands[2].semantic_distance);
  CHECK(cands[2].note.find("no-count") != std::string::npos);
}

TEST_CASE("empty candidate list stays empty") {
  std::vector<CandidateQuery> cands;
  semantic_graph(basic_table(), "dog", cands);
  CHECK(cands.empty());
}

TEST_CASE("count table JSON round-trips with order-insensitive pairs") {
  CountTable t;
  t.set_total(12345);
  t.set_single("alpha", 10);
  t.set_single("beta", 20);
  t.set_pair("beta", "alpha", 5);
  const auto dir = testutil::temp_dir("ngd_roundtrip");
  t.save(dir / "table.json");
  const CountTable back = CountTable::load(dir / "table.json");
  CHECK(back.total() == 12345);
  CHECK(back.single("beta") == 20);
  CHECK(back.pair("alpha", "beta") == 5);
  CHECK(back.pair("beta", "alpha") == 5);
}
