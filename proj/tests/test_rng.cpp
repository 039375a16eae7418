#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "bimcq/rng.hpp"

using namespace bimcq;

TEST_CASE("same seed gives identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("named substreams are stable and distinct") {
  CHECK(mix_seed(1, "data") == mix_seed(1, "data"));
  CHECK(mix_seed(1, "data") != mix_seed(1, "mcq"));
  CHECK(mix_seed(1, "data") != mix_seed(2, "data"));
  CHECK(mix_seed(1, "sample", 0) != mix_seed(1, "sample", 1));
  CHECK(mix_seed(1, "mcq", 3, 4) != mix_seed(1, "mcq", 4, 3));
}

TEST_CASE("uniform values stay in range") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform_int covers the full range without bias artifacts") {
  Rng rng(9);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[static_cast<std::size_t>(rng.uniform_int(5))];
  for (const int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("sample_indices returns sorted unique subsets") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = rng.sample_indices(10, 4);
    REQUIRE(s.size() == 4);
    const std::set<int> uniq(s.begin(), s.end());
    CHECK(uniq.size() == 4);
    CHECK(std::is_sorted(s.begin(), s.end()));
    for (const int v : s) {
      CHECK(v >= 0);
      CHECK(v < 10);
    }
  }
}

TEST_CASE("state round-trips through a string") {
  Rng a(42);
  for (int i = 0; i < 17; ++i) a.next_u64();
  const std::string state = a.state_string();
  Rng b(0);
  b.restore_state(state);
  for (int i = 0; i < 50; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("normal distribution has plausible moments") {
  Rng rng(5);
  double sum = 0, sq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);
}
