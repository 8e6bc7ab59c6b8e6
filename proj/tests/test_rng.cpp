#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "wpcn/rng.hpp"

using namespace wpcn;

TEST_CASE("substreams are deterministic and order-free") {
  Substream a(substream_key(42, 1, 3, 5));
  Substream b(substream_key(42, 1, 3, 5));
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  // Draining one stream never perturbs another.
  Substream c(substream_key(42, 1, 3, 6));
  Substream d(substream_key(42, 1, 3, 5));
  (void)c.next_u64();
  Substream e(substream_key(42, 1, 3, 5));
  for (int i = 0; i < 10; ++i) REQUIRE(d.next_u64() == e.next_u64());
}

TEST_CASE("distinct keys give distinct streams") {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t seed : {1ull, 2ull})
    for (std::uint64_t kind : {1ull, 2ull, 3ull})
      for (std::uint64_t i = 0; i < 4; ++i)
        for (std::uint64_t j = 0; j < 4; ++j)
          firsts.insert(Substream(substream_key(seed, kind, i, j)).next_u64());
  REQUIRE(firsts.size() == 2u * 3u * 4u * 4u);
}

TEST_CASE("unit draws stay in [0,1) and ranges in bounds") {
  Substream s(substream_key(7, 9));
  for (int i = 0; i < 10000; ++i) {
    const double u = s.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double r = s.next_range(2.0, 5.0);
    REQUIRE(r > 2.0);
    REQUIRE(r <= 5.0);
  }
}

TEST_CASE("normal draws have sane moments") {
  Substream s(substream_key(11, 9));
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = s.next_normal();
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("complex normal has unit total variance") {
  Substream s(substream_key(13, 9));
  const int n = 100000;
  double p = 0.0;
  for (int i = 0; i < n; ++i) p += std::norm(s.next_cn01());
  REQUIRE(std::abs(p / n - 1.0) < 0.02);
}
