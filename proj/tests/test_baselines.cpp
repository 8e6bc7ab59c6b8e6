#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "wpcn/baselines.hpp"

using namespace wpcn;

namespace {

ChannelRealization sample_channels(std::uint64_t salt, int k) {
  Substream rng(substream_key(161803, 70, salt));
  const Scenario sc = wpcn_test::random_scenario(rng, k);
  return draw_channels(sc);
}

}  // namespace

TEST_CASE("fixed evaluation validates its inputs") {
  const ChannelRealization ch = sample_channels(1, 2);
  const double p_h = 1.0;
  const StageTwoProblem pb = make_stage_two(ch, uniform_blinding(ch, p_h), p_h);
  const std::vector<double> good_tau{0.3, 0.3}, good_e0{0.2, 0.1};
  REQUIRE_NOTHROW(baselines::evaluate_fixed(pb, good_tau, good_e0));
  REQUIRE_THROWS_AS(
      baselines::evaluate_fixed(pb, std::vector<double>{0.3, -0.1}, good_e0),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      baselines::evaluate_fixed(pb, std::vector<double>{0.6, 0.6}, good_e0),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      baselines::evaluate_fixed(pb, std::vector<double>{0.3}, good_e0),
      std::invalid_argument);
}

TEST_CASE("fixed evaluation reports the allocation it was given") {
  const ChannelRealization ch = sample_channels(2, 3);
  const double p_h = 2.0;
  const StageTwoProblem pb = make_stage_two(ch, uniform_blinding(ch, p_h), p_h);
  const std::vector<double> tau{0.25, 0.25, 0.25}, e0{0.05, 0.1, 0.05};
  const SolveOutput out = baselines::evaluate_fixed(pb, tau, e0);
  REQUIRE(out.alloc.tau[0] == Catch::Approx(0.25));
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    REQUIRE(out.alloc.tau[i + 1] == tau[i]);
    REQUIRE(out.alloc.E0[i] == e0[i]);
    REQUIRE(out.throughput[i] == Catch::Approx(pb.throughput(i, e0, tau)));
    REQUIRE(out.throughput[i] >= 0.0);
    sum += out.throughput[i];
  }
  REQUIRE(out.report.objective == Catch::Approx(sum));
}

TEST_CASE("reference schedules split time evenly") {
  const ChannelRealization ch = sample_channels(3, 4);
  const double p_h = 1.0;
  for (auto kind : {baselines::Kind::UniformTimeWeights, baselines::Kind::UniformTime}) {
    const SolveOutput out = baselines::run(kind, ch, p_h);
    for (std::size_t i = 0; i < out.alloc.tau.size(); ++i)
      REQUIRE(out.alloc.tau[i] == Catch::Approx(0.2));
    for (double e : out.alloc.E0) REQUIRE(e == Catch::Approx(0.05));
    for (double v : out.throughput) REQUIRE(v >= 0.0);
  }
}

TEST_CASE("optimizing the uniform-blinding schedule cannot lose to it") {
  for (std::uint64_t salt : {4ull, 5ull, 6ull}) {
    const ChannelRealization ch = sample_channels(salt, 3);
    const double p_h = salt == 5 ? 0.1 : 1.0;
    const SolveOutput fixed =
        baselines::run(baselines::Kind::UniformTimeWeights, ch, p_h);
    const SolveOutput tuned = baselines::run(baselines::Kind::UniformBlinding, ch, p_h);
    REQUIRE(tuned.report.converged);
    REQUIRE(tuned.report.objective >= fixed.report.objective - 1e-9);
  }
}

TEST_CASE("kind names are stable") {
  REQUIRE(std::string(baselines::kind_name(baselines::Kind::UniformTimeWeights)) == "utw");
  REQUIRE(std::string(baselines::kind_name(baselines::Kind::UniformTime)) == "ut");
  REQUIRE(std::string(baselines::kind_name(baselines::Kind::UniformBlinding)) == "ub");
}
