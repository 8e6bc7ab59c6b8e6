#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "wpcn/blinding.hpp"
#include "wpcn/fairness.hpp"
#include "wpcn/oracle.hpp"

using namespace wpcn;

TEST_CASE("golden section finds a quadratic peak") {
  const double x = oracle::golden_section_max(
      [](double t) { return -(t - 2.0) * (t - 2.0); }, 0.0, 5.0);
  REQUIRE(x == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("grid blinding rejects unsupported sizes") {
  const auto ch1 = wpcn_test::make_channels({1.0}, {{0.0}});
  REQUIRE_THROWS_AS(oracle::grid_blind_slot(0, ch1, 1.0, 10), std::invalid_argument);
}

TEST_CASE("grid blinding on two nodes is the single vertex") {
  const auto ch = wpcn_test::make_channels({4.0, 1.0}, {{0.0, 0.5}, {0.25, 0.0}});
  const auto res = oracle::grid_blind_slot(0, ch, 2.0, 50);
  REQUIRE(res.a[0] == 0.0);
  REQUIRE(res.a[1] == Catch::Approx(1.0));
  REQUIRE(res.xi_star == Catch::Approx(0.5 / (1e-3 + 2.0)).epsilon(1e-12));
}

TEST_CASE("ladder finite differences recover known derivatives") {
  auto f = [](std::span<const double> x) { return std::sin(x[0]) + x[1] * x[1]; };
  const std::vector<double> at{0.3, 0.4};
  const std::vector<double> g = oracle::fd_gradient(f, at);
  REQUIRE(g[0] == Catch::Approx(std::cos(0.3)).epsilon(1e-8));
  REQUIRE(g[1] == Catch::Approx(0.8).epsilon(1e-8));
}

TEST_CASE("conditional gradient matches the one-dimensional reference") {
  Substream rng(substream_key(515, 80, 1));
  const Scenario sc = wpcn_test::random_scenario(rng, 1);
  const ChannelRealization ch = draw_channels(sc);
  const double p_h = 1.0;
  const StageTwoProblem pb = make_stage_two(ch, blind_all(ch, p_h), p_h);
  const oracle::SingleResult ref = oracle::best_tau_single(pb);
  const oracle::CgResult cg = oracle::cg_solve(pb, oracle::Objective::Sum, 4000);
  REQUIRE(cg.objective == Catch::Approx(ref.objective).epsilon(1e-4));
  double total = 0.0;
  for (double v : cg.e0) {
    REQUIRE(v >= 0.0);
    total += v;
  }
  for (double v : cg.tau) {
    REQUIRE(v >= 0.0);
    total += v;
  }
  REQUIRE(total <= 1.0 + 1e-9);
}

TEST_CASE("min-objective search is consistent with the sum bound and the solver") {
  // Equal node parameters, but the slot order still breaks symmetry: the
  // second node harvests during the first transmission and not vice versa.
  const auto ch = wpcn_test::make_channels({2.0, 2.0}, {{0.0, 0.3}, {0.3, 0.0}});
  const double p_h = 1.0;
  const StageTwoProblem pb = make_stage_two(ch, blind_all(ch, p_h), p_h);
  const oracle::CgResult sum = oracle::cg_solve(pb, oracle::Objective::Sum, 8000);
  const oracle::CgResult mn = oracle::cg_solve(pb, oracle::Objective::Min, 20000);
  REQUIRE(mn.objective <= sum.objective / 2.0 + 1e-6);
  const SolveOutput mm = fairness::mmf_optimize(pb);
  REQUIRE(mm.report.objective == Catch::Approx(mn.objective).epsilon(2e-3));
}

TEST_CASE("log objective stays finite on the way to the optimum") {
  Substream rng(substream_key(515, 80, 2));
  const Scenario sc = wpcn_test::random_scenario(rng, 2);
  const ChannelRealization ch = draw_channels(sc);
  const double p_h = 1.0;
  const StageTwoProblem pb = make_stage_two(ch, blind_all(ch, p_h), p_h);
  const oracle::CgResult lg = oracle::cg_solve(pb, oracle::Objective::LogSum, 4000);
  REQUIRE(std::isfinite(lg.objective));
  REQUIRE(lg.iters > 0);
}
