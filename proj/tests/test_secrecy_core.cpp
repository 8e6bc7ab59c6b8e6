#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "wpcn/secrecy_core.hpp"

using namespace wpcn;

TEST_CASE("throughput closed form and edge cases") {
  // tau ln(1 + zeta E / tau) with no eavesdropper: 0.5 ln 7.
  REQUIRE(secrecy_throughput(3.0, 0.0, 1.0, 0.5) ==
          Catch::Approx(0.97295507452765666).epsilon(1e-14));
  // ln((1 + 6) / (1 + 2)) = ln(7/3).
  REQUIRE(secrecy_throughput(3.0, 1.0, 2.0, 1.0) ==
          Catch::Approx(0.84729786038720367).epsilon(1e-14));
  REQUIRE(secrecy_throughput(3.0, 1.0, 0.0, 1.0) == 0.0);
  REQUIRE(secrecy_throughput(3.0, 1.0, -1.0, 1.0) == 0.0);
  REQUIRE(secrecy_throughput(3.0, 1.0, 1.0, 0.0) == 0.0);
}

TEST_CASE("huge slopes stay finite") {
  const double d = secrecy_throughput(1e12, 1e5, 1e-4, 0.2);
  REQUIRE(std::isfinite(d));
  REQUIRE(d > 0.0);
  // Equivalent two-log evaluation for cross-checking at moderate scales.
  const double zeta = 1e6, xi = 300.0, E = 1e-3, tau = 0.4;
  const double ref = tau * (std::log(1.0 + zeta * E / tau) - std::log(1.0 + xi * E / tau));
  REQUIRE(secrecy_throughput(zeta, xi, E, tau) == Catch::Approx(ref).epsilon(1e-12));
}

TEST_CASE("harvested energy accumulates prior slots") {
  NodeParams p;
  p.mu = 2.0;
  p.eta = 1.0;
  p.harvest_coeffs = {0.5};
  const std::vector<double> prior{0.2};
  REQUIRE(harvested_energy(p, 1.0, 0.1, prior) == Catch::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("marginal-value identity") {
  // 2 (3 - 1) / ((1 + 6)(1 + 2)) = 4/21.
  REQUIRE(b_function(3.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0) ==
          Catch::Approx(4.0 / 21.0).epsilon(1e-14));
  const double zeta = 1e9, xi = 40.0, E = 1e-4, tau = 0.3;
  const double c = 2.5 * 0.8 * 7.0;
  REQUIRE(b_function(zeta, xi, E, tau, 2.5, 0.8, 7.0) ==
          Catch::Approx(c * d_energy_partial(zeta, xi, E, tau)).epsilon(1e-14));
  REQUIRE_THROWS_AS(b_function(3.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("slot partial matches finite differences") {
  const double zeta = 3.0, xi = 1.0, E = 2.0;
  for (double tau : {0.2, 0.7, 0.95}) {
    const double h = 1e-6 * tau;
    const double fd = (secrecy_throughput(zeta, xi, E, tau + h) -
                       secrecy_throughput(zeta, xi, E, tau - h)) /
                      (2.0 * h);
    REQUIRE(d_tau_partial(zeta, xi, E, tau) == Catch::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("energy partial matches finite differences") {
  const double zeta = 50.0, xi = 4.0, tau = 0.6;
  for (double E : {1e-3, 0.1, 2.0}) {
    const double h = 1e-6 * E;
    const double fd = (secrecy_throughput(zeta, xi, E + h, tau) -
                       secrecy_throughput(zeta, xi, E - h, tau)) /
                      (2.0 * h);
    REQUIRE(d_energy_partial(zeta, xi, E, tau) == Catch::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("slot partial limit at a vanishing slot") {
  REQUIRE(detail::d_tau_partial_limit(5.0, 2.0, 1.0, 0.0) ==
          Catch::Approx(std::log(2.5)).epsilon(1e-12));
  REQUIRE(detail::d_tau_partial_limit(5.0, 2.0, 1.0, 1e-13) ==
          Catch::Approx(std::log(2.5)).epsilon(1e-12));
  REQUIRE(detail::d_tau_partial_limit(5.0, 2.0, 0.0, 0.0) == 0.0);
  // Continuity: the true partial approaches the limit for small tau.
  REQUIRE(d_tau_partial(5.0, 2.0, 1.0, 1e-9) ==
          Catch::Approx(std::log(2.5)).epsilon(1e-6));
}

namespace {

StageTwoProblem toy_problem() {
  StageTwoProblem pb;
  pb.p_h = 2.0;
  NodeParams a;
  a.zeta = 1e3;
  a.xi = 10.0;
  a.mu = 2.0;
  a.eta = 1.0;
  NodeParams b;
  b.zeta = 500.0;
  b.xi = 5.0;
  b.mu = 1.0;
  b.eta = 0.8;
  b.harvest_coeffs = {0.3};
  pb.nodes = {a, b};
  pb.active = {1, 1};
  return pb;
}

}  // namespace

TEST_CASE("allocation-stage bookkeeping") {
  const StageTwoProblem pb = toy_problem();
  const std::vector<double> e0{0.1, 0.2};
  const std::vector<double> tau{0.3, 0.2};
  REQUIRE(pb.c(0) == Catch::Approx(4.0));
  REQUIRE(pb.c(1) == Catch::Approx(1.6));
  REQUIRE(pb.coupling(0, 1) == Catch::Approx(0.3));
  REQUIRE(pb.coupling(1, 0) == 0.0);
  REQUIRE(pb.energy(0, e0, tau) == Catch::Approx(0.4).epsilon(1e-15));
  REQUIRE(pb.energy(1, e0, tau) == Catch::Approx(1.6 * (0.2 + 0.3 * 0.3)).epsilon(1e-15));
  const double d0 = secrecy_throughput(1e3, 10.0, 0.4, 0.3);
  const double d1 = secrecy_throughput(500.0, 5.0, 0.464, 0.2);
  REQUIRE(pb.throughput(0, e0, tau) == Catch::Approx(d0));
  REQUIRE(pb.sum_throughput(e0, tau) == Catch::Approx(d0 + d1));
  REQUIRE(pb.min_throughput(e0, tau) == Catch::Approx(std::min(d0, d1)));
  REQUIRE(pb.logsum_throughput(e0, tau) == Catch::Approx(std::log(d0) + std::log(d1)));
  REQUIRE(pb.active_count() == 2);
}

TEST_CASE("inactive nodes contribute nothing") {
  StageTwoProblem pb = toy_problem();
  pb.active = {1, 0};
  const std::vector<double> e0{0.1, 0.2};
  const std::vector<double> tau{0.3, 0.2};
  REQUIRE(pb.throughput(1, e0, tau) == 0.0);
  REQUIRE(pb.sum_throughput(e0, tau) == Catch::Approx(pb.throughput(0, e0, tau)));
  REQUIRE(pb.min_throughput(e0, tau) == Catch::Approx(pb.throughput(0, e0, tau)));
}

TEST_CASE("no positive curvature along feasible directions") {
  NodeParams p;
  p.zeta = 1e3;
  p.xi = 7.0;
  p.mu = 1.5;
  p.eta = 0.9;
  p.harvest_coeffs = {0.2, 0.4};
  Substream rng(substream_key(2024, 77));
  const ConcavityReport rep = concavity_probe(p, 3.0, 500, rng);
  REQUIRE(rep.violations == 0);
  REQUIRE(rep.ortho_violations == 0);
}
