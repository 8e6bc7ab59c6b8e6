#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "wpcn/scenario.hpp"

using namespace wpcn;

namespace {

Scenario two_node() {
  Scenario sc;
  sc.node_positions = {{2.0, 0.0}, {3.0, 1.0}};
  sc.num_antennas = 4;
  sc.noise_dbm = -100.0;
  sc.path_loss_exponent = 3.0;
  sc.fading = FadingType::Rayleigh;
  sc.seed = 99;
  return sc;
}

}  // namespace

TEST_CASE("dbm conversion") {
  REQUIRE(to_linear(30.0) == Catch::Approx(1.0));
  REQUIRE(to_linear(0.0) == Catch::Approx(1e-3));
  REQUIRE(to_linear(-100.0) == Catch::Approx(1e-13));
}

TEST_CASE("scenario validation rejects bad inputs") {
  Scenario sc = two_node();
  REQUIRE_NOTHROW(sc.validate());
  sc.num_antennas = 0;
  REQUIRE_THROWS_AS(sc.validate(), std::invalid_argument);
  sc = two_node();
  sc.node_positions[0].r = 0.0;
  REQUIRE_THROWS_AS(sc.validate(), std::invalid_argument);
  sc = two_node();
  sc.node_positions.clear();
  REQUIRE_THROWS_AS(sc.validate(), std::invalid_argument);
  sc = two_node();
  sc.fading = FadingType::Rician;
  sc.k_factor = -1.0;
  REQUIRE_THROWS_AS(sc.validate(), std::invalid_argument);
}

TEST_CASE("draw is deterministic and sorted by downlink gain") {
  const Scenario sc = two_node();
  const ChannelRealization a = draw_channels(sc);
  const ChannelRealization b = draw_channels(sc);
  REQUIRE(a.mu == b.mu);
  REQUIRE(a.h == b.h);
  REQUIRE(a.mu.size() == 2);
  REQUIRE(a.mu[0] >= a.mu[1]);
  REQUIRE(a.sigma2 == Catch::Approx(1e-13));
  for (int i = 0; i < 2; ++i) {
    REQUIRE(a.zeta[i] == Catch::Approx(std::norm(a.h[i]) / a.sigma2));
    REQUIRE(a.h_cross[i][i] == std::complex<double>{0.0, 0.0});
  }
}

TEST_CASE("sorting permutes all link tables consistently") {
  Scenario sc = two_node();
  sc.seed = 123;
  const ChannelRealization ch = draw_channels(sc);
  // Re-derive the unsorted values from the physical substreams: mu of the
  // physical node ch.node_ids[s] must equal the sorted mu[s].
  for (int s = 0; s < ch.K(); ++s) {
    const int phys = ch.node_ids[s];
    Substream g(substream_key(sc.seed, 1, static_cast<std::uint64_t>(phys)));
    const double dist = sc.node_positions[phys].r;
    const double amp = std::pow(dist, -sc.path_loss_exponent / 2.0);
    double mu = 0.0;
    for (int a = 0; a < sc.num_antennas; ++a) mu += std::norm(amp * g.next_cn01());
    REQUIRE(mu == Catch::Approx(ch.mu[s]).epsilon(1e-12));
  }
}

TEST_CASE("adding a node leaves existing links untouched") {
  Scenario sc2 = two_node();
  Scenario sc3 = two_node();
  sc3.node_positions.push_back({4.0, 2.0});
  const ChannelRealization a = draw_channels(sc2);
  const ChannelRealization b = draw_channels(sc3);
  // Compare physical-node values regardless of slot order.
  for (int sa = 0; sa < a.K(); ++sa) {
    const int phys = a.node_ids[sa];
    for (int sb = 0; sb < b.K(); ++sb)
      if (b.node_ids[sb] == phys) {
        REQUIRE(a.h[sa] == b.h[sb]);
        REQUIRE(a.mu[sa] == Catch::Approx(b.mu[sb]));
      }
  }
}

TEST_CASE("symmetric cross channels mirror") {
  Scenario sc = two_node();
  sc.node_positions.push_back({4.0, 2.0});
  sc.symmetric_cross = true;
  const ChannelRealization ch = draw_channels(sc);
  for (int i = 0; i < ch.K(); ++i)
    for (int j = 0; j < ch.K(); ++j) REQUIRE(ch.h_cross[i][j] == ch.h_cross[j][i]);
}

TEST_CASE("rician draws concentrate around the mean path") {
  Scenario sc = two_node();
  sc.fading = FadingType::Rician;
  sc.k_factor = 1e9;  // effectively deterministic
  const ChannelRealization ch = draw_channels(sc);
  for (int s = 0; s < ch.K(); ++s) {
    const int phys = ch.node_ids[s];
    const double amp = std::pow(sc.node_positions[phys].r, -sc.path_loss_exponent / 2.0);
    REQUIRE(std::abs(std::abs(ch.h[s]) - amp) < amp * 1e-3);
  }
}

TEST_CASE("scenario and channels JSON round-trips") {
  Scenario sc = two_node();
  sc.fading = FadingType::Rician;
  sc.k_factor = 10.0;
  const nlohmann::json j = scenario_to_json(sc);
  const Scenario back = scenario_from_json(j);
  REQUIRE(back.K() == sc.K());
  REQUIRE(back.num_antennas == sc.num_antennas);
  REQUIRE(back.seed == sc.seed);
  REQUIRE(back.fading == sc.fading);
  REQUIRE(back.k_factor == Catch::Approx(sc.k_factor));
  REQUIRE(back.node_positions[1].r == Catch::Approx(sc.node_positions[1].r));

  const ChannelRealization ch = draw_channels(sc);
  const ChannelRealization ch2 = channels_from_json(channels_to_json(ch));
  REQUIRE(ch2.K() == ch.K());
  REQUIRE(ch2.sigma2 == ch.sigma2);
  for (int i = 0; i < ch.K(); ++i) {
    REQUIRE(ch2.h[i] == ch.h[i]);
    REQUIRE(ch2.mu[i] == Catch::Approx(ch.mu[i]).epsilon(1e-15));
    REQUIRE(ch2.node_ids[i] == ch.node_ids[i]);
    for (int j = 0; j < ch.K(); ++j) REQUIRE(ch2.h_cross[i][j] == ch.h_cross[i][j]);
  }
}
