#pragma once

// Shared helpers for the test binaries.

#include <cmath>
#include <complex>
#include <vector>

#include "wpcn/rng.hpp"
#include "wpcn/scenario.hpp"
#include "wpcn/secrecy_core.hpp"

namespace wpcn_test {

// Hand-built realization; mu must already be sorted descending.
inline wpcn::ChannelRealization make_channels(std::vector<double> mu,
                                              std::vector<std::vector<double>> cross_gain,
                                              double sigma2 = 1e-3) {
  const int k = static_cast<int>(mu.size());
  wpcn::ChannelRealization ch;
  ch.sigma2 = sigma2;
  ch.g.resize(k);
  for (int i = 0; i < k; ++i) ch.g[i] = {std::complex<double>{std::sqrt(mu[i]), 0.0}};
  ch.h.assign(k, std::complex<double>{1.0, 0.0});
  ch.eta.assign(k, 1.0);
  ch.node_ids.resize(k);
  for (int i = 0; i < k; ++i) ch.node_ids[i] = i;
  ch.h_cross.assign(k, std::vector<std::complex<double>>(k, {0.0, 0.0}));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) ch.h_cross[i][j] = std::sqrt(cross_gain[i][j]);
  ch.finalize_derived();
  return ch;
}

// Random physical deployment with k nodes at 1.5..5.5 m.
inline wpcn::Scenario random_scenario(wpcn::Substream& rng, int k) {
  wpcn::Scenario sc;
  for (int i = 0; i < k; ++i)
    sc.node_positions.push_back({rng.next_range(1.5, 5.5), rng.next_range(0.0, 6.28)});
  const int ants[] = {4, 16, 50};
  sc.num_antennas = ants[rng.next_u64() % 3];
  sc.noise_dbm = -100.0;
  sc.path_loss_exponent = 3.0;
  sc.fading = rng.next_u64() % 2 == 0 ? wpcn::FadingType::Rayleigh : wpcn::FadingType::Rician;
  sc.k_factor = 10.0;
  sc.seed = rng.next_u64();
  return sc;
}

inline double random_power(wpcn::Substream& rng) {
  const double choices[] = {1e-3, 0.1, 1.0, 10.0};
  return choices[rng.next_u64() % 4];
}

// Strictly interior slot vector with total in [0.3, 0.85].
inline std::vector<double> random_interior_tau(wpcn::Substream& rng, int k) {
  std::vector<double> tau(k);
  double tot = 0.0;
  for (double& t : tau) {
    t = rng.next_range(0.2, 1.0);
    tot += t;
  }
  const double budget = rng.next_range(0.3, 0.85);
  for (double& t : tau) t *= budget / tot;
  return tau;
}

}  // namespace wpcn_test
