#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wpcn/scenario.hpp"
#include "wpcn/secrecy_core.hpp"

namespace wpcn {

// Beamforming weight rows for slots 1..K. Row i holds the weights used while
// node i transmits; active_sets lists the jammed nodes per row.
struct BlindingMatrix {
  std::vector<std::vector<double>> A;    // K x K, zero diagonal, rows sum to 1
  std::vector<double> xi_star;           // worst-case eavesdropper slope per row
  std::vector<std::vector<int>> active_sets;
  std::vector<int> iterations;           // removal rounds per row
};

struct BlindingRow {
  std::vector<double> a;
  double xi_star = 0.0;
  std::vector<int> active_set;
  int removal_rounds = 0;
};

// Equalize the eavesdropper slopes over the active set in closed form; drop
// the first negative weight and restart until all weights are nonnegative.
inline BlindingRow blind_slot(int i, const ChannelRealization& ch, double p_h) {
  const int k = ch.K();
  if (k < 2) throw std::invalid_argument("blind_slot: needs at least one eavesdropper (K >= 2)");
  if (!(p_h > 0.0)) throw std::invalid_argument("blind_slot: p_h must be positive");
  const double sigma2 = ch.sigma2;

  std::vector<int> B;
  B.reserve(k - 1);
  for (int j = 0; j < k; ++j)
    if (j != i) B.push_back(j);

  BlindingRow row;
  row.a.assign(k, 0.0);

  std::vector<double> h2(k, 0.0);  // |h_{i,j}|^2
  for (int j = 0; j < k; ++j)
    if (j != i) h2[j] = std::norm(ch.h_cross[i][j]);

  for (;;) {
    // Closed form on the current set: a_j = (|h_ij|^2 (P_H + sigma2 S1) - sigma2 S2)
    //                                       / (mu_j P_H S2)
    // with S1 = sum 1/mu_l, S2 = sum |h_il|^2/mu_l over the set.
    double s1 = 0.0, s2 = 0.0;
    for (int l : B) {
      s1 += 1.0 / ch.mu[l];
      s2 += h2[l] / ch.mu[l];
    }
    for (int j = 0; j < k; ++j) row.a[j] = 0.0;
    int removed = -1;
    for (int j : B) {
      const double a = (h2[j] * (p_h + sigma2 * s1) - sigma2 * s2) / (ch.mu[j] * p_h * s2);
      if (a < -1e-14) {
        removed = j;
        break;
      }
      row.a[j] = a < 0.0 ? 0.0 : a;
    }
    if (removed < 0) {
      row.xi_star = s2 / (p_h + sigma2 * s1);
      row.active_set = B;
      return row;
    }
    ++row.removal_rounds;
    std::erase(B, removed);
    if (B.empty()) throw std::logic_error("blind_slot: emptied the active set");
  }
}

inline BlindingMatrix blind_all(const ChannelRealization& ch, double p_h) {
  const int k = ch.K();
  BlindingMatrix bm;
  bm.A.assign(k, std::vector<double>(k, 0.0));
  bm.xi_star.assign(k, 0.0);
  bm.active_sets.resize(k);
  bm.iterations.assign(k, 0);
  if (k == 1) return bm;  // no eavesdroppers; the row is unused
  for (int i = 0; i < k; ++i) {
    BlindingRow row = blind_slot(i, ch, p_h);
    bm.A[i] = std::move(row.a);
    bm.xi_star[i] = row.xi_star;
    bm.active_sets[i] = std::move(row.active_set);
    bm.iterations[i] = row.removal_rounds;
  }
  return bm;
}

// Uniform rows a_{i,j} = 1/K (diagonal included); the worst-case slope is then
// evaluated, not optimized.
inline BlindingMatrix uniform_blinding(const ChannelRealization& ch, double p_h) {
  const int k = ch.K();
  BlindingMatrix bm;
  bm.A.assign(k, std::vector<double>(k, 1.0 / k));
  bm.xi_star.assign(k, 0.0);
  bm.active_sets.resize(k);
  bm.iterations.assign(k, 0);
  for (int i = 0; i < k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      worst = std::max(worst, std::norm(ch.h_cross[i][j]) /
                                  (ch.sigma2 + ch.mu[j] * (1.0 / k) * p_h));
      bm.active_sets[i].push_back(j);
    }
    bm.xi_star[i] = worst;
  }
  return bm;
}

// Assemble the allocation-stage data: slopes after blinding plus the harvest
// coupling a_{j,i} for j < i. K = 1 uses xi = 0 (no eavesdroppers).
inline StageTwoProblem make_stage_two(const ChannelRealization& ch, const BlindingMatrix& bm,
                                      double p_h) {
  const int k = ch.K();
  StageTwoProblem pb;
  pb.p_h = p_h;
  pb.nodes.resize(k);
  pb.active.assign(k, 0);
  for (int i = 0; i < k; ++i) {
    NodeParams& n = pb.nodes[i];
    n.zeta = ch.zeta[i];
    n.xi = k == 1 ? 0.0 : bm.xi_star[i];
    n.mu = ch.mu[i];
    n.eta = ch.eta[i];
    n.harvest_coeffs.resize(i);
    for (int j = 0; j < i; ++j) n.harvest_coeffs[j] = bm.A[j][i];
    pb.active[i] = n.zeta > n.xi ? 1 : 0;
  }
  return pb;
}

inline nlohmann::json blinding_to_json(const BlindingMatrix& bm) {
  nlohmann::json j;
  j["A"] = bm.A;
  j["xi_star"] = bm.xi_star;
  j["active_sets"] = bm.active_sets;
  j["iterations"] = bm.iterations;
  return j;
}

}  // namespace wpcn
