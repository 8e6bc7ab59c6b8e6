#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "wpcn/rng.hpp"

namespace wpcn {

// Slot durations below this are treated as the tau -> 0 limit.
inline constexpr double kTauEps = 1e-12;

// Per-node constants of the allocation stage. harvest_coeffs[j] is the weight
// this node receives while node j transmits (prior slots only, size = position
// of the node in the sorted order).
struct NodeParams {
  double zeta = 0.0;  // main-channel slope, 1/W
  double xi = 0.0;    // worst eavesdropper slope after blinding, 1/W
  double mu = 0.0;    // downlink power gain
  double eta = 1.0;   // harvest efficiency
  std::vector<double> harvest_coeffs;
};

// Decision variables plus dual certificates. tau has K+1 entries with tau[0]
// the harvest slot; E0, E, lambda, psi have K entries.
struct Allocation {
  std::vector<double> tau;
  std::vector<double> E0;
  std::vector<double> E;
  double nu = 0.0;
  std::vector<double> lambda;
  double phi = 0.0;
  std::vector<double> psi;
};

inline double harvested_energy(const NodeParams& p, double p_h, double e0,
                               std::span<const double> tau_prior) {
  double acc = e0;
  const std::size_t m = std::min(tau_prior.size(), p.harvest_coeffs.size());
  for (std::size_t j = 0; j < m; ++j) acc += tau_prior[j] * p.harvest_coeffs[j];
  return p.mu * p.eta * p_h * acc;
}

// tau * (ln(1 + zeta E/tau) - ln(1 + xi E/tau)), evaluated in the
// cancellation-free form tau * log1p((zeta - xi) r / (1 + xi r)).
inline double secrecy_throughput(double zeta, double xi, double E, double tau) {
  if (tau <= kTauEps || E <= 0.0) return 0.0;
  const double r = E / tau;
  return tau * std::log1p((zeta - xi) * r / (1.0 + xi * r));
}

// Marginal value of harvested energy scaled by the harvest rate:
// mu eta P_H (zeta - xi) / ((1 + zeta r)(1 + xi r)).
inline double b_function(double zeta, double xi, double E, double tau, double mu, double eta,
                         double p_h) {
  if (!(tau > 0.0)) throw std::invalid_argument("b_function: tau must be positive");
  const double r = E / tau;
  return mu * eta * p_h * (zeta - xi) / ((1.0 + zeta * r) * (1.0 + xi * r));
}

// d/dtau of the throughput at fixed E.
inline double d_tau_partial(double zeta, double xi, double E, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("d_tau_partial: tau must be positive");
  const double r = E / tau;
  const double dz = 1.0 + zeta * r;
  const double dx = 1.0 + xi * r;
  return std::log1p((zeta - xi) * r / dx) - (zeta - xi) * r / (dz * dx);
}

// d/dE of the throughput; equals b_function / (mu eta P_H) exactly.
inline double d_energy_partial(double zeta, double xi, double E, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("d_energy_partial: tau must be positive");
  const double r = E / tau;
  return (zeta - xi) / ((1.0 + zeta * r) * (1.0 + xi * r));
}

namespace detail {

// tau -> 0 limit of d_tau_partial; used by outer loops that clamp slots to 0.
inline double d_tau_partial_limit(double zeta, double xi, double E, double tau) {
  if (tau > kTauEps) return d_tau_partial(zeta, xi, E, tau);
  if (E <= 0.0) return 0.0;
  if (xi > 0.0) return std::log(zeta / xi);
  return d_tau_partial(zeta, 0.0, E, kTauEps);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Allocation-stage problem data shared by every solver and the oracles.
// ---------------------------------------------------------------------------

struct StageTwoProblem {
  double p_h = 0.0;
  std::vector<NodeParams> nodes;  // sorted order
  std::vector<char> active;       // zeta > xi, funded by the allocators

  int K() const { return static_cast<int>(nodes.size()); }

  double c(int i) const { return nodes[i].mu * nodes[i].eta * p_h; }

  // Weight node i receives during prior slot j (0 for j >= i).
  double coupling(int j, int i) const {
    return j < i ? nodes[i].harvest_coeffs[j] : 0.0;
  }

  double an_harvest(int i, std::span<const double> tau) const {
    double acc = 0.0;
    for (int j = 0; j < i; ++j) acc += tau[j] * nodes[i].harvest_coeffs[j];
    return acc;
  }

  double energy(int i, std::span<const double> e0, std::span<const double> tau) const {
    return c(i) * (e0[i] + an_harvest(i, tau));
  }

  double throughput(int i, std::span<const double> e0, std::span<const double> tau) const {
    if (!active[i]) return 0.0;
    return secrecy_throughput(nodes[i].zeta, nodes[i].xi, energy(i, e0, tau), tau[i]);
  }

  double sum_throughput(std::span<const double> e0, std::span<const double> tau) const {
    double s = 0.0;
    for (int i = 0; i < K(); ++i) s += throughput(i, e0, tau);
    return s;
  }

  double min_throughput(std::span<const double> e0, std::span<const double> tau) const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K(); ++i)
      if (active[i]) m = std::min(m, throughput(i, e0, tau));
    return std::isfinite(m) ? m : 0.0;
  }

  double logsum_throughput(std::span<const double> e0, std::span<const double> tau) const {
    double s = 0.0;
    for (int i = 0; i < K(); ++i)
      if (active[i]) s += std::log(std::max(throughput(i, e0, tau), 1e-300));
    return s;
  }

  int active_count() const {
    int n = 0;
    for (char a : active) n += a != 0;
    return n;
  }
};

// ---------------------------------------------------------------------------
// Concavity probe: second directional differences of the throughput as a
// function of (E0_i, tau_1..tau_i) must be nonpositive when zeta > xi, and the
// curvature lives entirely along beta = (1, a_{1,i}, .., a_{i-1,i}) at fixed
// own slot.
// ---------------------------------------------------------------------------

struct ConcavityReport {
  int samples = 0;
  int violations = 0;        // second difference above tolerance
  int ortho_violations = 0;  // curvature found orthogonal to beta
  double worst_second_diff = -std::numeric_limits<double>::infinity();
  double worst_ortho = 0.0;
  std::vector<double> witness;  // first violating point, empty if none
};

inline ConcavityReport concavity_probe(const NodeParams& p, double p_h, int samples,
                                       Substream& rng, double tol = 1e-7) {
  if (!(p.zeta > p.xi)) throw std::invalid_argument("concavity_probe: requires zeta > xi");
  const int m = static_cast<int>(p.harvest_coeffs.size());  // prior slots
  const int n = m + 2;  // (e0, tau_prior.., tau_own)
  const double cc = p.mu * p.eta * p_h;

  ConcavityReport rep;
  rep.samples = samples;

  std::vector<double> x(n), d(n);
  for (int s = 0; s < samples; ++s) {
    // Interior point: components in [0.05, 1], scaled to a random budget < 1.
    double tot = 0.0;
    for (double& v : x) {
      v = rng.next_range(0.05, 1.0);
      tot += v;
    }
    const double budget = rng.next_range(0.3, 0.95);
    for (double& v : x) v *= budget / tot;

    double nrm = 0.0;
    for (double& v : d) {
      v = rng.next_normal();
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    for (double& v : d) v /= nrm;

    double xmin = x[0];
    for (double v : x) xmin = std::min(xmin, v);
    // Keeps every perturbed coordinate and the collapsed energy positive.
    const double h = std::min(1e-3, 0.25 * xmin / std::sqrt(1.0 + m));

    // Collapse the direction onto (E, tau_own): E is linear in the remaining
    // coordinates, so f(x + s d) = D(E + s dE, tau_own + s dtau).
    double base = x[0];
    double dE = d[0];
    for (int j = 0; j < m; ++j) {
      base += x[1 + j] * p.harvest_coeffs[j];
      dE += d[1 + j] * p.harvest_coeffs[j];
    }
    const double E0w = cc * base, dEw = cc * dE;
    const double tw = x[n - 1], dtw = d[n - 1];
    auto f = [&](double sgn) {
      return secrecy_throughput(p.zeta, p.xi, E0w + sgn * dEw, tw + sgn * dtw);
    };
    const double second = f(h) - 2.0 * f(0.0) + f(-h);
    rep.worst_second_diff = std::max(rep.worst_second_diff, second);
    if (second > tol) {
      ++rep.violations;
      if (rep.witness.empty()) rep.witness = x;
    }

    // Direction orthogonal to beta with tau_own frozen: no curvature allowed.
    if (m >= 1) {
      std::vector<double> beta(m + 1);
      beta[0] = 1.0;
      for (int j = 0; j < m; ++j) beta[1 + j] = p.harvest_coeffs[j];
      std::vector<double> u(m + 1);
      double bb = 0.0, ub = 0.0;
      for (int j = 0; j <= m; ++j) {
        u[j] = rng.next_normal();
        bb += beta[j] * beta[j];
        ub += u[j] * beta[j];
      }
      for (int j = 0; j <= m; ++j) u[j] -= ub / bb * beta[j];
      double un = 0.0;
      for (double v : u) un += v * v;
      if (un > 1e-12) {
        un = std::sqrt(un);
        double dE2 = 0.0;
        for (int j = 0; j <= m; ++j) dE2 += (u[j] / un) * beta[j];
        const double dEw2 = cc * dE2;  // ~0 up to roundoff in the projection
        auto f2 = [&](double sgn) {
          return secrecy_throughput(p.zeta, p.xi, E0w + sgn * dEw2, tw);
        };
        const double second2 = std::abs(f2(h) - 2.0 * f2(0.0) + f2(-h));
        rep.worst_ortho = std::max(rep.worst_ortho, second2);
        if (second2 > tol) {
          ++rep.ortho_violations;
          if (rep.witness.empty()) rep.witness = x;
        }
      }
    }
  }
  return rep;
}

}  // namespace wpcn
