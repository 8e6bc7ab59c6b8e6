#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpcn/sstm.hpp"

namespace wpcn {

struct FairnessInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MmfState {
  double phi = 0.0;
  std::vector<int> b_phi;      // nodes whose throughput binds at phi
  std::vector<double> lambda;  // sums to 1 over b_phi, 0 elsewhere
  double nu = 0.0;
};

struct PlfState {
  std::vector<double> psi;     // per-node throughput at the solution
  std::vector<double> lambda;  // 1 / psi_i for active nodes
  double nu = 0.0;
};

struct MmfInner {
  std::vector<double> e0, E;
  MmfState state;
  double er = 0.0;
};

struct PlfInner {
  std::vector<double> e0, E;
  PlfState state;
  double er = 0.0;
};

namespace fairness {

namespace fdetail {

inline void require_positive_slots(const StageTwoProblem& pb, std::span<const double> tau,
                                   const char* who) {
  if (pb.active_count() == 0)
    throw FairnessInfeasible(std::string(who) + ": every node is inactive (zeta <= xi)");
  for (int i = 0; i < pb.K(); ++i)
    if (pb.active[i] && tau[i] <= kTauEps)
      throw FairnessInfeasible(std::string(who) + ": active node " + std::to_string(i + 1) +
                               " has a zero slot");
}

}  // namespace fdetail

// Bisection on the common throughput floor phi. Per phi the energy each node
// needs is closed-form; nodes whose AN harvest already covers it leave the
// binding set with E0 = 0. The budget residual Er(phi) is nondecreasing.
inline MmfInner mmf_inner(std::span<const double> tau, const StageTwoProblem& pb,
                          const SolverConfig& cfg, double warm_lo = -1.0,
                          double warm_hi = -1.0) {
  const int k = pb.K();
  fdetail::require_positive_slots(pb, tau, "mmf_inner");

  double tau_sum = 0.0;
  for (double t : tau) tau_sum += t;
  if (tau_sum > 1.0 + 1e-12) throw std::invalid_argument("mmf_inner: sum tau exceeds 1");

  std::vector<double> an(k);
  for (int i = 0; i < k; ++i) an[i] = pb.an_harvest(i, tau);

  double phi_max = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i)
    if (pb.active[i] && pb.nodes[i].xi > 0.0)
      phi_max = std::min(phi_max, tau[i] * std::log(pb.nodes[i].zeta / pb.nodes[i].xi));
  if (phi_max <= 0.0) {
    for (int i = 0; i < k; ++i)
      if (pb.active[i] && pb.nodes[i].xi > 0.0 &&
          tau[i] * std::log(pb.nodes[i].zeta / pb.nodes[i].xi) <= 0.0)
        throw FairnessInfeasible("mmf_inner: node " + std::to_string(i + 1) +
                                 " caps the floor at zero");
  }

  // Needed energy for throughput phi; the binding set falls out of the clamp
  // (each node's requirement depends only on its own slot, so the textbook
  // remove-and-restart loop reduces to one pass).
  auto eval = [&](double phi, std::vector<double>& e0, std::vector<int>& b) {
    double er = tau_sum - 1.0;
    b.clear();
    for (int i = 0; i < k; ++i) {
      e0[i] = 0.0;
      if (!pb.active[i]) continue;
      const double x = phi / tau[i];
      const double den = pb.nodes[i].zeta - pb.nodes[i].xi * std::exp(x);
      const double need =
          den > 0.0 ? tau[i] * std::expm1(x) / den : std::numeric_limits<double>::infinity();
      const double e = need / pb.c(i) - an[i];
      if (e > 0.0) {
        e0[i] = e;
        er += e;
        b.push_back(i);
      }
    }
    return er;
  };

  double cap;
  std::vector<double> e0(k);
  std::vector<int> b;
  if (std::isfinite(phi_max)) {
    cap = phi_max * (1.0 - 1e-9);
  } else {
    cap = 1.0;
    while (eval(cap, e0, b) < 0.0 && cap < 1e9) cap *= 2.0;
  }

  double lo = 0.0, hi = cap;
  if (warm_lo >= 0.0 && warm_hi > warm_lo && warm_hi <= cap && eval(warm_lo, e0, b) <= 0.0 &&
      eval(warm_hi, e0, b) >= 0.0) {
    lo = warm_lo;
    hi = warm_hi;
  }

  double best_phi = hi, best_er = eval(hi, e0, b);
  // Budget slack even at the cap: the cap is the answer, skip the bisection.
  const int max_bisect = best_er < 0.0 ? 0 : 300;
  for (int it = 0; it < max_bisect && std::abs(best_er) > cfg.bisection_eps; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double er = eval(mid, e0, b);
    if (std::abs(er) < std::abs(best_er)) {
      best_er = er;
      best_phi = mid;
    }
    if (er < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::max(hi * 1e-16, 1e-300)) break;
  }

  MmfInner sol;
  sol.e0.assign(k, 0.0);
  sol.E.assign(k, 0.0);
  sol.er = eval(best_phi, sol.e0, b);
  sol.state.phi = best_phi;
  sol.state.b_phi = b;
  sol.state.lambda.assign(k, 0.0);
  for (int i = 0; i < k; ++i) sol.E[i] = pb.c(i) * (sol.e0[i] + an[i]);
  double inv_sum = 0.0;
  for (int i : b)
    inv_sum += 1.0 / b_function(pb.nodes[i].zeta, pb.nodes[i].xi, sol.E[i], tau[i],
                                pb.nodes[i].mu, pb.nodes[i].eta, pb.p_h);
  if (inv_sum > 0.0) {
    sol.state.nu = 1.0 / inv_sum;
    for (int i : b)
      sol.state.lambda[i] = sol.state.nu / b_function(pb.nodes[i].zeta, pb.nodes[i].xi, sol.E[i],
                                                      tau[i], pb.nodes[i].mu, pb.nodes[i].eta,
                                                      pb.p_h);
  }
  return sol;
}

// Root of D_i(E/tau) - B_i(E/tau)/nu in E: increasing, negative at 0. The
// bracket hint speeds up repeated solves along a nu bisection.
inline double plf_root(double nu, double tau_i, const NodeParams& p, double p_h,
                       double hint = -1.0) {
  if (!(nu > 0.0) || !(tau_i > 0.0) || !(p.zeta > p.xi))
    throw std::invalid_argument("plf_root: needs nu > 0, tau > 0, zeta > xi");
  auto f = [&](double E) {
    return secrecy_throughput(p.zeta, p.xi, E, tau_i) -
           b_function(p.zeta, p.xi, E, tau_i, p.mu, p.eta, p_h) / nu;
  };

  double lo = 0.0, hi = 0.0, flo = 0.0, fhi = 0.0;
  bool bracketed = false;
  if (hint > 0.0) {
    const double l = hint / 8.0, h = hint * 8.0;
    const double fl = f(l), fh = f(h);
    if (fl < 0.0 && fh > 0.0) {
      lo = l;
      flo = fl;
      hi = h;
      fhi = fh;
      bracketed = true;
    }
  }
  if (!bracketed) {
    flo = f(lo);
    hi = std::max(1e-18, tau_i / p.zeta);
    fhi = f(hi);
    while (fhi <= 0.0) {
      lo = hi;
      flo = fhi;
      hi *= 2.0;
      if (hi > 1e290) return hi;  // numerically unreachable root; caller's Er explodes
      fhi = f(hi);
    }
  }

  // Plain bisection: |f(lo)| can dwarf |f(hi)| by many orders of magnitude,
  // which freezes secant-style updates at an endpoint. The bracket is at most
  // 64x wide, so halving reaches full double precision in ~60 steps.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (fm > 0.0)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= hi * 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

// Bisection on nu; per nu each node's energy solves D = B/nu, clamped to the
// AN harvest. Er(nu) is decreasing: Er < 0 lowers nu_max.
inline PlfInner plf_inner(std::span<const double> tau, const StageTwoProblem& pb,
                          const SolverConfig& cfg, double warm_lo = -1.0,
                          double warm_hi = -1.0) {
  const int k = pb.K();
  fdetail::require_positive_slots(pb, tau, "plf_inner");

  double tau_sum = 0.0;
  for (double t : tau) tau_sum += t;
  if (tau_sum > 1.0 + 1e-12) throw std::invalid_argument("plf_inner: sum tau exceeds 1");

  std::vector<double> an(k);
  for (int i = 0; i < k; ++i) an[i] = pb.an_harvest(i, tau);

  double b0max = 0.0;
  for (int i = 0; i < k; ++i)
    if (pb.active[i]) b0max = std::max(b0max, pb.c(i) * (pb.nodes[i].zeta - pb.nodes[i].xi));

  std::vector<double> roots(k, -1.0);
  auto eval = [&](double nu, std::vector<double>& e0) {
    double er = tau_sum - 1.0;
    for (int i = 0; i < k; ++i) {
      e0[i] = 0.0;
      if (!pb.active[i]) continue;
      roots[i] = plf_root(nu, tau[i], pb.nodes[i], pb.p_h, roots[i]);
      const double e = roots[i] / pb.c(i) - an[i];
      if (e > 0.0) {
        e0[i] = e;
        er += e;
      }
    }
    return er;
  };

  std::vector<double> e0(k);
  double lo = 1e-12 * b0max, hi = b0max;
  if (warm_lo > 0.0 && warm_hi > warm_lo && eval(warm_lo, e0) >= 0.0 && eval(warm_hi, e0) <= 0.0) {
    lo = warm_lo;
    hi = warm_hi;
  } else {
    // The nominal bracket can sit entirely on one side of the root for strong
    // channels; extend geometrically until it straddles.
    while (eval(lo, e0) <= 0.0 && lo > 1e-290) lo *= 0.5;
    while (eval(hi, e0) >= 0.0 && hi < 1e290) hi *= 2.0;
  }

  double best_nu = hi, best_er = eval(hi, e0);
  for (int it = 0; it < 300 && std::abs(best_er) > cfg.bisection_eps; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double er = eval(mid, e0);
    if (std::abs(er) < std::abs(best_er)) {
      best_er = er;
      best_nu = mid;
    }
    if (er < 0.0)
      hi = mid;
    else
      lo = mid;
  }

  PlfInner sol;
  sol.e0.assign(k, 0.0);
  sol.E.assign(k, 0.0);
  sol.er = eval(best_nu, sol.e0);
  sol.state.nu = best_nu;
  sol.state.psi.assign(k, 0.0);
  sol.state.lambda.assign(k, 0.0);
  for (int i = 0; i < k; ++i) {
    sol.E[i] = pb.c(i) * (sol.e0[i] + an[i]);
    if (!pb.active[i]) continue;
    const double d = secrecy_throughput(pb.nodes[i].zeta, pb.nodes[i].xi, sol.E[i], tau[i]);
    sol.state.psi[i] = d;
    if (d > 0.0) sol.state.lambda[i] = 1.0 / d;
  }
  return sol;
}

inline SolveOutput mmf_optimize(const StageTwoProblem& pb, const SolverConfig& cfg = {}) {
  const int k = pb.K();
  if (pb.active_count() == 0)
    throw FairnessInfeasible("mmf_optimize: every node is inactive (zeta <= xi)");

  struct Extra {
    MmfState state;
  };
  Extra last;

  auto inner = [&](const std::vector<double>& tau,
                   const detail::OuterPoint* prev) -> std::optional<detail::OuterPoint> {
    try {
      double wl = -1.0, wh = -1.0;
      if (prev) {
        wl = std::max(0.0, prev->merit * 0.25);
        wh = prev->merit * 4.0 + 1e-6;
      }
      MmfInner in = mmf_inner(tau, pb, cfg, wl, wh);
      detail::OuterPoint pt;
      pt.tau = tau;
      pt.e0 = std::move(in.e0);
      pt.E = std::move(in.E);
      pt.nu = in.state.nu;
      pt.er = in.er;
      pt.w = in.state.lambda;
      pt.merit = pb.min_throughput(pt.e0, pt.tau);
      // A node whose funding sits on the boundary (zero, or a sliver away
      // from zero) or whose throughput ties the floor from above kinks the
      // merit: the dual weights are not unique there. Every subset of the
      // boundary nodes, flipped across the binding set, names an adjacent
      // facet; publish them all so the outer loop can work the ridge.
      if (in.state.nu > 0.0) {
        double tau_sum = 0.0;
        for (int i = 0; i < k; ++i) tau_sum += tau[i];
        const double budget = std::max(1.0 - tau_sum, 1e-9);
        const double tie_tol = 1e-3 * budget;
        std::vector<char> inb(k, 0);
        for (int i : in.state.b_phi) inb[i] = 1;
        // Rank candidates by how tight the tie is; only the closest few can
        // matter and the subset count is exponential in the list size.
        std::vector<std::pair<double, int>> edge;
        for (int i = 0; i < k; ++i) {
          if (!pb.active[i] || !(tau[i] > kTauEps)) continue;
          const double score = inb[i]
                                   ? pt.e0[i] / budget * 1e-1
                                   : pb.throughput(i, pt.e0, pt.tau) / in.state.phi - 1.0;
          const bool on_edge = inb[i] ? pt.e0[i] <= tie_tol : score <= 1e-4;
          if (on_edge) edge.emplace_back(score, i);
        }
        std::sort(edge.begin(), edge.end());
        std::vector<int> boundary;
        for (const auto& [score, i] : edge) boundary.push_back(i);
        if (boundary.size() > 4) boundary.resize(4);
        std::vector<double> b(k, 0.0);
        for (int i = 0; i < k; ++i)
          if (pb.active[i] && tau[i] > kTauEps)
            b[i] = b_function(pb.nodes[i].zeta, pb.nodes[i].xi, pt.E[i], tau[i],
                              pb.nodes[i].mu, pb.nodes[i].eta, pb.p_h);
        for (unsigned mask = 1; mask < (1u << boundary.size()); ++mask) {
          std::vector<char> member(inb.begin(), inb.end());
          for (std::size_t t = 0; t < boundary.size(); ++t)
            if (mask & (1u << t)) member[boundary[t]] ^= 1;
          double inv = 0.0;
          int n = 0;
          for (int i = 0; i < k; ++i) {
            if (!member[i]) continue;
            if (!(b[i] > 0.0)) {
              n = 0;
              break;
            }
            inv += 1.0 / b[i];
            ++n;
          }
          if (n == 0) continue;
          detail::FacetDual fd;
          fd.nu = 1.0 / inv;
          fd.w.assign(k, 0.0);
          for (int i = 0; i < k; ++i)
            if (member[i]) fd.w[i] = fd.nu / b[i];
          pt.alts.push_back(std::move(fd));
        }
      }
      last.state = std::move(in.state);
      return pt;
    } catch (const FairnessInfeasible&) {
      return std::nullopt;
    }
  };

  detail::OuterResult res = detail::outer_loop(pb, cfg, /*couple=*/true, inner);
  // Refresh the duals at the accepted point (the last inner call may have been
  // a rejected trial).
  MmfInner fin = mmf_inner(res.point.tau, pb, cfg);

  SolveOutput out;
  out.report.converged = res.converged;
  out.report.outer_iters = res.iters;
  out.report.objective = res.point.merit;
  out.report.er_residual = std::abs(fin.er);
  out.report.objective_trace = std::move(res.trace);
  if (res.stalled) out.report.message += "line search exhausted; ";
  if (!res.converged) out.report.message += "max outer iterations reached; ";

  double kkt = 0.0;
  for (int i : fin.state.b_phi) {
    const double d = pb.throughput(i, fin.e0, res.point.tau);
    kkt = std::max(kkt, std::abs(d - fin.state.phi) / std::max(fin.state.phi, 1e-300));
  }
  out.report.kkt_residual = kkt;

  detail::OuterPoint pt = res.point;
  pt.e0 = fin.e0;
  pt.E = fin.E;
  pt.nu = fin.state.nu;
  out.alloc = detail::make_allocation(pb, pt, &out.report.message);
  out.alloc.phi = fin.state.phi;
  out.alloc.lambda = fin.state.lambda;
  out.throughput.resize(k);
  for (int i = 0; i < k; ++i) out.throughput[i] = pb.throughput(i, fin.e0, res.point.tau);
  return out;
}

inline SolveOutput plf_optimize(const StageTwoProblem& pb, const SolverConfig& cfg = {}) {
  const int k = pb.K();
  if (pb.active_count() == 0)
    throw FairnessInfeasible("plf_optimize: every node is inactive (zeta <= xi)");

  auto inner = [&](const std::vector<double>& tau,
                   const detail::OuterPoint* prev) -> std::optional<detail::OuterPoint> {
    try {
      double wl = -1.0, wh = -1.0;
      if (prev && prev->nu > 0.0) {
        wl = prev->nu / 32.0;
        wh = prev->nu * 32.0;
      }
      PlfInner in = plf_inner(tau, pb, cfg, wl, wh);
      detail::OuterPoint pt;
      pt.tau = tau;
      pt.e0 = std::move(in.e0);
      pt.E = std::move(in.E);
      pt.nu = in.state.nu;
      pt.er = in.er;
      pt.w = in.state.lambda;
      pt.merit = pb.logsum_throughput(pt.e0, pt.tau);
      if (!std::isfinite(pt.merit)) return std::nullopt;
      return pt;
    } catch (const FairnessInfeasible&) {
      return std::nullopt;
    }
  };

  detail::OuterResult res = detail::outer_loop(pb, cfg, /*couple=*/true, inner);
  PlfInner fin = plf_inner(res.point.tau, pb, cfg);

  SolveOutput out;
  out.report.converged = res.converged;
  out.report.outer_iters = res.iters;
  out.report.objective = res.point.merit;
  out.report.er_residual = std::abs(fin.er);
  out.report.objective_trace = std::move(res.trace);
  if (res.stalled) out.report.message += "line search exhausted; ";
  if (!res.converged) out.report.message += "max outer iterations reached; ";

  double kkt = 0.0;
  for (int i = 0; i < k; ++i) {
    if (!pb.active[i] || fin.e0[i] <= 1e-12) continue;
    const double b = b_function(pb.nodes[i].zeta, pb.nodes[i].xi, fin.E[i], res.point.tau[i],
                                pb.nodes[i].mu, pb.nodes[i].eta, pb.p_h);
    const double d = fin.state.psi[i];
    if (d > 0.0)
      kkt = std::max(kkt, std::abs(b / d - fin.state.nu) / std::max(fin.state.nu, 1e-300));
  }
  out.report.kkt_residual = kkt;

  detail::OuterPoint pt = res.point;
  pt.e0 = fin.e0;
  pt.E = fin.E;
  pt.nu = fin.state.nu;
  out.alloc = detail::make_allocation(pb, pt, &out.report.message);
  out.alloc.psi = fin.state.psi;
  out.alloc.lambda = fin.state.lambda;
  out.throughput.resize(k);
  for (int i = 0; i < k; ++i) out.throughput[i] = pb.throughput(i, fin.e0, res.point.tau);
  return out;
}

inline SolveOutput mmf_optimize(const ChannelRealization& ch, const BlindingMatrix& bm,
                                double p_h, const SolverConfig& cfg = {}) {
  return mmf_optimize(make_stage_two(ch, bm, p_h), cfg);
}

inline SolveOutput plf_optimize(const ChannelRealization& ch, const BlindingMatrix& bm,
                                double p_h, const SolverConfig& cfg = {}) {
  return plf_optimize(make_stage_two(ch, bm, p_h), cfg);
}

}  // namespace fairness
}  // namespace wpcn
