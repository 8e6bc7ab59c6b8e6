#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpcn/blinding.hpp"
#include "wpcn/secrecy_core.hpp"

namespace wpcn {

enum class GradientMode { Full, OwnSlotOnly };

struct SolverConfig {
  double bisection_eps = 1e-9;   // on |Er|
  double outer_eps = 1e-6;       // on |d objective| and ||d tau||, jointly
  int max_outer_iters = 500;
  double alpha = 0.5;            // sufficient-increase fraction
  double beta = 0.5;             // backtracking shrink
  GradientMode gradient_mode = GradientMode::Full;
};

struct SolveReport {
  bool converged = false;
  int outer_iters = 0;
  double objective = 0.0;
  double er_residual = 0.0;   // |Er| of the final inner solve
  double kkt_residual = 0.0;  // max relative stationarity residual
  std::string message;
  std::vector<double> objective_trace;  // merit after each outer iteration
};

struct SolveOutput {
  Allocation alloc;
  SolveReport report;
  std::vector<double> throughput;  // per node, sorted order
};

struct InnerSolution {
  std::vector<double> e0, E;
  double nu = 0.0;
  double er = 0.0;
  bool degenerate = false;  // no positive slot to fund
};

namespace sstm {

// Dual bisection on nu at fixed tau. Per nu the unconstrained optimal energy
// solves B_i(E/tau) = nu; clamping to the AN harvest gives E0, and the budget
// residual Er = sum(E0 + tau) - 1 is decreasing in nu.
inline InnerSolution inner_allocate(std::span<const double> tau, const StageTwoProblem& pb,
                                    const SolverConfig& cfg, double warm_lo = -1.0,
                                    double warm_hi = -1.0) {
  const int k = pb.K();
  if (static_cast<int>(tau.size()) != k)
    throw std::invalid_argument("inner_allocate: tau size mismatch");
  if (pb.active_count() == 0) throw std::invalid_argument("inner_allocate: no active node");
  double tau_sum = 0.0;
  for (double t : tau) tau_sum += t;
  if (tau_sum > 1.0 + 1e-12) throw std::invalid_argument("inner_allocate: sum tau exceeds 1");

  InnerSolution sol;
  sol.e0.assign(k, 0.0);
  sol.E.assign(k, 0.0);

  std::vector<double> an(k);
  for (int i = 0; i < k; ++i) an[i] = pb.an_harvest(i, tau);

  double nu_max = 0.0;
  bool fundable = false;
  for (int i = 0; i < k; ++i) {
    if (!pb.active[i]) continue;
    nu_max = std::max(nu_max, pb.c(i) * (pb.nodes[i].zeta - pb.nodes[i].xi));
    if (tau[i] > kTauEps) fundable = true;
  }
  if (!fundable || nu_max <= 0.0) {
    for (int i = 0; i < k; ++i) sol.E[i] = pb.c(i) * an[i];
    sol.nu = nu_max;
    sol.er = tau_sum - 1.0;
    sol.degenerate = true;
    return sol;
  }

  auto eval = [&](double nu, std::vector<double>& e0) {
    double er = tau_sum - 1.0;
    for (int i = 0; i < k; ++i) {
      e0[i] = 0.0;
      if (!pb.active[i] || tau[i] <= kTauEps) continue;
      const double z = pb.nodes[i].zeta, x = pb.nodes[i].xi;
      const double q = pb.c(i) * (z - x) / nu;
      if (q <= 1.0) continue;  // B_i(0) <= nu: unfunded at this price
      const double e_star =
          tau[i] * 2.0 * (q - 1.0) / (std::sqrt((z - x) * (z - x) + 4.0 * z * x * q) + (z + x));
      const double need = e_star / pb.c(i) - an[i];
      if (need > 0.0) {
        e0[i] = need;
        er += need;
      }
    }
    return er;
  };

  double lo = 0.0, hi = nu_max;  // Er(0+) = +inf conceptually, Er(nu_max) <= 0
  if (warm_lo > 0.0 && warm_hi > warm_lo) {
    const double wlo = warm_lo, whi = std::min(warm_hi, nu_max);
    std::vector<double> tmp(k);
    if (whi > wlo && eval(wlo, tmp) >= 0.0 && eval(whi, tmp) <= 0.0) {
      lo = wlo;
      hi = whi;
    }
  }

  std::vector<double> e0(k);
  double best_nu = hi, best_er = eval(hi, e0);
  for (int it = 0; it < 300 && std::abs(best_er) > cfg.bisection_eps; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double er = eval(mid, e0);
    if (std::abs(er) < std::abs(best_er)) {
      best_er = er;
      best_nu = mid;
    }
    if (er > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= hi * 1e-17) break;
  }
  sol.nu = best_nu;
  sol.er = eval(best_nu, sol.e0);
  for (int i = 0; i < k; ++i) sol.E[i] = pb.c(i) * (sol.e0[i] + an[i]);
  return sol;
}

}  // namespace sstm

namespace detail {

// Lagrangian tau-gradient shared by every outer loop: coordinate j carries its
// own slot derivative plus (optionally) the energy coupling into later slots,
// all weighted by w, plus the budget price.
inline std::vector<double> weighted_gradient(const StageTwoProblem& pb,
                                             std::span<const double> tau,
                                             std::span<const double> E, double nu,
                                             std::span<const double> w, bool couple) {
  const int k = pb.K();
  std::vector<double> g(k, 0.0);
  std::vector<double> de(k, 0.0);
  if (couple) {
    for (int i = 0; i < k; ++i)
      if (pb.active[i] && tau[i] > kTauEps)
        de[i] = d_energy_partial(pb.nodes[i].zeta, pb.nodes[i].xi, E[i], tau[i]);
  }
  for (int j = 0; j < k; ++j) {
    if (!pb.active[j]) continue;
    double gj = -w[j] * d_tau_partial_limit(pb.nodes[j].zeta, pb.nodes[j].xi, E[j], tau[j]) + nu;
    if (couple)
      for (int i = j + 1; i < k; ++i)
        if (pb.active[i]) gj -= w[i] * de[i] * pb.c(i) * pb.coupling(j, i);
    g[j] = gj;
  }
  return g;
}

struct FacetDual {
  std::vector<double> w;
  double nu = 0.0;
};

struct OuterPoint {
  std::vector<double> tau, e0, E, w;
  double nu = 0.0;
  double merit = 0.0;
  double er = 0.0;
  // Alternative dual choices where the merit is kinked (floor or funding
  // ties make the weights non-unique). Empty when the merit is smooth here.
  std::vector<FacetDual> alts;
};

inline void project_to_simplex(std::vector<double>& v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      theta = t;
    }
  }
  if (rho == 0) {
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
    return;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
}

// Minimum-norm element of the convex hull of the rows of `gs`: the steepest
// usable ascent direction when several facet gradients meet at a kink.
inline std::vector<double> min_norm_combination(const std::vector<std::vector<double>>& gs) {
  const int m = static_cast<int>(gs.size());
  const int k = static_cast<int>(gs.front().size());
  double scale = 0.0;
  for (const auto& g : gs)
    for (double v : g) scale = std::max(scale, std::abs(v));
  if (scale <= 0.0) return std::vector<double>(k, 0.0);

  std::vector<double> gram(static_cast<std::size_t>(m) * m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += (gs[a][i] / scale) * (gs[b][i] / scale);
      gram[a * m + b] = gram[b * m + a] = s;
    }
  double diag_max = 0.0;
  for (int a = 0; a < m; ++a) diag_max = std::max(diag_max, gram[a * m + a]);
  const double step = 1.0 / (2.0 * diag_max * m + 1e-300);

  std::vector<double> th(m, 1.0 / m), grad(m);
  for (int it = 0; it < 400; ++it) {
    for (int a = 0; a < m; ++a) {
      double s = 0.0;
      for (int b = 0; b < m; ++b) s += gram[a * m + b] * th[b];
      grad[a] = 2.0 * s;
    }
    for (int a = 0; a < m; ++a) th[a] -= step * grad[a];
    project_to_simplex(th);
  }
  std::vector<double> combo(k, 0.0);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < k; ++i) combo[i] += th[a] * gs[a][i];
  return combo;
}

struct OuterResult {
  OuterPoint point;
  bool converged = false;
  int iters = 0;
  std::vector<double> trace;
  bool stalled = false;
};

// Alternate an inner solve with a backtracking gradient step on tau. The inner
// functor returns nullopt for trial points it cannot solve; those are rejected
// by the line search. Accepted steps satisfy
//   merit' >= merit + (alpha/t) ||tau' - tau||^2,
// the projected form of the backtracking condition, so the merit is
// nondecreasing across iterations.
template <class InnerFn>
OuterResult outer_loop(const StageTwoProblem& pb, const SolverConfig& cfg, bool couple,
                       InnerFn&& inner) {
  const int k = pb.K();
  std::vector<double> tau(k, 0.0);
  for (int i = 0; i < k; ++i)
    if (pb.active[i]) tau[i] = 1.0 / (k + 1);

  OuterResult res;
  auto first = inner(tau, static_cast<const OuterPoint*>(nullptr));
  if (!first) throw std::runtime_error("outer_loop: initial inner solve infeasible");
  res.point = std::move(*first);
  res.trace.push_back(res.point.merit);

  std::vector<double> prev_tau, prev_g;
  double t0 = 1.0;
  for (int l = 1; l <= cfg.max_outer_iters; ++l) {
    res.iters = l;
    const OuterPoint& cur = res.point;
    std::vector<double> g = weighted_gradient(pb, cur.tau, cur.E, cur.nu, cur.w, couple);

    // Barzilai-Borwein initial step; the Armijo backtrack below keeps the
    // iteration monotone. Plain t0 = 1 crawls on these badly conditioned
    // merits (curvature ratios follow zeta, up to ~1e12).
    if (!prev_tau.empty()) {
      double ss = 0.0, sy = 0.0;
      for (int i = 0; i < k; ++i) {
        const double s = cur.tau[i] - prev_tau[i];
        const double y = g[i] - prev_g[i];
        ss += s * s;
        sy += s * y;
      }
      if (sy > 1e-300 && ss > 0.0) t0 = std::clamp(ss / sy, 1e-12, 1e10);
    }
    prev_tau = cur.tau;
    prev_g = g;

    // At a floor or funding tie the merit is kinked and the subgradient is
    // not unique; the inner reports the adjacent facets' duals and the
    // min-norm point of their convex hull is the steepest usable direction
    // on the ridge. Individual facet gradients follow as fallbacks.
    std::vector<std::vector<double>> dirs;
    dirs.push_back(g);
    if (!cur.alts.empty()) {
      std::vector<std::vector<double>> gs;
      gs.push_back(g);
      for (const auto& a : cur.alts)
        gs.push_back(weighted_gradient(pb, cur.tau, cur.E, a.nu, a.w, couple));
      dirs.push_back(min_norm_combination(gs));
      for (std::size_t a = 1; a < gs.size(); ++a) dirs.push_back(std::move(gs[a]));
    }

    bool accepted = false;
    OuterPoint next;
    double step_norm = 0.0;
    auto backtrack = [&](const std::vector<double>& dir, double t_init, double armijo) {
      for (double t = t_init; t >= 1e-14; t *= cfg.beta) {
        std::vector<double> trial(k, 0.0);
        double s = 0.0;
        for (int i = 0; i < k; ++i) {
          if (!pb.active[i]) continue;
          trial[i] = std::max(0.0, cur.tau[i] - t * dir[i]);
          s += trial[i];
        }
        if (s > 1.0)
          for (int i = 0; i < k; ++i) trial[i] /= s;
        double dn2 = 0.0;
        for (int i = 0; i < k; ++i) {
          const double d = trial[i] - cur.tau[i];
          dn2 += d * d;
        }
        if (dn2 == 0.0) return;  // pinned against the constraints
        const double gain = armijo > 0.0 ? armijo / t * dn2
                                         : 1e-12 * std::max(1.0, std::abs(cur.merit));
        auto cand = inner(trial, &cur);
        if (cand && cand->merit >= cur.merit + gain) {
          next = std::move(*cand);
          step_norm = std::sqrt(dn2);
          accepted = true;
          return;
        }
      }
    };
    backtrack(dirs[0], t0, cfg.alpha);
    if (!accepted && t0 < 1.0) backtrack(dirs[0], 1.0, cfg.alpha);  // tiny BB guess
    for (std::size_t d = 1; d < dirs.size() && !accepted; ++d)
      backtrack(dirs[d], 1.0, cfg.alpha);

    // Declare convergence only after a verification scan: near a kink the
    // Armijo test can reject every sufficient-increase step yet accept a
    // noise-level one. Both look "stationary"; the scan asks whether any
    // plain step along the available directions still gains.
    const bool tiny = accepted && next.merit - cur.merit <= cfg.outer_eps &&
                      step_norm <= cfg.outer_eps;
    if (!accepted || tiny) {
      const bool had = accepted;
      const double floor_gain = cfg.outer_eps * 0.01 * std::max(1.0, std::abs(cur.merit));
      OuterPoint best;
      bool have_best = false;
      if (had) {
        best = std::move(next);
        have_best = true;
      }
      bool real_gain = false;
      for (const auto& d : dirs) {
        accepted = false;
        backtrack(d, std::max(t0, 1.0), -1.0);
        if (!accepted) continue;
        if (!have_best || next.merit > best.merit) {
          best = std::move(next);
          have_best = true;
        }
        if (best.merit - cur.merit >= floor_gain) {
          real_gain = true;
          break;
        }
      }
      if (!real_gain) {
        if (have_best && best.merit >= cur.merit) {
          res.point = std::move(best);  // bank the last crumb
          res.trace.push_back(res.point.merit);
        }
        res.stalled = !had && !have_best;
        res.converged = true;
        break;
      }
      next = std::move(best);
    }
    res.point = std::move(next);
    res.trace.push_back(res.point.merit);
  }
  return res;
}

inline Allocation make_allocation(const StageTwoProblem& pb, const OuterPoint& p,
                                  std::string* note) {
  const int k = pb.K();
  Allocation al;
  al.tau.resize(k + 1);
  double s = 0.0, e0s = 0.0;
  for (int i = 0; i < k; ++i) {
    al.tau[i + 1] = p.tau[i];
    s += p.tau[i];
    e0s += p.e0[i];
  }
  al.tau[0] = 1.0 - s;
  al.E0 = p.e0;
  al.E = p.E;
  al.nu = p.nu;
  if (note && al.tau[0] > 1e-9 && std::abs(e0s / al.tau[0] - 1.0) > 1e-6)
    *note += "slot-0 weights do not close the simplex; idle downlink budget " +
             std::to_string(al.tau[0] - e0s) + "; ";
  return al;
}

}  // namespace detail

namespace sstm {

// Lagrangian tau-gradient at an inner solution. Full mode adds the chain rule
// through each later node's harvested energy; OwnSlotOnly keeps only the
// own-slot derivative.
inline std::vector<double> gradient_tau(const StageTwoProblem& pb, std::span<const double> tau,
                                        const InnerSolution& inner, GradientMode mode) {
  const int k = pb.K();
  for (int i = 0; i < k; ++i)
    if (pb.active[i] && tau[i] <= kTauEps)
      throw std::invalid_argument("gradient_tau: active slot at the tau floor");
  std::vector<double> ones(k, 1.0);
  return detail::weighted_gradient(pb, tau, inner.E, inner.nu, ones,
                                   mode == GradientMode::Full);
}

inline SolveOutput optimize(const StageTwoProblem& pb, const SolverConfig& cfg = {}) {
  if (pb.active_count() == 0) throw std::invalid_argument("sstm: no node with zeta > xi");
  const int k = pb.K();
  const bool couple = cfg.gradient_mode == GradientMode::Full;

  auto inner = [&](const std::vector<double>& tau,
                   const detail::OuterPoint* prev) -> std::optional<detail::OuterPoint> {
    double wl = -1.0, wh = -1.0;
    if (prev && prev->nu > 0.0) {
      wl = prev->nu / 32.0;
      wh = prev->nu * 32.0;
    }
    InnerSolution in = inner_allocate(tau, pb, cfg, wl, wh);
    detail::OuterPoint pt;
    pt.tau = tau;
    pt.e0 = std::move(in.e0);
    pt.E = std::move(in.E);
    pt.nu = in.nu;
    pt.er = in.er;
    pt.w.assign(k, 1.0);
    pt.merit = pb.sum_throughput(pt.e0, pt.tau);
    return pt;
  };

  detail::OuterResult res = detail::outer_loop(pb, cfg, couple, inner);

  SolveOutput out;
  out.report.converged = res.converged;
  out.report.outer_iters = res.iters;
  out.report.objective = res.point.merit;
  out.report.er_residual = std::abs(res.point.er);
  out.report.objective_trace = std::move(res.trace);
  if (res.stalled) out.report.message += "line search exhausted; ";
  if (!res.converged) out.report.message += "max outer iterations reached; ";

  double kkt = 0.0;
  for (int i = 0; i < k; ++i) {
    if (!pb.active[i] || res.point.tau[i] <= kTauEps || res.point.e0[i] <= 1e-12) continue;
    const double b = b_function(pb.nodes[i].zeta, pb.nodes[i].xi, res.point.E[i],
                                res.point.tau[i], pb.nodes[i].mu, pb.nodes[i].eta, pb.p_h);
    kkt = std::max(kkt, std::abs(b - res.point.nu) / res.point.nu);
  }
  out.report.kkt_residual = kkt;

  out.alloc = detail::make_allocation(pb, res.point, &out.report.message);
  out.throughput.resize(k);
  for (int i = 0; i < k; ++i) out.throughput[i] = pb.throughput(i, res.point.e0, res.point.tau);
  return out;
}

inline SolveOutput optimize(const ChannelRealization& ch, const BlindingMatrix& bm, double p_h,
                            const SolverConfig& cfg = {}) {
  return optimize(make_stage_two(ch, bm, p_h), cfg);
}

}  // namespace sstm
}  // namespace wpcn
