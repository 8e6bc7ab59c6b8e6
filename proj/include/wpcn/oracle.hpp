#pragma once

// Independent reference optimizers used only by tests. This header must not
// include the solver modules; it works from the problem data alone.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "wpcn/scenario.hpp"
#include "wpcn/secrecy_core.hpp"

namespace wpcn {
namespace oracle {

// Golden-section maximizer for a unimodal function on [lo, hi].
template <class F>
double golden_section_max(F&& f, double lo, double hi, int iters = 200, double tol = 1e-14) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iters && (b - a) > tol * (std::abs(a) + std::abs(b) + 1e-30); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct GridBlindResult {
  std::vector<double> a;  // length K, zero at the transmitting slot
  double xi_star = 0.0;
};

// Exhaustive grid over the weight simplex for one slot's wiretap suppression.
// Only meant for small K; resolution is 1/steps per weight.
inline GridBlindResult grid_blind_slot(int slot, const ChannelRealization& ch, double p_h,
                                       int steps) {
  const int k = ch.K();
  if (k < 2 || k > 4) throw std::invalid_argument("grid_blind_slot: supports K in [2,4]");
  if (slot < 0 || slot >= k) throw std::invalid_argument("grid_blind_slot: bad slot");

  std::vector<int> others;
  for (int j = 0; j < k; ++j)
    if (j != slot) others.push_back(j);
  const int m = static_cast<int>(others.size());

  GridBlindResult best;
  best.a.assign(k, 0.0);
  best.xi_star = std::numeric_limits<double>::infinity();

  std::vector<int> counts(m, 0);
  auto eval = [&]() {
    double worst = 0.0;
    for (int t = 0; t < m; ++t) {
      const int j = others[t];
      const double aj = static_cast<double>(counts[t]) / steps;
      const double xij =
          std::norm(ch.h_cross[slot][j]) / (ch.sigma2 + ch.mu[j] * aj * p_h);
      worst = std::max(worst, xij);
    }
    if (worst < best.xi_star) {
      best.xi_star = worst;
      std::fill(best.a.begin(), best.a.end(), 0.0);
      for (int t = 0; t < m; ++t)
        best.a[others[t]] = static_cast<double>(counts[t]) / steps;
    }
  };

  std::function<void(int, int)> rec = [&](int idx, int left) {
    if (idx == m - 1) {
      counts[idx] = left;
      eval();
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[idx] = c;
      rec(idx + 1, left - c);
    }
  };
  rec(0, steps);
  return best;
}

enum class Objective { Sum, Min, LogSum };

inline double evaluate(const StageTwoProblem& pb, Objective obj, std::span<const double> e0,
                       std::span<const double> tau) {
  switch (obj) {
    case Objective::Sum: return pb.sum_throughput(e0, tau);
    case Objective::Min: return pb.min_throughput(e0, tau);
    case Objective::LogSum: return pb.logsum_throughput(e0, tau);
  }
  return 0.0;
}

struct CgResult {
  std::vector<double> e0, tau;
  double objective = 0.0;
  int iters = 0;
  double final_smoothing = 0.0;
};

// Pairwise conditional-gradient ascent over the joint budget simplex
// {(e0, tau) >= 0, sum <= 1}. Vertices are the coordinate units plus the
// slack origin, so the iterate itself is its own vertex-weight vector.
// The min objective is annealed through a soft-min so gradients exist;
// the reported objective is always the true one at the best iterate seen.
inline CgResult cg_solve(const StageTwoProblem& pb, Objective obj, int max_iters = 20000) {
  const int k = pb.K();
  const int n = 2 * k;
  if (pb.active_count() == 0) throw std::invalid_argument("cg_solve: no active node");

  std::vector<double> x(n, 1.0 / (n + 1));
  auto split_eval_true = [&](const std::vector<double>& v) {
    std::span<const double> e0(v.data(), k);
    std::span<const double> tau(v.data() + k, k);
    return evaluate(pb, obj, e0, tau);
  };
  auto surrogate = [&](const std::vector<double>& v, double t) {
    if (obj != Objective::Min) {
      const double val = split_eval_true(v);
      return std::isfinite(val) ? val : -1e300;
    }
    // Soft min over active nodes, shifted for stability.
    std::span<const double> e0(v.data(), k);
    std::span<const double> tau(v.data() + k, k);
    double m = std::numeric_limits<double>::infinity();
    std::vector<double> d(k, 0.0);
    for (int i = 0; i < k; ++i) {
      if (!pb.active[i]) continue;
      d[i] = pb.throughput(i, e0, tau);
      m = std::min(m, d[i]);
    }
    double s = 0.0;
    for (int i = 0; i < k; ++i)
      if (pb.active[i]) s += std::exp(-(d[i] - m) / t);
    return m - t * std::log(s);
  };

  CgResult res;
  std::vector<double> best_x = x;
  double best_val = split_eval_true(x);

  std::vector<double> g(n), probe;
  int flat_rounds = 0;
  double t = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    t = obj == Objective::Min ? std::max(1e-7, 0.25 * std::exp2(-it / 500.0)) : 0.0;

    // Central differences; evaluation is cheap and stays defined slightly
    // outside the simplex. A probe that leaves the domain (negative energy
    // makes the rate undefined) falls back to the one-sided quotient so a
    // sentinel value cannot masquerade as an astronomical slope.
    const double h = 3e-6;
    const double f0 = surrogate(x, t);
    probe = x;
    for (int i = 0; i < n; ++i) {
      probe[i] = x[i] + h;
      const double fp = surrogate(probe, t);
      probe[i] = x[i] - h;
      const double fm = surrogate(probe, t);
      probe[i] = x[i];
      const bool okp = fp > -1e299, okm = fm > -1e299;
      if (okp && okm)
        g[i] = (fp - fm) / (2.0 * h);
      else if (okp)
        g[i] = (fp - f0) / h;
      else if (okm)
        g[i] = (f0 - fm) / h;
      else
        g[i] = 0.0;
    }

    // Ascent vertex over {unit coords, slack}; away vertex over the support.
    int fw = -1;  // -1 means the slack vertex
    double gfw = 0.0;
    for (int i = 0; i < n; ++i)
      if (g[i] > gfw) {
        gfw = g[i];
        fw = i;
      }
    const double slack = 1.0 - std::accumulate(x.begin(), x.end(), 0.0);
    int away = -1;
    double gaw = slack > 1e-18 ? 0.0 : std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      if (x[i] > 1e-18 && g[i] < gaw) {
        gaw = g[i];
        away = i;
      }

    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += g[i] * x[i];
    const double gap = gfw - dot;

    const double gamma_max = away >= 0 ? x[away] : slack;
    bool progressed = false;
    if (fw != away && gamma_max > 1e-18) {
      auto along = [&](double gamma) {
        probe = x;
        if (fw >= 0) probe[fw] += gamma;
        if (away >= 0) probe[away] -= gamma;
        return surrogate(probe, t);
      };
      const double g0 = along(0.0);
      const double gs = golden_section_max(along, 0.0, gamma_max, 120, 1e-14);
      if (along(gs) > g0 && gs > 0.0) {
        if (fw >= 0) x[fw] += gs;
        if (away >= 0) x[away] = std::max(0.0, x[away] - gs);
        progressed = true;
      }
    }
    // The pairwise step degenerates when the away mass is negligible (a swap
    // step); the plain conditional-gradient step toward the ascent vertex
    // still makes progress whenever the gap is positive.
    if (!progressed) {
      auto toward = [&](double gamma) {
        probe = x;
        for (double& v : probe) v *= 1.0 - gamma;
        if (fw >= 0) probe[fw] += gamma;
        return surrogate(probe, t);
      };
      const double f0 = toward(0.0);
      const double gs = golden_section_max(toward, 0.0, 1.0, 120, 1e-14);
      if (toward(gs) > f0 && gs > 0.0) {
        for (double& v : x) v *= 1.0 - gs;
        if (fw >= 0) x[fw] += gs;
        progressed = true;
      }
    }

    const double val = split_eval_true(x);
    if (val > best_val) {
      best_val = val;
      best_x = x;
    }
    res.iters = it + 1;

    if (!progressed || gap <= 1e-12 * (1.0 + std::abs(best_val)))
      ++flat_rounds;
    else
      flat_rounds = 0;
    const bool annealed = obj != Objective::Min || t <= 1.5e-7;
    if (flat_rounds >= 40 && annealed) break;
  }

  // Finite differences misrank directions near kinks and sharp bends, so the
  // loop above can jam before the gap closes. Polish by enumerating every
  // mass-transfer direction with an exact line search. The min objective
  // sweeps down a cooling ladder of soft-min temperatures: group floor ties
  // block single transfers on the hard min, but blend smoothly at each rung,
  // and the final rung's optimum is within t*log(K) of the true one.
  const std::vector<double> ladder = obj == Objective::Min
                                         ? std::vector<double>{1e-3, 1e-4, 1e-5, 1e-6, 1e-7}
                                         : std::vector<double>{0.0};
  x = best_x;
  for (const double tp : ladder) {
    for (int sweep = 0; sweep < 300; ++sweep) {
      bool improved = false;
      double cur = surrogate(x, tp);
      auto try_move = [&](int to, int from, double gamma_max) {
        if (gamma_max <= 1e-15) return;
        auto along = [&](double gamma) {
          probe = x;
          if (to >= 0) probe[to] += gamma;
          if (from >= 0) probe[from] = std::max(0.0, probe[from] - gamma);
          return surrogate(probe, tp);
        };
        const double gs = golden_section_max(along, 0.0, gamma_max, 120, 1e-14);
        const double val = along(gs);
        if (gs > 0.0 && val > cur + 1e-14 * (1.0 + std::abs(cur))) {
          if (to >= 0) x[to] += gs;
          if (from >= 0) x[from] = std::max(0.0, x[from] - gs);
          cur = val;
          improved = true;
        }
      };
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (j != i) try_move(i, j, x[j]);
      for (int i = 0; i < n; ++i) {
        try_move(i, -1, 1.0 - std::accumulate(x.begin(), x.end(), 0.0));
        try_move(-1, i, x[i]);
      }
      const double val = split_eval_true(x);
      if (val > best_val) {
        best_val = val;
        best_x = x;
      }
      if (!improved) break;
    }
  }

  res.e0.assign(best_x.begin(), best_x.begin() + k);
  res.tau.assign(best_x.begin() + k, best_x.end());
  res.objective = best_val;
  res.final_smoothing = t;
  return res;
}

struct SingleResult {
  double tau = 0.0;
  double objective = 0.0;
};

// K = 1 reference: the budget collapses to e0 = 1 - tau, leaving a unimodal
// one-dimensional problem.
inline SingleResult best_tau_single(const StageTwoProblem& pb) {
  if (pb.K() != 1) throw std::invalid_argument("best_tau_single: needs K = 1");
  auto f = [&](double tau) {
    const std::vector<double> e0{1.0 - tau};
    const std::vector<double> tv{tau};
    return pb.sum_throughput(e0, tv);
  };
  SingleResult r;
  r.tau = golden_section_max(f, 1e-9, 1.0 - 1e-9, 300, 1e-15);
  r.objective = f(r.tau);
  return r;
}

// Central-difference gradient with a step ladder; per coordinate the two most
// consistent neighbouring steps pick the estimate.
template <class F>
std::vector<double> fd_gradient(F&& f, std::span<const double> x) {
  static constexpr double kRel[3] = {1e-4, 1e-5, 1e-6};
  const int n = static_cast<int>(x.size());
  std::vector<double> grad(n, 0.0);
  std::vector<double> probe(x.begin(), x.end());
  for (int i = 0; i < n; ++i) {
    const double scale = std::max(std::abs(x[i]), 1e-3);
    double est[3];
    for (int s = 0; s < 3; ++s) {
      const double h = kRel[s] * scale;
      probe[i] = x[i] + h;
      const double fp = f(std::span<const double>(probe));
      probe[i] = x[i] - h;
      const double fm = f(std::span<const double>(probe));
      probe[i] = x[i];
      est[s] = (fp - fm) / (2.0 * h);
    }
    const double d01 = std::abs(est[0] - est[1]);
    const double d12 = std::abs(est[1] - est[2]);
    grad[i] = d01 <= d12 ? est[1] : est[2];
  }
  return grad;
}

}  // namespace oracle
}  // namespace wpcn
