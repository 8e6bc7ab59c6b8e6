#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpcn/sstm.hpp"

namespace wpcn {
namespace baselines {

enum class Kind { UniformTimeWeights, UniformTime, UniformBlinding };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::UniformTimeWeights: return "utw";
    case Kind::UniformTime: return "ut";
    case Kind::UniformBlinding: return "ub";
  }
  return "?";
}

// Throughput of a fixed (e0, tau) point. Nodes whose wiretap gain beats the
// main channel contribute zero, matching the positive-part objective.
inline SolveOutput evaluate_fixed(const StageTwoProblem& pb, std::span<const double> tau,
                                  std::span<const double> e0) {
  const int k = pb.K();
  if (static_cast<int>(tau.size()) != k || static_cast<int>(e0.size()) != k)
    throw std::invalid_argument("evaluate_fixed: size mismatch");
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    if (tau[i] < 0.0 || e0[i] < 0.0)
      throw std::invalid_argument("evaluate_fixed: negative allocation");
    total += tau[i] + e0[i];
  }
  if (total > 1.0 + 1e-9) throw std::invalid_argument("evaluate_fixed: budget exceeded");

  SolveOutput out;
  out.report.converged = true;
  out.report.outer_iters = 0;
  out.report.message = "fixed allocation";
  out.alloc.tau.assign(k + 1, 0.0);
  out.alloc.E0.assign(e0.begin(), e0.end());
  out.alloc.E.assign(k, 0.0);
  double tau_sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out.alloc.tau[i + 1] = tau[i];
    tau_sum += tau[i];
  }
  out.alloc.tau[0] = 1.0 - tau_sum;
  out.throughput.resize(k);
  std::vector<double> e0v(e0.begin(), e0.end());
  std::vector<double> tv(tau.begin(), tau.end());
  for (int i = 0; i < k; ++i) {
    out.alloc.E[i] = pb.energy(i, e0v, tv);
    out.throughput[i] = pb.throughput(i, e0v, tv);
  }
  out.report.objective = pb.sum_throughput(e0v, tv);
  return out;
}

inline SolveOutput run(Kind kind, const ChannelRealization& ch, double p_h,
                       const SolverConfig& cfg = {}) {
  const int k = ch.K();
  if (k < 1) throw std::invalid_argument("baseline: empty realization");

  switch (kind) {
    case Kind::UniformBlinding: {
      const BlindingMatrix bm = uniform_blinding(ch, p_h);
      return sstm::optimize(make_stage_two(ch, bm, p_h), cfg);
    }
    case Kind::UniformTimeWeights:
    case Kind::UniformTime: {
      const BlindingMatrix bm = kind == Kind::UniformTime ? blind_all(ch, p_h)
                                                          : uniform_blinding(ch, p_h);
      const StageTwoProblem pb = make_stage_two(ch, bm, p_h);
      const double slot = 1.0 / (k + 1);
      std::vector<double> tau(k, slot);
      std::vector<double> e0(k, slot / k);  // harvest slot split evenly
      return evaluate_fixed(pb, tau, e0);
    }
  }
  throw std::logic_error("baseline: unknown kind");
}

}  // namespace baselines
}  // namespace wpcn
