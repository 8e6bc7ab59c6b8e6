#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "wpcn/baselines.hpp"
#include "wpcn/blinding.hpp"
#include "wpcn/fairness.hpp"
#include "wpcn/rng.hpp"
#include "wpcn/scenario.hpp"
#include "wpcn/sstm.hpp"

namespace wpcn {
namespace harness {

inline const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> s{"sstm", "mmf", "plf", "ub", "ut", "utw"};
  return s;
}

struct ExperimentConfig {
  Scenario scenario;
  std::vector<double> p_h_dbm{30.0};
  std::vector<std::string> solvers{"sstm"};
  int trials = 1;
  bool timing = false;
  SolverConfig solver_cfg;
};

// Four nodes on rays from the power station, last one pushed far out.
inline Scenario default_scenario(FadingType fading = FadingType::Rician) {
  Scenario sc;
  const double pi = 3.14159265358979323846;
  sc.node_positions = {{1.8, 0.0}, {2.0, pi / 4}, {2.2, pi / 2}, {5.0, 3 * pi / 4}};
  sc.num_antennas = 50;
  sc.noise_dbm = -100.0;
  sc.path_loss_exponent = 3.0;
  sc.fading = fading;
  sc.k_factor = 10.0;
  sc.seed = 20240915;
  return sc;
}

inline ExperimentConfig default_config(FadingType fading = FadingType::Rician) {
  ExperimentConfig cfg;
  cfg.scenario = default_scenario(fading);
  cfg.p_h_dbm = {0.0, 10.0, 20.0, 30.0, 40.0};
  cfg.solvers = {"sstm", "ub", "ut", "utw"};
  cfg.trials = 200;
  return cfg;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.scenario = scenario_from_json(j);
  if (j.contains("p_h_dbm")) {
    if (j["p_h_dbm"].is_array())
      cfg.p_h_dbm = j["p_h_dbm"].get<std::vector<double>>();
    else
      cfg.p_h_dbm = {j["p_h_dbm"].get<double>()};
  }
  if (j.contains("solvers")) cfg.solvers = j["solvers"].get<std::vector<std::string>>();
  cfg.trials = j.value("trials", 1);
  cfg.timing = j.value("timing", false);
  if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (cfg.p_h_dbm.empty()) throw std::invalid_argument("config: empty p_h_dbm");
  if (cfg.solvers.empty()) throw std::invalid_argument("config: empty solvers");
  for (const auto& s : cfg.solvers) {
    const auto& ks = known_solvers();
    if (std::find(ks.begin(), ks.end(), s) == ks.end())
      throw std::invalid_argument("config: unknown solver '" + s + "'");
  }
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j = scenario_to_json(cfg.scenario);
  j["p_h_dbm"] = cfg.p_h_dbm;
  j["solvers"] = cfg.solvers;
  j["trials"] = cfg.trials;
  j["timing"] = cfg.timing;
  return j;
}

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  double p_h_dbm = 0.0;
  std::string solver;
  std::vector<double> throughput;  // physical node order
  double sum_nats = 0.0;
  double min_nats = 0.0;
  double logsum_nats = 0.0;
  double jain = 0.0;
  int iters = 0;
  double ms = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialRecord> records;
};

// Fairness of a throughput split; the empty and all-zero cases count as fair.
inline double jain_index(std::span<const double> d) {
  double s = 0.0, s2 = 0.0;
  for (double v : d) {
    s += v;
    s2 += v * v;
  }
  if (s2 <= 0.0) return 1.0;
  return s * s / (d.size() * s2);
}

inline int thread_count() {
  if (const char* env = std::getenv("WPCN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return std::min(v, 64);
  }
  return 1;
}

namespace hdetail {

constexpr std::uint64_t kStreamTrial = 7;

struct SolverRun {
  std::vector<double> throughput_sorted;
  int iters = 0;
};

inline SolverRun dispatch(const std::string& name, const ChannelRealization& ch,
                          const BlindingMatrix& opt_bm, const BlindingMatrix& uni_bm,
                          double p_h, const SolverConfig& cfg) {
  SolverRun run;
  if (name == "sstm") {
    auto out = sstm::optimize(make_stage_two(ch, opt_bm, p_h), cfg);
    run.throughput_sorted = std::move(out.throughput);
    run.iters = out.report.outer_iters;
  } else if (name == "mmf") {
    auto out = fairness::mmf_optimize(make_stage_two(ch, opt_bm, p_h), cfg);
    run.throughput_sorted = std::move(out.throughput);
    run.iters = out.report.outer_iters;
  } else if (name == "plf") {
    auto out = fairness::plf_optimize(make_stage_two(ch, opt_bm, p_h), cfg);
    run.throughput_sorted = std::move(out.throughput);
    run.iters = out.report.outer_iters;
  } else if (name == "ub") {
    auto out = sstm::optimize(make_stage_two(ch, uni_bm, p_h), cfg);
    run.throughput_sorted = std::move(out.throughput);
    run.iters = out.report.outer_iters;
  } else if (name == "ut" || name == "utw") {
    auto out = baselines::run(name == "ut" ? baselines::Kind::UniformTime
                                           : baselines::Kind::UniformTimeWeights,
                              ch, p_h, cfg);
    run.throughput_sorted = std::move(out.throughput);
    run.iters = 0;
  } else {
    throw std::invalid_argument("unknown solver '" + name + "'");
  }
  return run;
}

}  // namespace hdetail

// Channels are drawn once per trial and shared across the power sweep, so the
// curves move on common randomness. Records come out in deterministic
// (trial, p_h, solver) order regardless of the thread count.
inline ExperimentResult run_experiment(
    const ExperimentConfig& cfg,
    const std::function<void(int, int)>& progress = nullptr) {
  ExperimentResult res;
  res.config = cfg;
  const int np = static_cast<int>(cfg.p_h_dbm.size());
  const int ns = static_cast<int>(cfg.solvers.size());
  const int k = cfg.scenario.K();
  res.records.resize(static_cast<std::size_t>(cfg.trials) * np * ns);

  auto run_trial = [&](int t) {
    Scenario sc = cfg.scenario;
    sc.seed = substream_key(cfg.scenario.seed, hdetail::kStreamTrial,
                            static_cast<std::uint64_t>(t));
    const ChannelRealization ch = draw_channels(sc);
    for (int p = 0; p < np; ++p) {
      const double p_h = to_linear(cfg.p_h_dbm[p]);
      BlindingMatrix opt_bm, uni_bm;
      bool have_opt = false, have_uni = false;
      for (int s = 0; s < ns; ++s) {
        const std::string& name = cfg.solvers[s];
        const bool wants_opt = name == "sstm" || name == "mmf" || name == "plf" || name == "ut";
        const bool wants_uni = name == "ub" || name == "utw";
        if (wants_opt && !have_opt) {
          opt_bm = blind_all(ch, p_h);
          have_opt = true;
        }
        if (wants_uni && !have_uni) {
          uni_bm = uniform_blinding(ch, p_h);
          have_uni = true;
        }
        const auto t0 = std::chrono::steady_clock::now();
        hdetail::SolverRun run = hdetail::dispatch(name, ch, opt_bm, uni_bm, p_h,
                                                   cfg.solver_cfg);
        const auto t1 = std::chrono::steady_clock::now();

        TrialRecord rec;
        rec.trial = t;
        rec.seed = sc.seed;
        rec.p_h_dbm = cfg.p_h_dbm[p];
        rec.solver = name;
        rec.throughput.assign(k, 0.0);
        for (int slot = 0; slot < k; ++slot)
          rec.throughput[ch.node_ids[slot]] = run.throughput_sorted[slot];
        rec.sum_nats = 0.0;
        rec.min_nats = std::numeric_limits<double>::infinity();
        rec.logsum_nats = 0.0;
        for (double v : rec.throughput) {
          rec.sum_nats += v;
          rec.min_nats = std::min(rec.min_nats, v);
          rec.logsum_nats += v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
        }
        rec.jain = jain_index(rec.throughput);
        rec.iters = run.iters;
        rec.ms = cfg.timing
                     ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                     : 0.0;
        res.records[(static_cast<std::size_t>(t) * np + p) * ns + s] = std::move(rec);
      }
    }
  };

  const int threads = std::min(thread_count(), cfg.trials);
  if (threads <= 1) {
    for (int t = 0; t < cfg.trials; ++t) {
      run_trial(t);
      if (progress) progress(t + 1, cfg.trials);
    }
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int t = w; t < cfg.trials; t += threads) run_trial(t);
      });
    for (auto& th : pool) th.join();
    if (progress) progress(cfg.trials, cfg.trials);
  }
  return res;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One row per node; node ids are physical and 1-based. Output is
// byte-reproducible for a given config when timing is off.
inline void write_csv(std::ostream& os, const ExperimentResult& res) {
  os << "trial,seed,p_h_dbm,solver,node,throughput_nats,throughput_bits,"
        "sum_nats,min_nats,logsum_nats,jain,iters,ms\n";
  const double ln2 = 0.69314718055994531;
  for (const auto& r : res.records) {
    for (std::size_t i = 0; i < r.throughput.size(); ++i) {
      os << r.trial << ',' << r.seed << ',' << fmt_double(r.p_h_dbm) << ',' << r.solver << ','
         << (i + 1) << ',' << fmt_double(r.throughput[i]) << ','
         << fmt_double(r.throughput[i] / ln2) << ',' << fmt_double(r.sum_nats) << ','
         << fmt_double(r.min_nats) << ',' << fmt_double(r.logsum_nats) << ','
         << fmt_double(r.jain) << ',' << r.iters << ',' << fmt_double(r.ms) << '\n';
    }
  }
}

struct SolverSummary {
  int n = 0;
  double mean_sum = 0.0, ci_sum = 0.0;
  double mean_min = 0.0, ci_min = 0.0;
  double mean_jain = 0.0, ci_jain = 0.0;
  std::vector<double> mean_node;
};

// Per (p_h, solver) means with normal-approximation 95% half-widths.
inline std::map<std::pair<double, std::string>, SolverSummary> summarize(
    const ExperimentResult& res) {
  std::map<std::pair<double, std::string>, std::vector<const TrialRecord*>> groups;
  for (const auto& r : res.records) groups[{r.p_h_dbm, r.solver}].push_back(&r);

  std::map<std::pair<double, std::string>, SolverSummary> out;
  for (auto& [key, rows] : groups) {
    SolverSummary s;
    s.n = static_cast<int>(rows.size());
    const int k = rows.empty() ? 0 : static_cast<int>(rows.front()->throughput.size());
    s.mean_node.assign(k, 0.0);
    double ss_sum = 0.0, ss_min = 0.0, ss_jain = 0.0;
    for (const auto* r : rows) {
      s.mean_sum += r->sum_nats;
      s.mean_min += r->min_nats;
      s.mean_jain += r->jain;
      for (int i = 0; i < k; ++i) s.mean_node[i] += r->throughput[i];
    }
    s.mean_sum /= s.n;
    s.mean_min /= s.n;
    s.mean_jain /= s.n;
    for (double& v : s.mean_node) v /= s.n;
    for (const auto* r : rows) {
      ss_sum += (r->sum_nats - s.mean_sum) * (r->sum_nats - s.mean_sum);
      ss_min += (r->min_nats - s.mean_min) * (r->min_nats - s.mean_min);
      ss_jain += (r->jain - s.mean_jain) * (r->jain - s.mean_jain);
    }
    if (s.n > 1) {
      const double inv = 1.0 / (s.n - 1);
      s.ci_sum = 1.96 * std::sqrt(ss_sum * inv / s.n);
      s.ci_min = 1.96 * std::sqrt(ss_min * inv / s.n);
      s.ci_jain = 1.96 * std::sqrt(ss_jain * inv / s.n);
    }
    out[key] = std::move(s);
  }
  return out;
}

// Non-finite values map to JSON null, which is how a zero-throughput node's
// log-sum shows up.
inline nlohmann::json results_to_json(const ExperimentResult& res) {
  nlohmann::json j;
  j["config"] = config_to_json(res.config);
  j["records"] = nlohmann::json::array();
  for (const auto& r : res.records) {
    nlohmann::json rec;
    rec["trial"] = r.trial;
    rec["seed"] = r.seed;
    rec["p_h_dbm"] = r.p_h_dbm;
    rec["solver"] = r.solver;
    rec["throughput_nats"] = r.throughput;
    rec["sum_nats"] = r.sum_nats;
    rec["min_nats"] = r.min_nats;
    rec["logsum_nats"] = r.logsum_nats;
    rec["jain"] = r.jain;
    rec["iters"] = r.iters;
    rec["ms"] = r.ms;
    j["records"].push_back(std::move(rec));
  }
  j["summary"] = nlohmann::json::array();
  for (const auto& [key, s] : summarize(res)) {
    nlohmann::json row;
    row["p_h_dbm"] = key.first;
    row["solver"] = key.second;
    row["n"] = s.n;
    row["mean_sum_nats"] = s.mean_sum;
    row["ci95_sum_nats"] = s.ci_sum;
    row["mean_min_nats"] = s.mean_min;
    row["ci95_min_nats"] = s.ci_min;
    row["mean_jain"] = s.mean_jain;
    row["ci95_jain"] = s.ci_jain;
    row["mean_node_nats"] = s.mean_node;
    j["summary"].push_back(std::move(row));
  }
  return j;
}

// Single-instance solve for the CLI; objective picks the solver family.
inline nlohmann::json solve_to_json(const ChannelRealization& ch, const std::string& objective,
                                    double p_h, const SolverConfig& cfg = {}) {
  const BlindingMatrix bm = blind_all(ch, p_h);
  SolveOutput out;
  if (objective == "sstm")
    out = sstm::optimize(make_stage_two(ch, bm, p_h), cfg);
  else if (objective == "mmf")
    out = fairness::mmf_optimize(make_stage_two(ch, bm, p_h), cfg);
  else if (objective == "plf")
    out = fairness::plf_optimize(make_stage_two(ch, bm, p_h), cfg);
  else
    throw std::invalid_argument("objective must be sstm, mmf, or plf");

  const int k = ch.K();
  std::vector<double> thr_phys(k, 0.0), e0_phys(k, 0.0), e_phys(k, 0.0);
  std::vector<double> tau_phys(k, 0.0);
  for (int slot = 0; slot < k; ++slot) {
    thr_phys[ch.node_ids[slot]] = out.throughput[slot];
    e0_phys[ch.node_ids[slot]] = out.alloc.E0[slot];
    e_phys[ch.node_ids[slot]] = out.alloc.E[slot];
    tau_phys[ch.node_ids[slot]] = out.alloc.tau[slot + 1];
  }

  nlohmann::json j;
  j["objective"] = objective;
  j["p_h_w"] = p_h;
  j["tau0"] = out.alloc.tau[0];
  j["tau"] = tau_phys;
  j["e0"] = e0_phys;
  j["energy"] = e_phys;
  j["throughput_nats"] = thr_phys;
  double sum = 0.0;
  for (double v : thr_phys) sum += v;
  j["sum_nats"] = sum;
  j["objective_value"] = out.report.objective;
  j["blinding"] = blinding_to_json(bm);
  j["report"] = {{"converged", out.report.converged},
                 {"outer_iters", out.report.outer_iters},
                 {"objective", out.report.objective},
                 {"kkt_residual", out.report.kkt_residual},
                 {"er_residual", out.report.er_residual},
                 {"message", out.report.message}};
  return j;
}

}  // namespace harness
}  // namespace wpcn
