// Command-line front end: experiment sweeps, single-instance solves, channel
// draws, and a self-check battery. Exit codes: 0 success, 2 bad input or
// failed validation, 3 I/O or internal failure.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "wpcn/baselines.hpp"
#include "wpcn/blinding.hpp"
#include "wpcn/fairness.hpp"
#include "wpcn/harness.hpp"
#include "wpcn/oracle.hpp"
#include "wpcn/scenario.hpp"
#include "wpcn/sstm.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            const std::string& json_path, bool timing, bool progress) {
  wpcn::harness::ExperimentConfig cfg =
      wpcn::harness::config_from_json(load_json(config_path));
  if (timing) cfg.timing = true;

  auto cb = progress ? std::function<void(int, int)>([](int done, int total) {
    std::cerr << "\rtrial " << done << "/" << total << std::flush;
    if (done == total) std::cerr << '\n';
  })
                     : std::function<void(int, int)>();
  wpcn::harness::ExperimentResult res = wpcn::harness::run_experiment(cfg, cb);

  std::ostringstream csv;
  wpcn::harness::write_csv(csv, res);
  write_text(out_path, csv.str());
  if (!json_path.empty())
    write_text(json_path, wpcn::harness::results_to_json(res).dump(2) + "\n");
  return 0;
}

int cmd_solve(const std::string& channels_path, const std::string& objective, double p_h_dbm,
              const std::string& out_path) {
  const wpcn::ChannelRealization ch = wpcn::channels_from_json(load_json(channels_path));
  const nlohmann::json j =
      wpcn::harness::solve_to_json(ch, objective, wpcn::to_linear(p_h_dbm));
  if (out_path.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_text(out_path, j.dump(2) + "\n");
  return 0;
}

int cmd_draw(const std::string& config_path, const std::string& out_path, int trial) {
  wpcn::Scenario sc = wpcn::scenario_from_json(load_json(config_path));
  if (trial >= 0)
    sc.seed = wpcn::substream_key(sc.seed, 7, static_cast<std::uint64_t>(trial));
  const wpcn::ChannelRealization ch = wpcn::draw_channels(sc);
  const std::string text = wpcn::channels_to_json(ch).dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_text(out_path, text);
  return 0;
}

int cmd_init(const std::string& out_path, const std::string& fading) {
  wpcn::FadingType f;
  if (fading == "rayleigh")
    f = wpcn::FadingType::Rayleigh;
  else if (fading == "rician")
    f = wpcn::FadingType::Rician;
  else
    throw std::invalid_argument("fading must be rayleigh or rician");
  const nlohmann::json j = wpcn::harness::config_to_json(wpcn::harness::default_config(f));
  if (out_path.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_text(out_path, j.dump(2) + "\n");
  return 0;
}

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

// Per-instance battery: the independent reference optimizers (grid search
// over blinding weights, conditional-gradient ascent per objective, the
// curvature probe) plus internal consistency checks. Returns the worst
// relative objective gap through `gaps`.
void validate_instance(const wpcn::ChannelRealization& ch, double p_h,
                       std::uint64_t probe_seed, nlohmann::json& gaps) {
  const int k = ch.K();
  const wpcn::BlindingMatrix bm = wpcn::blind_all(ch, p_h);
  const wpcn::BlindingMatrix um = wpcn::uniform_blinding(ch, p_h);
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) {
      check(bm.A[i][j] >= 0.0, "negative blinding weight");
      s += bm.A[i][j];
    }
    check(std::abs(s - 1.0) <= 1e-9, "blinding weights do not sum to 1");
    check(bm.xi_star[i] <= um.xi_star[i] * (1.0 + 1e-9),
          "blinded wiretap gain exceeds the uniform one");
  }
  if (k >= 2 && k <= 4) {
    double worst_margin = 0.0;
    for (int slot = 0; slot < k; ++slot) {
      const auto grid = wpcn::oracle::grid_blind_slot(slot, ch, p_h, 40);
      check(bm.xi_star[slot] <= grid.xi_star * (1.0 + 1e-9),
            "grid search beat the blinding solver");
      worst_margin = std::max(worst_margin, 1.0 - bm.xi_star[slot] / grid.xi_star);
    }
    gaps["blinding_grid_margin"] = worst_margin;
  }

  const wpcn::StageTwoProblem pb = wpcn::make_stage_two(ch, bm, p_h);
  auto st = wpcn::sstm::optimize(pb);
  auto mm = wpcn::fairness::mmf_optimize(pb);
  auto pl = wpcn::fairness::plf_optimize(pb);

  for (const auto* out : {&st, &mm, &pl}) {
    check(out->report.converged, "solver did not converge");
    check(out->report.er_residual <= 1e-6, "budget residual too large");
    double total = out->alloc.tau[0];
    for (std::size_t i = 1; i < out->alloc.tau.size(); ++i) {
      check(out->alloc.tau[i] >= 0.0, "negative slot");
      total += out->alloc.tau[i];
    }
    check(std::abs(total - 1.0) <= 1e-9, "time budget broken");
    for (double e : out->alloc.E0) check(e >= 0.0, "negative energy share");
    for (std::size_t i = 1; i < out->report.objective_trace.size(); ++i)
      check(out->report.objective_trace[i] >= out->report.objective_trace[i - 1] - 1e-9,
            "objective trace decreased");
  }
  check(st.report.kkt_residual <= 1e-6, "sum solver stationarity residual");
  check(mm.report.kkt_residual <= 1e-6, "floor solver certificate residual");
  check(pl.report.kkt_residual <= 1e-6, "log solver certificate residual");

  const struct {
    wpcn::oracle::Objective obj;
    double sol;
    const char* name;
    double denom_floor;
  } cases[] = {{wpcn::oracle::Objective::Sum, st.report.objective, "sum", 1e-12},
               {wpcn::oracle::Objective::Min, mm.report.objective, "min", 1e-12},
               {wpcn::oracle::Objective::LogSum, pl.report.objective, "log", 1.0}};
  for (const auto& c : cases) {
    const double ref = wpcn::oracle::cg_solve(pb, c.obj, 30000).objective;
    const double rel = std::abs(c.sol - ref) / std::max(std::abs(ref), c.denom_floor);
    gaps[std::string(c.name) + "_gap"] = rel;
    check(rel <= 1e-3, std::string(c.name) + " objective disagrees with the reference");
  }

  wpcn::Substream prng(probe_seed);
  const auto cr = wpcn::concavity_probe(pb.nodes[0], p_h, 500, prng);
  check(cr.violations == 0, "curvature probe found a non-concave sample");
  check(cr.ortho_violations == 0, "curvature probe found an off-axis violation");

  auto sum_of = [](const wpcn::SolveOutput& o) {
    double s = 0.0;
    for (double v : o.throughput) s += v;
    return s;
  };
  auto min_of = [](const wpcn::SolveOutput& o) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : o.throughput) m = std::min(m, v);
    return m;
  };
  check(sum_of(st) >= sum_of(pl) - 1e-7, "sum ordering sum>=log broken");
  check(sum_of(pl) >= sum_of(mm) - 1e-7, "sum ordering log>=floor broken");
  check(min_of(mm) >= min_of(pl) - 1e-7, "min ordering floor>=log broken");
  check(min_of(pl) >= min_of(st) - 1e-7, "min ordering log>=sum broken");

  auto ub = wpcn::baselines::run(wpcn::baselines::Kind::UniformBlinding, ch, p_h);
  auto ut = wpcn::baselines::run(wpcn::baselines::Kind::UniformTime, ch, p_h);
  auto utw = wpcn::baselines::run(wpcn::baselines::Kind::UniformTimeWeights, ch, p_h);
  for (const auto* out : {&ub, &ut, &utw})
    for (double v : out->throughput) check(v >= 0.0, "negative baseline throughput");
  check(sum_of(st) >= sum_of(ub) - 1e-7, "optimized blinding fell below uniform");
}

int cmd_validate(int instances, std::uint64_t seed, bool verbose, const std::string& out_path) {
  const double p_h_choices[] = {1.0, 10.0, 100.0, 1e-3};  // watts
  nlohmann::json report;
  report["instances"] = instances;
  report["seed"] = seed;
  report["records"] = nlohmann::json::array();
  bool all_ok = true;
  for (int r = 0; r < instances; ++r) {
    wpcn::Scenario sc = wpcn::harness::default_scenario(
        r % 2 == 0 ? wpcn::FadingType::Rician : wpcn::FadingType::Rayleigh);
    sc.seed = wpcn::substream_key(seed, 11, static_cast<std::uint64_t>(r));
    const wpcn::ChannelRealization ch = wpcn::draw_channels(sc);
    const double p_h = p_h_choices[r % 4];

    nlohmann::json rec;
    rec["instance"] = r;
    rec["seed"] = sc.seed;
    rec["p_h_w"] = p_h;
    rec["fading"] = r % 2 == 0 ? "rician" : "rayleigh";
    nlohmann::json gaps = nlohmann::json::object();
    std::string error;
    try {
      validate_instance(ch, p_h, wpcn::substream_key(seed, 13, static_cast<std::uint64_t>(r)),
                        gaps);
    } catch (const CheckFailure& e) {
      error = e.what();
      all_ok = false;
    }
    rec["gaps"] = std::move(gaps);
    rec["ok"] = error.empty();
    if (!error.empty()) rec["error"] = error;
    if (verbose)
      std::cerr << "instance " << r << ": " << (error.empty() ? "ok" : error) << '\n';
    report["records"].push_back(std::move(rec));
  }
  report["ok"] = all_ok;
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_text(out_path, text);
  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wireless-powered secrecy throughput toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, json_path, channels_path, objective, fading = "rician";
  double p_h_dbm = 30.0;
  int instances = 20, trial = -1;
  std::uint64_t seed = 1;
  bool timing = false, progress = false, verbose = false;

  auto* run = app.add_subcommand("run", "run an experiment sweep and write CSV");
  run->add_option("--config", config_path, "experiment JSON")->required();
  run->add_option("--out", out_path, "output CSV path")->required();
  run->add_option("--json", json_path, "also write a JSON mirror with summaries");
  run->add_flag("--timing", timing, "record wall-clock solve times");
  run->add_flag("--progress", progress, "print trial progress to stderr");

  auto* solve = app.add_subcommand("solve", "solve one instance from a channels file");
  solve->add_option("--channels", channels_path, "channels JSON")->required();
  solve->add_option("--objective", objective, "sstm | mmf | plf")->required();
  solve->add_option("--p-h-dbm", p_h_dbm, "transmit power in dBm")->required();
  solve->add_option("--out", out_path, "output path (stdout if omitted)");

  auto* draw = app.add_subcommand("draw", "draw a channel realization from a scenario");
  draw->add_option("--config", config_path, "scenario JSON")->required();
  draw->add_option("--out", out_path, "output path (stdout if omitted)");
  draw->add_option("--trial", trial, "use the given trial's substream");

  auto* validate = app.add_subcommand("validate", "run the reference-check battery");
  validate->add_option("--instances", instances, "number of random instances");
  validate->add_option("--seed", seed, "master seed");
  validate->add_option("--out", json_path, "JSON report path (stdout if omitted)");
  validate->add_flag("--verbose", verbose, "per-instance progress");

  auto* init = app.add_subcommand("init", "write a default experiment config");
  init->add_option("--out", out_path, "output path (stdout if omitted)");
  init->add_option("--fading", fading, "rayleigh | rician");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_path, json_path, timing, progress);
    if (solve->parsed()) return cmd_solve(channels_path, objective, p_h_dbm, out_path);
    if (draw->parsed()) return cmd_draw(config_path, out_path, trial);
    if (validate->parsed()) return cmd_validate(instances, seed, verbose, json_path);
    if (init->parsed()) return cmd_init(out_path, fading);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
