#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wpcn/rng.hpp"

namespace wpcn {

inline double to_linear(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

enum class FadingType { Rayleigh, Rician };

struct NodePosition {
  double r = 1.0;      // meters
  double theta = 0.0;  // radians
};

// Static problem description; all randomness derives from `seed`.
struct Scenario {
  std::vector<NodePosition> node_positions;
  int num_antennas = 1;
  double bs_power_dbm = 30.0;
  double noise_dbm = -100.0;
  double path_loss_exponent = 3.0;
  std::vector<double> efficiencies;  // size 1 (broadcast) or K
  FadingType fading = FadingType::Rayleigh;
  double k_factor = 0.0;  // Rician only; +inf = deterministic LOS test hook
  std::uint64_t seed = 0;
  bool symmetric_cross = false;  // force h_cross reciprocity

  int K() const { return static_cast<int>(node_positions.size()); }

  double efficiency(int i) const {
    if (efficiencies.empty()) return 1.0;
    return efficiencies.size() == 1 ? efficiencies[0] : efficiencies.at(i);
  }

  void validate() const {
    if (node_positions.empty()) throw std::invalid_argument("scenario: needs at least one node");
    for (const auto& p : node_positions)
      if (!(p.r > 0.0)) throw std::invalid_argument("scenario: node radius must be positive");
    if (num_antennas < 1) throw std::invalid_argument("scenario: num_antennas must be >= 1");
    if (!(path_loss_exponent > 0.0)) throw std::invalid_argument("scenario: path_loss_exponent must be positive");
    if (!(efficiencies.empty() || efficiencies.size() == 1 ||
          efficiencies.size() == node_positions.size()))
      throw std::invalid_argument("scenario: efficiencies must be scalar or per-node");
    for (std::size_t i = 0; i < efficiencies.size(); ++i)
      if (!(efficiencies[i] >= 0.0 && efficiencies[i] <= 1.0))
        throw std::invalid_argument("scenario: efficiency outside [0,1]");
    if (fading == FadingType::Rician && (std::isnan(k_factor) || k_factor < 0.0))
      throw std::invalid_argument("scenario: Rician K factor must be >= 0");
  }
};

// One fading draw. Nodes are index-sorted by mu descending; node_ids maps the
// sorted position back to the index in Scenario::node_positions.
struct ChannelRealization {
  std::vector<std::vector<std::complex<double>>> g;  // K x N downlink
  std::vector<std::complex<double>> h;               // K uplink
  std::vector<std::vector<std::complex<double>>> h_cross;  // K x K, zero diagonal
  std::vector<double> mu;    // ||g_i||^2
  std::vector<double> zeta;  // |h_i|^2 / sigma2
  std::vector<std::vector<double>> xi_raw;  // |h_ij|^2 / sigma2, zero diagonal
  std::vector<double> eta;   // per node, sorted order
  std::vector<int> node_ids; // physical index per sorted position
  double sigma2 = 0.0;       // watts

  int K() const { return static_cast<int>(h.size()); }
  int N() const { return g.empty() ? 0 : static_cast<int>(g[0].size()); }

  void finalize_derived() {
    const int k = K();
    mu.assign(k, 0.0);
    zeta.assign(k, 0.0);
    xi_raw.assign(k, std::vector<double>(k, 0.0));
    for (int i = 0; i < k; ++i) {
      double m = 0.0;
      for (const auto& v : g[i]) m += std::norm(v);
      mu[i] = m;
      zeta[i] = std::norm(h[i]) / sigma2;
      for (int j = 0; j < k; ++j)
        if (j != i) xi_raw[i][j] = std::norm(h_cross[i][j]) / sigma2;
    }
  }
};

namespace detail {

inline constexpr std::uint64_t kStreamDownlink = 1;
inline constexpr std::uint64_t kStreamUplink = 2;
inline constexpr std::uint64_t kStreamCross = 3;

// Unit-variance fading sample; Rician splits power between a deterministic
// unit-phase LOS term and a diffuse CN(0,1) term.
inline std::complex<double> fading_sample(FadingType type, double k_factor, Substream& s) {
  if (type == FadingType::Rayleigh) return s.next_cn01();
  if (std::isinf(k_factor)) return {1.0, 0.0};
  const double los = std::sqrt(k_factor / (k_factor + 1.0));
  const double dif = std::sqrt(1.0 / (k_factor + 1.0));
  return std::complex<double>{los, 0.0} + dif * s.next_cn01();
}

inline double node_distance(const NodePosition& a, const NodePosition& b) {
  const double ax = a.r * std::cos(a.theta), ay = a.r * std::sin(a.theta);
  const double bx = b.r * std::cos(b.theta), by = b.r * std::sin(b.theta);
  return std::hypot(ax - bx, ay - by);
}

}  // namespace detail

inline ChannelRealization draw_channels(const Scenario& sc) {
  sc.validate();
  const int k = sc.K();
  const int n = sc.num_antennas;
  const double alpha = sc.path_loss_exponent;

  ChannelRealization ch;
  ch.sigma2 = to_linear(sc.noise_dbm);
  ch.g.assign(k, std::vector<std::complex<double>>(n));
  ch.h.assign(k, {});
  ch.h_cross.assign(k, std::vector<std::complex<double>>(k, {0.0, 0.0}));
  ch.eta.resize(k);
  ch.node_ids.resize(k);

  for (int i = 0; i < k; ++i) {
    const double amp = std::pow(sc.node_positions[i].r, -alpha / 2.0);
    Substream down(substream_key(sc.seed, detail::kStreamDownlink, i));
    for (int a = 0; a < n; ++a)
      ch.g[i][a] = amp * detail::fading_sample(sc.fading, sc.k_factor, down);
    Substream up(substream_key(sc.seed, detail::kStreamUplink, i));
    ch.h[i] = amp * detail::fading_sample(sc.fading, sc.k_factor, up);
    ch.eta[i] = sc.efficiency(i);
    ch.node_ids[i] = i;
  }

  // Inter-node links are always Rayleigh.
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      if (sc.symmetric_cross && i > j) {
        ch.h_cross[i][j] = ch.h_cross[j][i];
        continue;
      }
      const double amp =
          std::pow(detail::node_distance(sc.node_positions[i], sc.node_positions[j]), -alpha / 2.0);
      Substream cross(substream_key(sc.seed, detail::kStreamCross, i, j));
      ch.h_cross[i][j] = amp * detail::fading_sample(FadingType::Rayleigh, 0.0, cross);
    }
  }

  ch.finalize_derived();

  // Sort positions by mu descending (stable: ties keep physical order).
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ch.mu[a] > ch.mu[b]; });

  ChannelRealization out;
  out.sigma2 = ch.sigma2;
  out.g.resize(k);
  out.h.resize(k);
  out.h_cross.assign(k, std::vector<std::complex<double>>(k));
  out.eta.resize(k);
  out.node_ids.resize(k);
  for (int s = 0; s < k; ++s) {
    out.g[s] = std::move(ch.g[order[s]]);
    out.h[s] = ch.h[order[s]];
    out.eta[s] = ch.eta[order[s]];
    out.node_ids[s] = order[s];
    for (int t = 0; t < k; ++t) out.h_cross[s][t] = ch.h_cross[order[s]][order[t]];
  }
  out.finalize_derived();
  return out;
}

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  if (!j.contains("nodes") || !j["nodes"].is_array())
    throw std::invalid_argument("scenario json: missing 'nodes' array");
  for (const auto& nj : j["nodes"])
    sc.node_positions.push_back({nj.at("r").get<double>(), nj.at("theta").get<double>()});
  sc.num_antennas = j.value("n_antennas", 1);
  if (j.contains("p_h_dbm")) {
    const auto& p = j["p_h_dbm"];
    sc.bs_power_dbm = p.is_array() ? p.front().get<double>() : p.get<double>();
  }
  sc.noise_dbm = j.value("sigma2_dbm", -100.0);
  sc.path_loss_exponent = j.value("alpha", 3.0);
  if (j.contains("eta")) {
    const auto& e = j["eta"];
    if (e.is_array())
      sc.efficiencies = e.get<std::vector<double>>();
    else
      sc.efficiencies = {e.get<double>()};
  }
  if (j.contains("fading")) {
    const auto& f = j["fading"];
    std::string type = f.value("type", "rayleigh");
    std::transform(type.begin(), type.end(), type.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (type == "rayleigh") {
      sc.fading = FadingType::Rayleigh;
    } else if (type == "rician") {
      sc.fading = FadingType::Rician;
      sc.k_factor = f.value("k_factor", 0.0);
    } else {
      throw std::invalid_argument("scenario json: unknown fading type '" + type + "'");
    }
  }
  sc.seed = j.value("seed", std::uint64_t{0});
  sc.symmetric_cross = j.value("symmetric_cross", false);
  sc.validate();
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  for (const auto& p : sc.node_positions) j["nodes"].push_back({{"r", p.r}, {"theta", p.theta}});
  j["n_antennas"] = sc.num_antennas;
  j["p_h_dbm"] = sc.bs_power_dbm;
  j["sigma2_dbm"] = sc.noise_dbm;
  j["alpha"] = sc.path_loss_exponent;
  if (!sc.efficiencies.empty())
    j["eta"] = sc.efficiencies.size() == 1 ? nlohmann::json(sc.efficiencies[0])
                                           : nlohmann::json(sc.efficiencies);
  if (sc.fading == FadingType::Rician)
    j["fading"] = {{"type", "rician"}, {"k_factor", sc.k_factor}};
  else
    j["fading"] = {{"type", "rayleigh"}};
  j["seed"] = sc.seed;
  if (sc.symmetric_cross) j["symmetric_cross"] = true;
  return j;
}

namespace detail {

inline nlohmann::json complex_to_json(const std::complex<double>& z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

inline std::complex<double> complex_from_json(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace detail

inline nlohmann::json channels_to_json(const ChannelRealization& ch) {
  nlohmann::json j;
  j["sigma2_w"] = ch.sigma2;
  for (const auto& row : ch.g) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& z : row) r.push_back(detail::complex_to_json(z));
    j["g"].push_back(std::move(r));
  }
  for (const auto& z : ch.h) j["h"].push_back(detail::complex_to_json(z));
  for (const auto& row : ch.h_cross) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& z : row) r.push_back(detail::complex_to_json(z));
    j["h_cross"].push_back(std::move(r));
  }
  j["eta"] = ch.eta;
  j["node_ids"] = ch.node_ids;
  return j;
}

inline ChannelRealization channels_from_json(const nlohmann::json& j) {
  ChannelRealization ch;
  ch.sigma2 = j.at("sigma2_w").get<double>();
  for (const auto& row : j.at("g")) {
    std::vector<std::complex<double>> r;
    for (const auto& z : row) r.push_back(detail::complex_from_json(z));
    ch.g.push_back(std::move(r));
  }
  for (const auto& z : j.at("h")) ch.h.push_back(detail::complex_from_json(z));
  for (const auto& row : j.at("h_cross")) {
    std::vector<std::complex<double>> r;
    for (const auto& z : row) r.push_back(detail::complex_from_json(z));
    ch.h_cross.push_back(std::move(r));
  }
  const int k = ch.K();
  ch.eta = j.value("eta", std::vector<double>(k, 1.0));
  if (j.contains("node_ids")) {
    ch.node_ids = j["node_ids"].get<std::vector<int>>();
  } else {
    ch.node_ids.resize(k);
    std::iota(ch.node_ids.begin(), ch.node_ids.end(), 0);
  }
  if (!(ch.sigma2 > 0.0)) throw std::invalid_argument("channels json: sigma2_w must be positive");
  ch.finalize_derived();
  return ch;
}

}  // namespace wpcn
