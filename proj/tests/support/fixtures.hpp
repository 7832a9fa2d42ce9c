#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "uavtwin/engine.hpp"
#include "uavtwin/scenario.hpp"

namespace uavtwin::fixtures {

/// Two fixed eNBs 1 km apart with the aerial UE spawned near the first one.
inline Scenario two_cell_flyby() {
  Scenario sc = paper_replica();
  sc.nodes.clear();
  sc.uavs.clear();
  const Pose spawn{150.0, 0.0, 30.0};
  sc.nodes.push_back(replica::fixed_enb("enb1", {0.0, 0.0, 2.5}));
  sc.nodes.push_back(replica::fixed_enb("enb2", {1000.0, 0.0, 2.5}));
  sc.nodes.push_back(replica::aerial_ue("uav1", spawn));
  sc.uavs["uav1"] = replica::hexacopter(spawn);
  sc.duration_s = 70.0;
  return sc;
}

/// Eastward 10 m/s from t = 0: 150 m to 850 m over 70 s.
inline std::vector<TimedCommand> eastward_trace() { return {{0.0, {"uav1", {10.0, 0.0, 0.0}}}}; }

inline std::vector<TelemetrySample> run_all(const Scenario& sc, const std::vector<TimedCommand>& trace, double duration) {
  std::vector<TelemetrySample> out;
  run_scripted(sc, trace, duration, [&out](const TelemetrySample& s) { out.push_back(s); });
  return out;
}

inline int count_event(const std::vector<TelemetrySample>& samples, std::string_view ev) {
  int n = 0;
  for (const auto& s : samples) n += s.has_event(ev) ? 1 : 0;
  return n;
}

/// Neighbour alternates between +10 dB and -10 dB relative to serving, holding
/// each level for `hold_ticks` ticks.
inline std::vector<std::map<NodeId, double>> ping_pong_trace(int periods, int hold_ticks) {
  std::vector<std::map<NodeId, double>> out;
  for (int p = 0; p < periods; ++p) {
    for (int k = 0; k < hold_ticks; ++k) out.push_back({{"A", -80.0}, {"B", -70.0}});
    for (int k = 0; k < hold_ticks; ++k) out.push_back({{"A", -80.0}, {"B", -90.0}});
  }
  return out;
}

inline int count_handovers(const std::vector<std::map<NodeId, double>>& trace, const HandoverConfig& cfg, double dt,
                           NodeId start = "A") {
  HandoverState st{std::move(start), std::nullopt, 0.0};
  int events = 0;
  for (const auto& m : trace) {
    auto r = handover_step(st, m, cfg, dt);
    st = r.state;
    events += r.event ? 1 : 0;
  }
  return events;
}

/// Random chain of 1..6 stages with gains in [-3, 30] dB and NFs in [0, 12] dB.
inline std::vector<RfStage> random_stages(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_real_distribution<double> gain(-3.0, 30.0);
  std::uniform_real_distribution<double> nf(0.0, 12.0);
  std::vector<RfStage> out(static_cast<std::size_t>(count(rng)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].name = "s" + std::to_string(i);
    out[i].gain_db = gain(rng);
    out[i].noise_figure_db = nf(rng);
  }
  return out;
}

} // namespace uavtwin::fixtures
