#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "uavtwin/airframe.hpp"
#include "uavtwin/cell_network.hpp"
#include "uavtwin/link_layer.hpp"
#include "uavtwin/scenario.hpp"
#include "uavtwin/telemetry.hpp"

namespace uavtwin {

struct VelocityCommand {
  NodeId node_id;
  Velocity velocity;
};

/// A scripted command applied at the first tick whose start time is >= t_s.
struct TimedCommand {
  double t_s = 0.0;
  VelocityCommand command;
};

struct UavRuntime {
  UavState state;
  BatteryState vehicle_battery;
  BatteryState payload_battery;
  PowerDraw draw;
  Velocity commanded;

  double battery_fraction() const { return std::min(vehicle_battery.fraction(), payload_battery.fraction()); }
  bool operator==(const UavRuntime&) const = default;
};

/// Mutable simulation state. Node poses are live: aerial nodes follow their UAV.
struct WorldState {
  std::uint64_t tick_index = 0;
  double t_s = 0.0;
  std::vector<RadioNode> nodes;
  std::map<NodeId, UavRuntime> uavs;
  std::map<NodeId, HandoverState> handover;
  bool ended = false;

  const RadioNode* find_node(const NodeId& id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }
  bool operator==(const WorldState&) const = default;
};

/// Per attached node, the link metrics of one snapshot.
struct LinkReport {
  NodeId serving;
  double rsrp_dbm = 0.0;
  double snr_db = 0.0;
  double sinr_db = 0.0;
  double dl_mbps = 0.0;
  double ul_mbps = 0.0;
  bool saturated = false;
};

namespace detail {

inline std::vector<const RadioNode*> candidate_cells(std::span<const RadioNode> nodes, const RadioNode& ue) {
  std::vector<const RadioNode*> out;
  for (const auto& c : nodes) {
    if (c.id == ue.id) continue;
    if (ue.role == Role::RELAY ? c.role == Role::BS : serves_cells(c.role)) out.push_back(&c);
  }
  return out;
}

inline std::map<NodeId, double> measure(std::span<const RadioNode> nodes, const RadioNode& ue,
                                        const ChannelParams& channel, std::uint64_t sample) {
  std::map<NodeId, double> rsrp;
  for (const auto* c : candidate_cells(nodes, ue)) rsrp[c->id] = received_power_dbm(*c, ue, channel, sample);
  return rsrp;
}

inline const RadioNode& node_ref(std::span<const RadioNode> nodes, const NodeId& id) {
  for (const auto& n : nodes) {
    if (n.id == id) return n;
  }
  throw Error("unknown node '" + id + "'");
}

} // namespace detail

/// Link metrics for every attached node given a serving map. Relayed UEs get the
/// bottleneck of the access hop and the relay's own backhaul.
inline std::map<NodeId, LinkReport> compute_links(const Scenario& sc, std::span<const RadioNode> nodes,
                                                  const std::map<NodeId, NodeId>& serving, std::uint64_t sample) {
  const auto& ch = sc.channel;
  std::map<NodeId, LinkReport> out;

  // receive-port overload, per node, on the carrier it listens to
  std::map<NodeId, bool> cell_saturated;
  for (const auto& c : nodes) {
    if (!serves_cells(c.role)) continue;
    std::vector<double> inband;
    for (const auto& u : nodes) {
      if (u.id != c.id && attaches(u.role)) inband.push_back(received_power_dbm(u, c, ch, sample));
    }
    cell_saturated[c.id] = saturation_check(c, inband.empty() ? -INFINITY : sum_dbm(inband)) == SaturationStatus::Saturated;
  }

  for (const auto& u : nodes) {
    if (!attaches(u.role)) continue;
    const auto sv = serving.find(u.id);
    if (sv == serving.end()) continue;
    const RadioNode& cell = detail::node_ref(nodes, sv->second);

    LinkReport r;
    r.serving = cell.id;
    r.rsrp_dbm = received_power_dbm(cell, u, ch, sample);

    std::vector<double> dl_interf;
    std::vector<double> dl_inband{r.rsrp_dbm};
    for (const auto& other : nodes) {
      if (other.id == u.id || other.id == cell.id || !serves_cells(other.role)) continue;
      const double p = received_power_dbm(other, u, ch, sample);
      dl_interf.push_back(p);
      dl_inband.push_back(p);
    }
    const NoiseModel ue_noise{-174.0, cascade_noise_figure(u.rx_chain)};
    const double ue_floor = noise_floor_dbm(ue_noise, sc.profile);
    r.snr_db = r.rsrp_dbm - ue_floor;
    r.sinr_db = sinr_db(r.rsrp_dbm, dl_interf, ue_floor);
    r.saturated = saturation_check(u, sum_dbm(dl_inband)) == SaturationStatus::Saturated;

    const double ul_signal = received_power_dbm(u, cell, ch, sample);
    std::vector<double> ul_interf;
    for (const auto& other : nodes) {
      if (other.id == u.id || other.id == cell.id || !attaches(other.role)) continue;
      const auto os = serving.find(other.id);
      if (os != serving.end() && os->second == cell.id) continue;
      ul_interf.push_back(received_power_dbm(other, cell, ch, sample));
    }
    const NoiseModel cell_noise{-174.0, cascade_noise_figure(cell.rx_chain)};
    const double ul_sinr = sinr_db(ul_signal, ul_interf, noise_floor_dbm(cell_noise, sc.profile));

    r.dl_mbps = r.saturated ? 0.0 : throughput_mbps(snr_to_cqi(r.sinr_db, sc.profile), Direction::Downlink, sc.profile);
    r.ul_mbps = cell_saturated[cell.id] ? 0.0
                                        : throughput_mbps(snr_to_cqi(ul_sinr, sc.profile), Direction::Uplink, sc.profile);
    if (cell_saturated[cell.id]) r.saturated = true;
    out[u.id] = r;
  }

  for (auto& [id, r] : out) {
    const RadioNode& cell = detail::node_ref(nodes, r.serving);
    if (cell.role != Role::RELAY) continue;
    const auto backhaul = out.find(cell.id);
    if (backhaul == out.end()) {
      r.dl_mbps = r.ul_mbps = 0.0;
      continue;
    }
    r.dl_mbps = relay_throughput(r.dl_mbps, backhaul->second.dl_mbps);
    r.ul_mbps = relay_throughput(r.ul_mbps, backhaul->second.ul_mbps);
  }
  return out;
}

/// Post-load world: UAVs at their spawn poses, every attached node on its strongest cell.
inline WorldState initial_world(const Scenario& sc) {
  WorldState w;
  w.nodes = sc.nodes;
  for (const auto& [id, spec] : sc.uavs) {
    UavRuntime rt{spec.state, spec.vehicle_battery, spec.payload_battery, spec.draw, spec.state.velocity};
    if (const auto* n = sc.find_node(id)) rt.state.pose = n->pose;
    w.uavs[id] = rt;
  }
  for (const auto& u : w.nodes) {
    if (!attaches(u.role)) continue;
    auto rsrp = detail::measure(w.nodes, u, sc.channel, 0);
    if (rsrp.empty()) continue;
    w.handover[u.id] = HandoverState{associate(rsrp), std::nullopt, 0.0};
  }
  return w;
}

struct TickResult {
  WorldState world;
  std::vector<TelemetrySample> samples;
};

/// One fixed step: commands, kinematics, batteries, links, handover, throughput,
/// then one sample per attached node. An ended world is returned unchanged.
inline TickResult tick(const Scenario& sc, WorldState world, std::span<const VelocityCommand> commands, double dt_s) {
  if (!(dt_s > 0.0)) throw Error("tick needs dt > 0");
  if (world.ended) return {std::move(world), {}};

  for (const auto& c : commands) {
    auto it = world.uavs.find(c.node_id);
    if (it == world.uavs.end()) throw Error("velocity command for unknown UAV '" + c.node_id + "'");
    it->second.commanded = c.velocity;
  }

  std::vector<NodeId> landed;
  for (auto& [id, u] : world.uavs) {
    u.state = step_kinematics(u.state, u.commanded, dt_s);
    for (auto& n : world.nodes) {
      if (n.id == id) n.pose = u.state.pose;
    }
    u.vehicle_battery = drain(u.vehicle_battery, {u.draw.hover_w, 0.0}, dt_s);
    u.payload_battery = drain(u.payload_battery, {0.0, u.draw.payload_w}, dt_s);
    if (u.vehicle_battery.at_reserve() || u.payload_battery.at_reserve()) landed.push_back(id);
  }

  ++world.tick_index;
  world.t_s += dt_s;
  const std::uint64_t sample = world.tick_index;

  std::map<NodeId, std::vector<std::string>> events;
  for (const auto& u : world.nodes) {
    if (!attaches(u.role)) continue;
    auto rsrp = detail::measure(world.nodes, u, sc.channel, sample);
    if (rsrp.empty()) continue;
    auto hs = world.handover.find(u.id);
    if (hs == world.handover.end()) {
      world.handover[u.id] = HandoverState{associate(rsrp), std::nullopt, 0.0};
      continue;
    }
    auto outcome = handover_step(hs->second, rsrp, sc.handover, dt_s);
    hs->second = std::move(outcome.state);
    if (outcome.event) events[u.id].emplace_back(kEventHandover);
  }

  std::map<NodeId, NodeId> serving;
  for (const auto& [id, hs] : world.handover) serving[id] = hs.serving;
  const auto links = compute_links(sc, world.nodes, serving, sample);

  std::vector<TelemetrySample> samples;
  for (const auto& n : world.nodes) {
    const auto l = links.find(n.id);
    if (l == links.end()) continue;
    TelemetrySample s;
    s.t_s = world.t_s;
    s.node_id = n.id;
    s.x_m = n.pose.x;
    s.y_m = n.pose.y;
    s.z_m = n.pose.z;
    s.serving_cell = l->second.serving;
    s.rsrp_dbm = l->second.rsrp_dbm;
    s.snr_db = l->second.snr_db;
    s.sinr_db = l->second.sinr_db;
    s.dl_mbps = l->second.dl_mbps;
    s.ul_mbps = l->second.ul_mbps;
    const auto u = world.uavs.find(n.id);
    s.battery_pct = u == world.uavs.end() ? 1.0 : u->second.battery_fraction();
    s.events = events[n.id];
    if (l->second.saturated) s.events.emplace_back(kEventSaturation);
    samples.push_back(std::move(s));
  }

  for (const auto& id : landed) {
    bool placed = false;
    for (auto& s : samples) {
      if (s.node_id == id) {
        s.events.emplace_back(kEventForcedLanding);
        placed = true;
      }
    }
    if (!placed) {
      for (auto& s : samples) s.events.emplace_back(kEventForcedLanding);
    }
  }
  if (!landed.empty()) world.ended = true;
  return {std::move(world), std::move(samples)};
}

// ---------------------------------------------------------------------------
// coverage sweep

struct SweepPoint {
  double distance_m = 0.0;
  double height_m = 0.0;
  double dl_mbps = 0.0;
  double ul_mbps = 0.0;
};

/// The aerial UE (or first attached node) moved around by sweeps.
inline const RadioNode& sweep_probe(const Scenario& sc) {
  for (const auto& n : sc.nodes) {
    if (n.role == Role::UE && n.mount == Mount::AERIAL) return n;
  }
  for (const auto& n : sc.nodes) {
    if (attaches(n.role)) return n;
  }
  throw Error("scenario has no UE-role node to sweep");
}

/// Steady-state DL/UL with the probe parked at (d, 0, h) for every height and
/// distance, height-major in the order given.
inline std::vector<SweepPoint> sweep(const Scenario& sc, std::span<const double> distances_m,
                                     std::span<const double> heights_m) {
  const NodeId probe = sweep_probe(sc).id;
  std::vector<SweepPoint> out;
  out.reserve(distances_m.size() * heights_m.size());
  for (double h : heights_m) {
    for (double d : distances_m) {
      std::vector<RadioNode> nodes = sc.nodes;
      for (auto& n : nodes) {
        if (n.id == probe) n.pose = {d, 0.0, h};
      }
      std::map<NodeId, NodeId> serving;
      for (const auto& u : nodes) {
        if (!attaches(u.role)) continue;
        auto rsrp = detail::measure(nodes, u, sc.channel, 0);
        if (!rsrp.empty()) serving[u.id] = associate(rsrp);
      }
      const auto links = compute_links(sc, nodes, serving, 0);
      const auto& r = links.at(probe);
      out.push_back({d, h, r.dl_mbps, r.ul_mbps});
    }
  }
  return out;
}

inline constexpr std::string_view kSweepHeader = "distance_m,height_m,dl_mbps,ul_mbps";

template <class Range>
std::size_t write_sweep(const Range& points, std::ostream& out) {
  std::size_t bytes = 0;
  auto line = [&](const std::string& s) {
    out << s << '\n';
    bytes += s.size() + 1;
  };
  line(std::string(kSweepHeader));
  for (const SweepPoint& p : points) {
    line(format_fixed3(p.distance_m) + ',' + format_fixed3(p.height_m) + ',' + format_fixed3(p.dl_mbps) + ',' +
         format_fixed3(p.ul_mbps));
  }
  out.flush();
  if (!out) throw Error("sweep sink write failed");
  return bytes;
}

// ---------------------------------------------------------------------------
// scripted runs

/// Parses `t_s,node_id,vx,vy,vz` (header optional). Result is stably sorted by time.
inline std::vector<TimedCommand> read_command_trace(std::istream& in) {
  std::vector<TimedCommand> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("t_s", 0) == 0) continue;
    std::istringstream f(line);
    std::string t, id, vx, vy, vz;
    if (!std::getline(f, t, ',') || !std::getline(f, id, ',') || !std::getline(f, vx, ',') ||
        !std::getline(f, vy, ',') || !std::getline(f, vz)) {
      throw Error("command trace line " + std::to_string(line_no) + ": expected 5 fields");
    }
    try {
      out.push_back({std::stod(t), {id, {std::stod(vx), std::stod(vy), std::stod(vz)}}});
    } catch (const std::logic_error&) {
      throw Error("command trace line " + std::to_string(line_no) + ": not a number");
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t_s < b.t_s; });
  return out;
}

/// Owns one scenario and its world; the single writer of simulation state.
class Simulation {
public:
  explicit Simulation(Scenario scenario) : scenario_(std::move(scenario)), world_(initial_world(scenario_)) {}

  const Scenario& scenario() const { return scenario_; }
  const WorldState& world() const { return world_; }
  bool ended() const { return world_.ended; }

  std::vector<TelemetrySample> step(std::span<const VelocityCommand> commands = {}) {
    auto r = tick(scenario_, std::move(world_), commands, scenario_.tick_s);
    world_ = std::move(r.world);
    return std::move(r.samples);
  }

  void reset() { world_ = initial_world(scenario_); }

private:
  Scenario scenario_;
  WorldState world_;
};

/// Runs a scripted flight for `duration_s` (or until a forced landing), handing
/// every sample to `sink`. Returns the number of ticks executed.
template <class Sink>
std::uint64_t run_scripted(const Scenario& sc, std::span<const TimedCommand> trace, double duration_s, Sink&& sink) {
  Simulation sim(sc);
  for (const auto& c : trace) {
    if (!sim.world().uavs.contains(c.command.node_id)) {
      throw Error("command trace names unknown UAV '" + c.command.node_id + "'");
    }
  }
  const auto ticks = static_cast<std::uint64_t>(std::ceil(duration_s / sc.tick_s - 1e-9));
  std::size_t next = 0;
  std::uint64_t done = 0;
  for (; done < ticks && !sim.ended(); ++done) {
    const double tick_start = sim.world().t_s;
    std::vector<VelocityCommand> due;
    while (next < trace.size() && trace[next].t_s <= tick_start + 1e-9) due.push_back(trace[next++].command);
    for (const auto& s : sim.step(due)) sink(s);
  }
  return done;
}

} // namespace uavtwin
