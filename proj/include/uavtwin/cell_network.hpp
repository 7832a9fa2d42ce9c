#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uavtwin/common.hpp"
#include "uavtwin/propagation.hpp"
#include "uavtwin/rf_chain.hpp"

namespace uavtwin {

enum class Role { BS, UE, RELAY };
enum class Mount { FIXED, AERIAL };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::BS: return "BS";
    case Role::UE: return "UE";
    case Role::RELAY: return "RELAY";
  }
  return "?";
}

inline std::string_view to_string(Mount m) { return m == Mount::FIXED ? "FIXED" : "AERIAL"; }

inline constexpr double kFixedIsolationDb = 40.0;
inline constexpr double kAerialIsolationDb = 30.0;

inline double default_isolation_db(Mount m) { return m == Mount::FIXED ? kFixedIsolationDb : kAerialIsolationDb; }

/// A BS, UE or relay, on the ground or on a UAV. Role and mount are independent.
struct RadioNode {
  NodeId id;
  Role role = Role::UE;
  Mount mount = Mount::FIXED;
  Pose pose;
  RfChain tx_chain;
  RfChain rx_chain;
  double tx_antenna_gain_dbi = 0.0;
  double rx_antenna_gain_dbi = 0.0;
  double tx_rx_isolation_db = kFixedIsolationDb;
  double max_rx_input_dbm = 0.0;

  bool operator==(const RadioNode&) const = default;
};

/// Nodes that transmit a downlink a UE can camp on.
inline bool serves_cells(Role r) { return r == Role::BS || r == Role::RELAY; }
/// Nodes that attach to a cell as a UE.
inline bool attaches(Role r) { return r == Role::UE || r == Role::RELAY; }

inline double eirp_dbm(const RadioNode& n) {
  return effective_isotropic_radiated_power(n.tx_chain, n.tx_antenna_gain_dbi);
}

/// Wideband power from `tx` at `rx`'s antenna port (also the RSRP proxy).
inline double received_power_dbm(const RadioNode& tx, const RadioNode& rx, const ChannelParams& channel,
                                 std::uint64_t sample_index = 0) {
  const double pl = path_loss_db(channel, tx.pose, rx.pose, {link_id(tx.id, rx.id), sample_index});
  return rx_power_dbm(eirp_dbm(tx), rx.rx_antenna_gain_dbi, pl);
}

/// Strongest entry; ties go to the lowest id.
inline NodeId associate(const std::map<NodeId, double>& rsrp_dbm) {
  if (rsrp_dbm.empty()) throw NoCoverageError("no cell to associate with");
  auto best = rsrp_dbm.begin();
  for (auto it = rsrp_dbm.begin(); it != rsrp_dbm.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

inline NodeId associate(const RadioNode& ue, std::span<const RadioNode> cells, const ChannelParams& channel,
                        std::uint64_t sample_index = 0) {
  std::map<NodeId, double> rsrp;
  for (const auto& c : cells) {
    if (!serves_cells(c.role) || c.id == ue.id) continue;
    rsrp[c.id] = received_power_dbm(c, ue, channel, sample_index);
  }
  return associate(rsrp);
}

inline double sinr_db(double serving_dbm, std::span<const double> interferers_dbm, double noise_dbm) {
  double denom = db_to_linear(noise_dbm);
  for (double i : interferers_dbm) denom += db_to_linear(i);
  return serving_dbm - linear_to_db(denom);
}

inline double sinr_at(const RadioNode& ue, const RadioNode& serving, std::span<const RadioNode> interferers,
                      double noise_dbm, const ChannelParams& channel, std::uint64_t sample_index = 0) {
  std::vector<double> powers;
  powers.reserve(interferers.size());
  for (const auto& i : interferers) {
    if (i.id == serving.id) throw Error("serving cell '" + serving.id + "' listed as an interferer");
    if (i.id == ue.id) throw Error("node '" + ue.id + "' listed as its own interferer");
    powers.push_back(received_power_dbm(i, ue, channel, sample_index));
  }
  return sinr_db(received_power_dbm(serving, ue, channel, sample_index), powers, noise_dbm);
}

struct HandoverConfig {
  double hysteresis_db = 3.0;
  double time_to_trigger_s = 0.48;

  bool operator==(const HandoverConfig&) const = default;
};

struct HandoverState {
  NodeId serving;
  std::optional<NodeId> candidate;
  double dwell_s = 0.0;

  bool operator==(const HandoverState&) const = default;
};

struct HandoverEvent {
  NodeId from;
  NodeId to;
};

struct HandoverOutcome {
  HandoverState state;
  std::optional<HandoverEvent> event;
};

/// A3-style trigger: the strongest neighbour must beat serving by more than the
/// hysteresis for an unbroken time_to_trigger before it takes over. A serving
/// cell missing from `rsrp_dbm` counts as -inf.
inline HandoverOutcome handover_step(HandoverState state, const std::map<NodeId, double>& rsrp_dbm,
                                     const HandoverConfig& config, double dt_s) {
  if (!(dt_s > 0.0)) throw Error("handover step needs dt > 0");
  const auto serving_it = rsrp_dbm.find(state.serving);
  const double serving = serving_it == rsrp_dbm.end() ? -INFINITY : serving_it->second;

  std::optional<NodeId> best;
  double best_rsrp = -INFINITY;
  for (const auto& [id, p] : rsrp_dbm) {
    if (id == state.serving) continue;
    if (p > serving + config.hysteresis_db && p > best_rsrp) {
      best = id;
      best_rsrp = p;
    }
  }

  if (!best) {
    state.candidate.reset();
    state.dwell_s = 0.0;
    return {std::move(state), std::nullopt};
  }
  if (state.candidate != best) {
    state.candidate = best;
    state.dwell_s = 0.0;
  }
  state.dwell_s += dt_s;
  if (state.dwell_s + 1e-9 >= config.time_to_trigger_s) {
    HandoverEvent ev{state.serving, *best};
    return {HandoverState{*best, std::nullopt, 0.0}, ev};
  }
  return {std::move(state), std::nullopt};
}

enum class SaturationStatus { Ok, Saturated };

/// Front-end overload: desired + interference + own Tx leakage through the
/// antenna isolation, summed in milliwatts against the maximum input.
inline SaturationStatus saturation_check(double own_tx_dbm, double tx_rx_isolation_db, double inband_dbm,
                                         double max_rx_input_dbm) {
  const double total = sum_dbm(own_tx_dbm - tx_rx_isolation_db, inband_dbm);
  return total > max_rx_input_dbm ? SaturationStatus::Saturated : SaturationStatus::Ok;
}

inline SaturationStatus saturation_check(const RadioNode& node, double total_inband_power_dbm) {
  return saturation_check(transmit_output(node.tx_chain).p_out_dbm, node.tx_rx_isolation_db,
                          total_inband_power_dbm, node.max_rx_input_dbm);
}

inline double relay_throughput(double hop1_mbps, double hop2_mbps) {
  if (hop1_mbps < 0.0 || hop2_mbps < 0.0) throw Error("hop throughput must be non-negative");
  return std::min(hop1_mbps, hop2_mbps);
}

} // namespace uavtwin
