#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavtwin/airframe.hpp"
#include "uavtwin/cell_network.hpp"
#include "uavtwin/link_layer.hpp"
#include "uavtwin/propagation.hpp"
#include "uavtwin/rf_chain.hpp"

namespace uavtwin {

inline constexpr int kScenarioSchema = 1;

/// Everything the engine needs to fly one UAV: kinematic limits, the two
/// independent batteries (vehicle and radio payload) and their loads.
struct UavSpec {
  UavState state;
  BatteryState vehicle_battery;
  BatteryState payload_battery;
  PowerDraw draw;

  bool operator==(const UavSpec&) const = default;
};

struct Scenario {
  ChannelParams channel;
  LinkProfile profile;
  std::vector<RadioNode> nodes;
  std::map<NodeId, UavSpec> uavs;
  HandoverConfig handover;
  double tick_s = 0.1;
  std::optional<double> duration_s;

  const RadioNode* find_node(const NodeId& id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }

  bool operator==(const Scenario&) const = default;
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

using nlohmann::json;

inline Role role_from(const std::string& s) {
  if (s == "BS") return Role::BS;
  if (s == "UE") return Role::UE;
  if (s == "RELAY") return Role::RELAY;
  throw ScenarioError("unknown role '" + s + "'");
}

inline Mount mount_from(const std::string& s) {
  if (s == "FIXED") return Mount::FIXED;
  if (s == "AERIAL") return Mount::AERIAL;
  throw ScenarioError("unknown mount '" + s + "'");
}

inline json stage_to_json(const RfStage& s) {
  json j{{"name", s.name}, {"gain_db", s.gain_db}, {"noise_figure_db", s.noise_figure_db}};
  if (s.p1db_out_dbm) j["p1db_out_dbm"] = *s.p1db_out_dbm;
  if (s.oip3_dbm) j["oip3_dbm"] = *s.oip3_dbm;
  if (s.passband) j["passband_mhz"] = {s.passband->low_mhz, s.passband->high_mhz};
  return j;
}

inline RfStage stage_from_json(const json& j) {
  RfStage s;
  s.name = j.value("name", std::string{});
  s.gain_db = j.at("gain_db").get<double>();
  s.noise_figure_db = j.value("noise_figure_db", 0.0);
  if (j.contains("p1db_out_dbm") && !j["p1db_out_dbm"].is_null()) s.p1db_out_dbm = j["p1db_out_dbm"].get<double>();
  if (j.contains("oip3_dbm") && !j["oip3_dbm"].is_null()) s.oip3_dbm = j["oip3_dbm"].get<double>();
  if (j.contains("passband_mhz") && !j["passband_mhz"].is_null()) {
    const auto& pb = j["passband_mhz"];
    if (!pb.is_array() || pb.size() != 2) throw ScenarioError("passband_mhz must be [low, high]");
    s.passband = Passband{pb[0].get<double>(), pb[1].get<double>()};
  }
  return s;
}

inline json chain_to_json(const RfChain& c) {
  json stages = json::array();
  for (const auto& s : c.stages) stages.push_back(stage_to_json(s));
  json anchors = json::array();
  for (const auto& [g, v] : c.sdr_calibration.anchors) anchors.push_back({g, v});
  return {{"stages", stages},
          {"sdr_gain_setting", c.sdr_gain_setting},
          {"sdr_calibration",
           {{"anchors", anchors},
            {"slope_db_per_step", c.sdr_calibration.slope_db_per_step},
            {"max_extrapolation_steps", c.sdr_calibration.max_extrapolation_steps}}},
          {"papr_db", c.papr_db}};
}

inline RfChain chain_from_json(const json& j) {
  RfChain c;
  for (const auto& s : j.value("stages", json::array())) c.stages.push_back(stage_from_json(s));
  c.sdr_gain_setting = j.value("sdr_gain_setting", 0.0);
  if (j.contains("sdr_calibration")) {
    const auto& cal = j["sdr_calibration"];
    for (const auto& a : cal.value("anchors", json::array())) {
      if (!a.is_array() || a.size() != 2) throw ScenarioError("calibration anchor must be [gain, value]");
      c.sdr_calibration.anchors[a[0].get<double>()] = a[1].get<double>();
    }
    c.sdr_calibration.slope_db_per_step = cal.value("slope_db_per_step", 1.0);
    c.sdr_calibration.max_extrapolation_steps = cal.value("max_extrapolation_steps", 10.0);
  }
  c.papr_db = j.value("papr_db", kDefaultPaprDb);
  return c;
}

inline json pose_to_json(const Pose& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}}; }
inline Pose pose_from_json(const json& j) { return {j.value("x", 0.0), j.value("y", 0.0), j.value("z", 0.0)}; }

inline json battery_to_json(const BatteryState& b) {
  return {{"capacity_mah", b.capacity_mah},
          {"voltage_v", b.voltage_v},
          {"charge_mah", b.charge_mah},
          {"reserve_fraction", b.reserve_fraction}};
}

inline BatteryState battery_from_json(const json& j) {
  BatteryState b;
  b.capacity_mah = j.at("capacity_mah").get<double>();
  b.voltage_v = j.at("voltage_v").get<double>();
  b.charge_mah = j.value("charge_mah", b.capacity_mah);
  b.reserve_fraction = j.value("reserve_fraction", 0.1);
  return b;
}

} // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : sc.nodes) {
    nodes.push_back({{"id", n.id},
                     {"role", std::string(to_string(n.role))},
                     {"mount", std::string(to_string(n.mount))},
                     {"pose", detail::pose_to_json(n.pose)},
                     {"tx_chain", detail::chain_to_json(n.tx_chain)},
                     {"rx_chain", detail::chain_to_json(n.rx_chain)},
                     {"tx_antenna_gain_dbi", n.tx_antenna_gain_dbi},
                     {"rx_antenna_gain_dbi", n.rx_antenna_gain_dbi},
                     {"tx_rx_isolation_db", n.tx_rx_isolation_db},
                     {"max_rx_input_dbm", n.max_rx_input_dbm}});
  }
  json uavs = json::object();
  for (const auto& [id, u] : sc.uavs) {
    uavs[id] = {{"velocity", {u.state.velocity.vx, u.state.velocity.vy, u.state.velocity.vz}},
                {"max_speed", u.state.max_speed},
                {"max_climb", u.state.max_climb},
                {"vehicle_battery", detail::battery_to_json(u.vehicle_battery)},
                {"payload_battery", detail::battery_to_json(u.payload_battery)},
                {"hover_power_w", u.draw.hover_w},
                {"payload_power_w", u.draw.payload_w}};
  }
  json table = json::array();
  for (std::size_t i = 0; i < sc.profile.cqi_table.size(); ++i) {
    table.push_back({{"cqi", i + 1},
                     {"snr_threshold_db", sc.profile.cqi_table[i].snr_threshold_db},
                     {"efficiency_bps_hz", sc.profile.cqi_table[i].efficiency_bps_hz}});
  }
  const auto& p = sc.profile;
  return {{"schema", kScenarioSchema},
          {"channel",
           {{"freq_mhz", sc.channel.freq_mhz},
            {"pathloss_exponent", sc.channel.pathloss_exponent},
            {"shadowing_sigma_db", sc.channel.shadowing_sigma_db},
            {"rng_seed", sc.channel.rng_seed}}},
          {"profile",
           {{"bandwidth_mhz", p.bandwidth_mhz},
            {"usable_bandwidth_mhz", p.usable_bandwidth_mhz},
            {"dl_overhead", p.dl_overhead},
            {"ul_overhead", p.ul_overhead},
            {"dl_cap_mbps", p.dl_cap_mbps},
            {"ul_cap_mbps", p.ul_cap_mbps},
            {"dl_impl_factor", p.dl_impl_factor},
            {"ul_impl_factor", p.ul_impl_factor},
            {"cqi_table", table}}},
          {"handover", {{"hysteresis_db", sc.handover.hysteresis_db}, {"time_to_trigger_s", sc.handover.time_to_trigger_s}}},
          {"tick_s", sc.tick_s},
          {"duration_s", sc.duration_s ? json(*sc.duration_s) : json(nullptr)},
          {"nodes", nodes},
          {"uavs", uavs}};
}

/// Builds a scenario from its JSON document. A string-valued `cqi_table` names a
/// CSV file resolved against `base_dir`.
inline Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using nlohmann::json;
  try {
    if (!j.is_object()) throw ScenarioError("scenario document must be an object");
    const int schema = j.value("schema", 0);
    if (schema != kScenarioSchema) {
      throw ScenarioError("unsupported scenario schema " + std::to_string(schema) + " (expected 1)");
    }
    Scenario sc;
    if (j.contains("channel")) {
      const auto& c = j["channel"];
      sc.channel.freq_mhz = c.value("freq_mhz", sc.channel.freq_mhz);
      sc.channel.pathloss_exponent = c.value("pathloss_exponent", sc.channel.pathloss_exponent);
      sc.channel.shadowing_sigma_db = c.value("shadowing_sigma_db", sc.channel.shadowing_sigma_db);
      sc.channel.rng_seed = c.value("rng_seed", sc.channel.rng_seed);
    }
    if (j.contains("profile")) {
      const auto& p = j["profile"];
      auto& out = sc.profile;
      out.bandwidth_mhz = p.value("bandwidth_mhz", out.bandwidth_mhz);
      out.usable_bandwidth_mhz = p.value("usable_bandwidth_mhz", out.usable_bandwidth_mhz);
      out.dl_overhead = p.value("dl_overhead", out.dl_overhead);
      out.ul_overhead = p.value("ul_overhead", out.ul_overhead);
      out.dl_cap_mbps = p.value("dl_cap_mbps", out.dl_cap_mbps);
      out.ul_cap_mbps = p.value("ul_cap_mbps", out.ul_cap_mbps);
      out.dl_impl_factor = p.value("dl_impl_factor", out.dl_impl_factor);
      out.ul_impl_factor = p.value("ul_impl_factor", out.ul_impl_factor);
      if (p.contains("cqi_table")) {
        const auto& t = p["cqi_table"];
        if (t.is_string()) {
          const auto path = base_dir / t.get<std::string>();
          std::ifstream in(path);
          if (!in) throw ScenarioError("cannot open CQI table " + path.string());
          out.cqi_table = read_cqi_table_csv(in);
        } else {
          out.cqi_table.clear();
          for (const auto& row : t) {
            out.cqi_table.push_back({row.at("snr_threshold_db").get<double>(), row.at("efficiency_bps_hz").get<double>()});
          }
        }
      }
    }
    if (j.contains("handover")) {
      sc.handover.hysteresis_db = j["handover"].value("hysteresis_db", sc.handover.hysteresis_db);
      sc.handover.time_to_trigger_s = j["handover"].value("time_to_trigger_s", sc.handover.time_to_trigger_s);
    }
    sc.tick_s = j.value("tick_s", sc.tick_s);
    if (j.contains("duration_s") && !j["duration_s"].is_null()) sc.duration_s = j["duration_s"].get<double>();

    for (const auto& n : j.at("nodes")) {
      RadioNode node;
      node.id = n.at("id").get<std::string>();
      node.role = detail::role_from(n.at("role").get<std::string>());
      node.mount = detail::mount_from(n.value("mount", std::string("FIXED")));
      if (n.contains("pose")) node.pose = detail::pose_from_json(n["pose"]);
      if (n.contains("tx_chain")) node.tx_chain = detail::chain_from_json(n["tx_chain"]);
      if (n.contains("rx_chain")) node.rx_chain = detail::chain_from_json(n["rx_chain"]);
      node.tx_antenna_gain_dbi = n.value("tx_antenna_gain_dbi", 0.0);
      node.rx_antenna_gain_dbi = n.value("rx_antenna_gain_dbi", 0.0);
      node.tx_rx_isolation_db = n.value("tx_rx_isolation_db", default_isolation_db(node.mount));
      node.max_rx_input_dbm = n.value("max_rx_input_dbm", 0.0);
      sc.nodes.push_back(std::move(node));
    }
    if (j.contains("uavs")) {
      for (const auto& [id, u] : j["uavs"].items()) {
        UavSpec spec;
        if (u.contains("velocity")) {
          const auto& v = u["velocity"];
          spec.state.velocity = {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
        }
        spec.state.max_speed = u.value("max_speed", spec.state.max_speed);
        spec.state.max_climb = u.value("max_climb", spec.state.max_climb);
        spec.vehicle_battery = detail::battery_from_json(u.at("vehicle_battery"));
        spec.payload_battery = detail::battery_from_json(u.at("payload_battery"));
        spec.draw.hover_w = u.value("hover_power_w", 0.0);
        spec.draw.payload_w = u.value("payload_power_w", 0.0);
        if (const auto* node = sc.find_node(id)) spec.state.pose = node->pose;
        sc.uavs[id] = spec;
      }
    }
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
}

inline Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j, base_dir);
}

inline Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// validation

/// Every violated invariant, in a stable order. Empty means valid.
inline std::vector<std::string> validate(const Scenario& sc) {
  std::vector<std::string> v;
  auto add = [&v](std::string s) { v.push_back(std::move(s)); };

  if (!(sc.tick_s > 0.0)) add("tick must be positive");
  if (sc.duration_s && !(*sc.duration_s > 0.0)) add("duration must be positive when set");

  const auto& ch = sc.channel;
  if (!(ch.freq_mhz > 0.0)) add("carrier frequency must be positive");
  if (!(ch.pathloss_exponent >= 1.6 && ch.pathloss_exponent <= 4.0)) add("path-loss exponent outside [1.6, 4]");
  if (!(ch.shadowing_sigma_db >= 0.0)) add("shadowing sigma must be non-negative");

  for (auto& s : profile_violations(sc.profile)) add("profile: " + s);
  if (!(sc.handover.hysteresis_db >= 0.0)) add("handover hysteresis must be non-negative");
  if (!(sc.handover.time_to_trigger_s >= 0.0)) add("handover time-to-trigger must be non-negative");

  std::set<NodeId> ids;
  bool any_bs = false;
  for (const auto& n : sc.nodes) {
    const std::string who = "node '" + n.id + "': ";
    if (n.id.empty()) add("node with empty id");
    if (n.id.find_first_of(",;\n\r\"") != std::string::npos) add(who + "id contains a CSV delimiter");
    if (!ids.insert(n.id).second) add(who + "duplicate id");
    if (n.role == Role::BS) any_bs = true;
    if (!(n.pose.z >= 0.0)) add(who + "height below ground");
    if (!(n.tx_rx_isolation_db >= 0.0)) add(who + "Tx-Rx isolation must be non-negative");

    for (const auto* chain : {&n.tx_chain, &n.rx_chain}) {
      const std::string which = chain == &n.tx_chain ? "Tx chain " : "Rx chain ";
      for (const auto& s : chain->stages) {
        for (auto& e : stage_violations(s)) add(who + which + e);
        if (s.passband && !s.passband->contains(ch.freq_mhz)) {
          add(who + which + "stage '" + s.name + "': carrier outside passband");
        }
      }
      if (!(chain->papr_db >= 0.0)) add(who + which + "PAPR must be non-negative");
    }
    if (!n.tx_chain.sdr_calibration.covers(n.tx_chain.sdr_gain_setting)) {
      add(who + "Tx chain has no SDR calibration for gain " + std::to_string(n.tx_chain.sdr_gain_setting));
    }
    if (!n.rx_chain.sdr_calibration.anchors.empty() && !n.rx_chain.sdr_calibration.covers(n.rx_chain.sdr_gain_setting)) {
      add(who + "Rx chain has no SDR calibration for gain " + std::to_string(n.rx_chain.sdr_gain_setting));
    }
    if (n.mount == Mount::AERIAL && !sc.uavs.contains(n.id)) add(who + "aerial node has no airframe entry");
  }
  if (!any_bs) add("scenario has no BS-role node");

  for (const auto& [id, u] : sc.uavs) {
    const std::string who = "uav '" + id + "': ";
    const auto* node = sc.find_node(id);
    if (!node) add(who + "no node with this id");
    else if (node->mount != Mount::AERIAL) add(who + "node is not AERIAL-mounted");
    if (!(u.state.max_speed > 0.0)) add(who + "max_speed must be positive");
    if (!(u.state.max_climb > 0.0)) add(who + "max_climb must be positive");
    if (u.state.velocity.norm() > u.state.max_speed) add(who + "initial speed exceeds max_speed");
    for (const auto* b : {&u.vehicle_battery, &u.payload_battery}) {
      const std::string which = b == &u.vehicle_battery ? "vehicle battery: " : "payload battery: ";
      if (!(b->capacity_mah > 0.0)) add(who + which + "capacity must be positive");
      if (!(b->voltage_v > 0.0)) add(who + which + "voltage must be positive");
      if (!(b->charge_mah >= 0.0 && b->charge_mah <= b->capacity_mah)) add(who + which + "charge outside [0, capacity]");
      if (!(b->reserve_fraction >= 0.0 && b->reserve_fraction < 1.0)) add(who + which + "reserve fraction outside [0, 1)");
    }
    if (!(u.draw.hover_w >= 0.0) || !(u.draw.payload_w >= 0.0)) add(who + "power draw must be non-negative");
  }
  return v;
}

// ---------------------------------------------------------------------------
// shipped fixture

namespace replica {

inline RfStage pa_15w() { return {"ZHL-15W-422-S+ PA", 46.0, 10.0, 38.0, 49.0, Passband{600.0, 4200.0}}; }
inline RfStage pa_1w() { return {"ZVE-8G+ PA", 35.0, 4.5, 32.0, 40.0, Passband{2000.0, 8000.0}}; }
inline RfStage tx_lowpass() { return {"VLF-4400+ LPF", -1.0, 1.0, std::nullopt, std::nullopt, Passband{0.0, 4400.0}}; }
inline RfStage lna() { return {"ZX60-83LN12+ LNA", 22.0, 1.4, 13.0, 30.0, Passband{500.0, 8000.0}}; }
inline RfStage rx_preselector() { return {"VBFZ-3590+ BPF", -1.0, 1.0, std::nullopt, std::nullopt, Passband{3000.0, 4300.0}}; }
inline RfStage sdr_rx() { return {"B205mini-i Rx", 0.0, 8.0, std::nullopt, std::nullopt, Passband{70.0, 6000.0}}; }

inline RfChain rx_chain(double gain_setting) {
  RfChain c;
  c.stages = {lna(), rx_preselector(), sdr_rx()};
  c.sdr_gain_setting = gain_setting;
  c.sdr_calibration.anchors = {{gain_setting, gain_setting}};
  return c;
}

/// Fixed eNB transmit chain: SDR gain 72 puts -24 dBm into the 15 W PA.
inline RfChain enb_tx_chain() {
  RfChain c;
  c.stages = {pa_15w(), tx_lowpass()};
  c.sdr_gain_setting = 72.0;
  c.sdr_calibration.anchors = {{72.0, -24.0}};
  return c;
}

/// Aerial UE transmit chain: SDR gain 75 puts -19 dBm into the 1 W PA.
inline RfChain ue_tx_chain() {
  RfChain c;
  c.stages = {pa_1w(), tx_lowpass()};
  c.sdr_gain_setting = 75.0;
  c.sdr_calibration.anchors = {{75.0, -19.0}};
  return c;
}

inline RadioNode fixed_enb(NodeId id, Pose pose) {
  RadioNode n;
  n.id = std::move(id);
  n.role = Role::BS;
  n.mount = Mount::FIXED;
  n.pose = pose;
  n.tx_chain = enb_tx_chain();
  n.rx_chain = rx_chain(47.0);
  n.tx_antenna_gain_dbi = 3.0;
  n.rx_antenna_gain_dbi = 3.0;
  n.tx_rx_isolation_db = kFixedIsolationDb;
  return n;
}

inline RadioNode aerial_ue(NodeId id, Pose pose) {
  RadioNode n;
  n.id = std::move(id);
  n.role = Role::UE;
  n.mount = Mount::AERIAL;
  n.pose = pose;
  n.tx_chain = ue_tx_chain();
  n.rx_chain = rx_chain(35.0);
  n.tx_antenna_gain_dbi = 2.0;
  n.rx_antenna_gain_dbi = 2.0;
  n.tx_rx_isolation_db = kAerialIsolationDb;
  return n;
}

/// Hexacopter with six 5700 mAh packs and a separate 5S 3000 mAh payload pack.
inline UavSpec hexacopter(Pose spawn) {
  UavSpec u;
  u.state.pose = spawn;
  u.vehicle_battery = {6 * 5700.0, 22.8, 6 * 5700.0, 0.1};
  u.payload_battery = {3000.0, 18.5, 3000.0, 0.1};
  u.draw = {1400.0, 111.0};
  return u;
}

} // namespace replica

/// Single fixed eNB at the origin (2.5 m mast) and one aerial UE, 3.5 GHz FDD, 20 MHz.
inline Scenario paper_replica() {
  Scenario sc;
  sc.duration_s = 1800.0;
  const Pose spawn{50.0, 0.0, 20.0};
  sc.nodes.push_back(replica::fixed_enb("enb1", {0.0, 0.0, 2.5}));
  sc.nodes.push_back(replica::aerial_ue("uav1", spawn));
  sc.uavs["uav1"] = replica::hexacopter(spawn);
  return sc;
}

} // namespace uavtwin
