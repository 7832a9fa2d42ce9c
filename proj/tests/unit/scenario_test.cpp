#include <gtest/gtest.h>

#include <algorithm>

#include "support/fixtures.hpp"
#include "uavtwin/scenario.hpp"

using namespace uavtwin;

namespace {

bool mentions(const std::vector<std::string>& v, std::string_view needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

} // namespace

TEST(Validate, ReplicaIsValid) {
  const auto v = validate(paper_replica());
  EXPECT_TRUE(v.empty()) << (v.empty() ? "" : v.front());
}

TEST(Validate, ShippedReplicaFileMatchesBuiltIn) {
  const auto sc = load_scenario_file(UAVTWIN_DATA_DIR "/scenarios/paper_replica.json");
  EXPECT_EQ(sc, paper_replica());
  EXPECT_TRUE(validate(sc).empty());
}

TEST(Validate, CarrierOutsideRxPreselector) {
  auto sc = paper_replica();
  sc.channel.freq_mhz = 5000.0;
  const auto v = validate(sc);
  EXPECT_TRUE(mentions(v, "VBFZ-3590+ BPF': carrier outside passband"));
}

TEST(Validate, ZeroTick) {
  auto sc = paper_replica();
  sc.tick_s = 0.0;
  EXPECT_TRUE(mentions(validate(sc), "tick must be positive"));
}

TEST(Validate, ReportsEveryViolation) {
  auto sc = paper_replica();
  sc.tick_s = -1.0;
  sc.channel.pathloss_exponent = 5.0;
  sc.handover.hysteresis_db = -1.0;
  sc.nodes[1].tx_chain.sdr_gain_setting = 10.0;
  sc.uavs["uav1"].payload_battery.charge_mah = 5000.0;
  const auto v = validate(sc);
  EXPECT_GE(v.size(), 5u);
  EXPECT_TRUE(mentions(v, "exponent"));
  EXPECT_TRUE(mentions(v, "hysteresis"));
  EXPECT_TRUE(mentions(v, "no SDR calibration"));
  EXPECT_TRUE(mentions(v, "charge outside"));
}

TEST(Validate, StructuralChecks) {
  auto sc = paper_replica();
  sc.nodes.push_back(sc.nodes[0]);
  sc.nodes.back().role = Role::UE;
  EXPECT_TRUE(mentions(validate(sc), "duplicate id"));

  sc = paper_replica();
  sc.nodes[0].role = Role::UE;
  EXPECT_TRUE(mentions(validate(sc), "no BS-role node"));

  sc = paper_replica();
  sc.uavs.clear();
  EXPECT_TRUE(mentions(validate(sc), "no airframe entry"));

  sc = paper_replica();
  sc.nodes[1].id = "a,b";
  EXPECT_TRUE(mentions(validate(sc), "CSV delimiter"));

  sc = paper_replica();
  sc.nodes[0].tx_chain.stages[0].oip3_dbm = 30.0;
  EXPECT_TRUE(mentions(validate(sc), "OIP3 below P1dB"));
}

TEST(Validate, FlyingTheBsKeepsTheScenarioValid) {
  // any aerial UE can take the BS role instead
  for (auto sc : {paper_replica(), fixtures::two_cell_flyby()}) {
    for (auto& n : sc.nodes) {
      if (n.mount == Mount::AERIAL && n.role == Role::UE) n.role = Role::BS;
    }
    EXPECT_TRUE(validate(sc).empty());
  }
}

TEST(ScenarioJson, RoundTrip) {
  auto sc = fixtures::two_cell_flyby();
  sc.channel.shadowing_sigma_db = 4.0;
  sc.nodes[1].role = Role::RELAY;
  sc.duration_s.reset();
  const auto back = scenario_from_json(scenario_to_json(sc));
  EXPECT_EQ(back, sc);
}

TEST(ScenarioJson, DefaultsFillMissingFields) {
  const auto sc = parse_scenario(R"({
    "schema": 1,
    "nodes": [
      {"id": "bs", "role": "BS", "pose": {"z": 2.5},
       "tx_chain": {"sdr_gain_setting": 0, "sdr_calibration": {"anchors": [[0, 10]]}}},
      {"id": "ue", "role": "UE", "pose": {"x": 100, "z": 1.5},
       "tx_chain": {"sdr_gain_setting": 0, "sdr_calibration": {"anchors": [[0, 0]]}}}
    ]})");
  EXPECT_EQ(sc.channel, ChannelParams{});
  EXPECT_EQ(sc.profile, LinkProfile{});
  EXPECT_EQ(sc.tick_s, 0.1);
  EXPECT_FALSE(sc.duration_s);
  EXPECT_EQ(sc.nodes[0].tx_rx_isolation_db, kFixedIsolationDb);
  EXPECT_TRUE(validate(sc).empty());
}

TEST(ScenarioJson, CqiTableFromCsvFile) {
  auto j = scenario_to_json(paper_replica());
  j["profile"]["cqi_table"] = "../cqi_table.csv";
  const auto sc = scenario_from_json(j, UAVTWIN_DATA_DIR "/scenarios");
  EXPECT_EQ(sc.profile.cqi_table, standard_cqi_table());
  j["profile"]["cqi_table"] = "missing.csv";
  EXPECT_THROW(scenario_from_json(j, UAVTWIN_DATA_DIR), ScenarioError);
}

TEST(ScenarioJson, RejectsBadDocuments) {
  EXPECT_THROW(parse_scenario("{not json"), ScenarioError);
  EXPECT_THROW(parse_scenario(R"({"schema": 2, "nodes": []})"), ScenarioError);
  EXPECT_THROW(parse_scenario(R"({"schema": 1})"), ScenarioError);
  EXPECT_THROW(parse_scenario(R"({"schema": 1, "nodes": [{"id": "x", "role": "TOWER"}]})"), ScenarioError);
  EXPECT_THROW(load_scenario_file("/nonexistent/scenario.json"), ScenarioError);
}
