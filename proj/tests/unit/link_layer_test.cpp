#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "uavtwin/link_layer.hpp"

using namespace uavtwin;

TEST(NoiseFloor, Examples) {
  EXPECT_NEAR(noise_floor_dbm({-174.0, 6.0}, 20e6), -94.99, 0.005);
  EXPECT_DOUBLE_EQ(noise_floor_dbm({-174.0, 0.0}, 1.0), -174.0);
  EXPECT_NEAR(noise_floor_dbm({-174.0, 1.5}, 20e6), -99.49, 0.005);
  EXPECT_THROW(noise_floor_dbm({-174.0, 1.5}, 0.0), Error);
}

TEST(SnrToCqi, Boundaries) {
  const LinkProfile p;
  EXPECT_EQ(snr_to_cqi(-20.0, p), 0);
  EXPECT_EQ(snr_to_cqi(40.0, p), 15);
  EXPECT_EQ(snr_to_cqi(p.cqi_table[6].snr_threshold_db, p), 7);
  EXPECT_EQ(snr_to_cqi(std::nextafter(p.cqi_table[6].snr_threshold_db, -100.0), p), 6);
}

TEST(Throughput, SaturatedDownlinkIsSixtyMbps) {
  const LinkProfile p;
  // 5.5547 * 18 * 0.75 = 74.98845 < 75 cap, times 0.80
  EXPECT_NEAR(throughput_mbps(15, Direction::Downlink, p), 59.99076, 1e-9);
  EXPECT_NEAR(throughput_mbps(15, Direction::Downlink, p), 60.0, 0.01);
}

TEST(Throughput, SaturatedUplinkIsCappedAtFifty) {
  const LinkProfile p;
  EXPECT_DOUBLE_EQ(throughput_mbps(15, Direction::Uplink, p), 50.0);
}

TEST(Throughput, CqiZeroIsZero) {
  const LinkProfile p;
  EXPECT_EQ(throughput_mbps(0, Direction::Downlink, p), 0.0);
  EXPECT_EQ(throughput_mbps(0, Direction::Uplink, p), 0.0);
  EXPECT_THROW(throughput_mbps(16, Direction::Uplink, p), Error);
  EXPECT_THROW(throughput_mbps(-1, Direction::Uplink, p), Error);
}

TEST(Throughput, MonotoneAndCapped) {
  const LinkProfile p;
  for (auto dir : {Direction::Downlink, Direction::Uplink}) {
    const double ceiling = dir == Direction::Downlink ? p.dl_cap_mbps * p.dl_impl_factor : p.ul_cap_mbps * p.ul_impl_factor;
    double prev = 0.0;
    for (double snr = -15.0; snr <= 35.0; snr += 0.05) {
      const double r = throughput_mbps(snr_to_cqi(snr, p), dir, p);
      EXPECT_GE(r, prev);
      EXPECT_LE(r, ceiling + 1e-12);
      prev = r;
    }
  }
}

TEST(LinkThroughput, StrongLinkNearBs) {
  const LinkProfile p;
  const NoiseModel n{-174.0, 1.5};
  const double floor = noise_floor_dbm(n, p);
  EXPECT_NEAR(-77.32 - floor, 22.17, 0.01);
  EXPECT_GE(link_throughput(-77.32, std::nullopt, n, Direction::Downlink, p), 50.0);
}

TEST(LinkThroughput, InterferenceAtNoiseFloorCostsThreeDb) {
  const double floor = -99.49;
  const double snr = link_sinr_db(-80.0, std::nullopt, floor);
  const double sinr = link_sinr_db(-80.0, floor, floor);
  EXPECT_NEAR(snr - sinr, 10.0 * std::log10(2.0), 1e-12);
}

TEST(LinkThroughput, BelowSensitivityIsZero) {
  EXPECT_EQ(link_throughput(-120.0, std::nullopt, {-174.0, 1.5}, Direction::Downlink, LinkProfile{}), 0.0);
}

TEST(LinkThroughput, SinrNeverAboveSnrAndMatchesWattOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pw(-120.0, -40.0);
  for (int i = 0; i < 500; ++i) {
    const double s = pw(rng), n = pw(rng), in = pw(rng);
    const double sinr = link_sinr_db(s, in, n);
    EXPECT_LE(sinr, link_sinr_db(s, std::nullopt, n));
    const double ref[] = {in};
    EXPECT_NEAR(sinr, oracle::sinr_db_watts(s, ref, n), 1e-9);
  }
}

TEST(CqiTableCsv, ShippedFileMatchesBuiltInTable) {
  std::ifstream in(UAVTWIN_DATA_DIR "/cqi_table.csv");
  ASSERT_TRUE(in);
  EXPECT_EQ(read_cqi_table_csv(in), standard_cqi_table());
}

TEST(CqiTableCsv, HeaderlessFifteenLinesAccepted) {
  std::ostringstream out;
  write_cqi_table_csv(out, standard_cqi_table());
  std::string body = out.str();
  body = body.substr(body.find('\n') + 1);
  std::istringstream in(body);
  EXPECT_EQ(read_cqi_table_csv(in), standard_cqi_table());
}

TEST(CqiTableCsv, RejectsShortOrGarbledTables) {
  std::istringstream short_table("1,-6.7,0.15\n2,-4.6,0.23\n");
  EXPECT_THROW(read_cqi_table_csv(short_table), ScenarioError);
  std::istringstream garbled("1,abc,0.15\n");
  EXPECT_THROW(read_cqi_table_csv(garbled), ScenarioError);
  std::istringstream out_of_order("2,-6.7,0.15\n");
  EXPECT_THROW(read_cqi_table_csv(out_of_order), ScenarioError);
}

TEST(ProfileViolations, DefaultIsCleanAndBrokenTablesAreReported) {
  LinkProfile p;
  EXPECT_TRUE(profile_violations(p).empty());
  std::swap(p.cqi_table[3], p.cqi_table[4]);
  p.dl_impl_factor = 1.2;
  EXPECT_EQ(profile_violations(p).size(), 3u);  // one row breaks both orderings, plus impl factor
}
