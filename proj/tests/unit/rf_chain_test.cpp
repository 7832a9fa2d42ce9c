#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "uavtwin/rf_chain.hpp"
#include "uavtwin/scenario.hpp"

using namespace uavtwin;

namespace {

RfStage stage(double gain, double nf) { return {"s", gain, nf, std::nullopt, std::nullopt, std::nullopt}; }

std::vector<oracle::StageGainNf> as_oracle(const std::vector<RfStage>& stages) {
  std::vector<oracle::StageGainNf> out;
  for (const auto& s : stages) out.push_back({s.gain_db, s.noise_figure_db});
  return out;
}

} // namespace

TEST(CascadeNoiseFigure, SingleStageIsItsOwnNoiseFigure) {
  const std::vector<RfStage> chain{stage(30.0, 10.0)};
  EXPECT_DOUBLE_EQ(cascade_noise_figure(chain), 10.0);
}

TEST(CascadeNoiseFigure, LnaThenSdr) {
  // oracle: noise-temperature cascade, frozen at 1.504142124 dB
  const std::vector<RfStage> chain{stage(22.0, 1.4), stage(0.0, 8.0)};
  EXPECT_NEAR(cascade_noise_figure(chain), 1.5041421243, 1e-9);
  EXPECT_NEAR(cascade_noise_figure(chain), oracle::cascade_nf_db(as_oracle(chain)), 1e-12);
}

TEST(CascadeNoiseFigure, TransparentStageIsIdentity) {
  std::vector<RfStage> chain{stage(22.0, 1.4), stage(0.0, 8.0)};
  const double before = cascade_noise_figure(chain);
  chain.insert(chain.begin(), stage(0.0, 0.0));
  EXPECT_NEAR(cascade_noise_figure(chain), before, 1e-12);
}

TEST(CascadeNoiseFigure, EmptyChainIsZero) { EXPECT_EQ(cascade_noise_figure(std::vector<RfStage>{}), 0.0); }

TEST(CascadeNoiseFigure, NonFiniteStageThrows) {
  const std::vector<RfStage> chain{stage(std::numeric_limits<double>::quiet_NaN(), 1.0)};
  EXPECT_THROW(cascade_noise_figure(chain), InvalidStageError);
  const std::vector<RfStage> chain2{stage(10.0, INFINITY)};
  EXPECT_THROW(cascade_noise_figure(chain2), InvalidStageError);
}

TEST(CascadeNoiseFigure, MatchesTemperatureOracleOnRandomChains) {
  std::mt19937_64 rng(20210701);
  for (int i = 0; i < 1000; ++i) {
    const auto stages = fixtures::random_stages(rng);
    const double got = cascade_noise_figure(stages);
    const double want = oracle::cascade_nf_db(as_oracle(stages));
    ASSERT_LE(std::abs(got - want), 1e-9 * std::abs(want)) << "chain " << i;
  }
}

TEST(CascadeNoiseFigure, NeverBelowFirstStage) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    auto stages = fixtures::random_stages(rng);
    const double first = stages.front().noise_figure_db;
    EXPECT_GE(cascade_noise_figure(stages), first - 1e-12);
    for (std::size_t k = 1; k < stages.size(); ++k) stages[k].noise_figure_db = 0.0;
    EXPECT_NEAR(cascade_noise_figure(stages), first, 1e-9);
  }
}

TEST(CascadeNoiseFigure, HighGainLnaDominates) {
  for (double nf_x = 0.0; nf_x <= 10.0; nf_x += 0.5) {
    const std::vector<RfStage> chain{replica::lna(), stage(0.0, nf_x)};
    EXPECT_LE(cascade_noise_figure(chain) - replica::lna().noise_figure_db, 0.2);
  }
}

TEST(ChainOutputPower, FifteenWattChainAtCalibratedDrive) {
  RfChain c;
  c.stages = {replica::pa_15w(), replica::tx_lowpass()};
  const auto out = chain_output_power(-24.0, c);
  EXPECT_DOUBLE_EQ(out.p_out_dbm, 21.0);
  EXPECT_FALSE(out.distorted);
}

TEST(ChainOutputPower, EmptyChainPassesThrough) {
  const RfChain c;
  for (double p : {-60.0, 0.0, 17.5}) {
    const auto out = chain_output_power(p, c);
    EXPECT_EQ(out.p_out_dbm, p);
    EXPECT_FALSE(out.distorted);
  }
}

TEST(ChainOutputPower, OverdrivenPaClampsAndFlags) {
  RfChain c;
  c.stages = {replica::pa_1w()};
  const auto out = chain_output_power(5.0, c);
  EXPECT_DOUBLE_EQ(out.p_out_dbm, 32.0);
  EXPECT_TRUE(out.distorted);
}

TEST(ChainOutputPower, PaprMarginFlagsBeforeClamp) {
  RfChain c;
  c.stages = {replica::pa_15w()};
  // 46 - 14 = 32 dBm average, 32 + 8 > 38: still linear on average, but distorted
  const auto out = chain_output_power(-14.0, c);
  EXPECT_DOUBLE_EQ(out.p_out_dbm, 32.0);
  EXPECT_TRUE(out.distorted);
  c.papr_db = 0.0;
  EXPECT_FALSE(chain_output_power(-14.0, c).distorted);
}

TEST(ChainOutputPower, NonFiniteInputThrows) {
  EXPECT_THROW(chain_output_power(NAN, RfChain{}), Error);
}

TEST(ChainOutputPower, MonotoneBoundedAndIdempotent) {
  RfChain c;
  c.stages = {replica::pa_15w(), replica::tx_lowpass(), stage(3.0, 1.0)};
  c.stages.back().p1db_out_dbm = 39.5;
  // bound: min over stages of P1dB + downstream gain = min(38 - 1 + 3, 39.5) = 39.5 vs 40 -> 39.5
  double prev = -INFINITY;
  for (double p = -60.0; p <= 10.0; p += 0.25) {
    const double out = chain_output_power(p, c).p_out_dbm;
    EXPECT_GE(out, prev);
    EXPECT_LE(out, 39.5 + 1e-12);
    prev = out;
  }
  // once saturated, pushing harder changes nothing
  EXPECT_EQ(chain_output_power(20.0, c).p_out_dbm, chain_output_power(40.0, c).p_out_dbm);
}

TEST(Im3Level, InterceptDefinition) {
  EXPECT_DOUBLE_EQ(im3_level(40.0, 40.0), 40.0);
  EXPECT_DOUBLE_EQ(im3_level(0.0, 40.0), -80.0);
  EXPECT_DOUBLE_EQ(im3_level(10.0, 49.0), -68.0);
}

TEST(Im3Level, ThreeDbPerDb) {
  for (double p = -30.0; p < 30.0; p += 1.0) {
    EXPECT_NEAR(im3_level(p + 1.0, 49.0) - im3_level(p, 49.0), 3.0, 1e-12);
  }
}

TEST(Im3Level, StageWithoutOip3IsNotApplicable) {
  EXPECT_THROW(im3_level(0.0, replica::tx_lowpass()), NotApplicableError);
  EXPECT_DOUBLE_EQ(im3_level(10.0, replica::pa_15w()), -68.0);
}

TEST(Eirp, EnbAtGain72) {
  EXPECT_DOUBLE_EQ(sdr_output_dbm(replica::enb_tx_chain()), -24.0);
  EXPECT_DOUBLE_EQ(effective_isotropic_radiated_power(replica::enb_tx_chain(), 3.0), 24.0);
}

TEST(Eirp, ZeroGainAntennaEqualsChainOutput) {
  EXPECT_DOUBLE_EQ(effective_isotropic_radiated_power(replica::enb_tx_chain(), 0.0),
                   transmit_output(replica::enb_tx_chain()).p_out_dbm);
}

TEST(Eirp, UeAtGain75) {
  EXPECT_DOUBLE_EQ(transmit_output(replica::ue_tx_chain()).p_out_dbm, 15.0);
  EXPECT_FALSE(transmit_output(replica::ue_tx_chain()).distorted);
  EXPECT_DOUBLE_EQ(effective_isotropic_radiated_power(replica::ue_tx_chain(), 2.0), 17.0);
}

TEST(Eirp, UncalibratedGainThrows) {
  RfChain c = replica::enb_tx_chain();
  c.sdr_calibration.anchors.clear();
  EXPECT_THROW(effective_isotropic_radiated_power(c, 3.0), UncalibratedGainError);
  c = replica::enb_tx_chain();
  c.sdr_gain_setting = 40.0;
  EXPECT_THROW(effective_isotropic_radiated_power(c, 3.0), UncalibratedGainError);
}

TEST(SdrCalibration, InterpolatesAndExtrapolatesOneDbPerStep) {
  SdrCalibration cal;
  cal.anchors = {{60.0, -36.0}, {72.0, -22.0}};
  EXPECT_DOUBLE_EQ(cal.lookup(60.0), -36.0);
  EXPECT_DOUBLE_EQ(cal.lookup(66.0), -29.0);
  EXPECT_DOUBLE_EQ(cal.lookup(75.0), -19.0);
  EXPECT_DOUBLE_EQ(cal.lookup(55.0), -41.0);
  EXPECT_FALSE(cal.covers(83.0));
  EXPECT_TRUE(cal.covers(82.0));
}

TEST(StageViolations, ReportsEachBrokenInvariant) {
  RfStage s{"bad", 10.0, -1.0, 40.0, 30.0, Passband{4000.0, 3000.0}};
  EXPECT_EQ(stage_violations(s).size(), 3u);
  EXPECT_TRUE(stage_violations(replica::pa_15w()).empty());
}

TEST(PassesCarrier, FiltersGateTheCarrier) {
  RfChain rx = replica::rx_chain(47.0);
  EXPECT_TRUE(passes_carrier(rx, 3500.0));
  EXPECT_FALSE(passes_carrier(rx, 5000.0));
}
