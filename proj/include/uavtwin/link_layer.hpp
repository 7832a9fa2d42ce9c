#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "uavtwin/common.hpp"

namespace uavtwin {

enum class Direction { Downlink, Uplink };

struct CqiRow {
  double snr_threshold_db = 0.0;
  double efficiency_bps_hz = 0.0;

  bool operator==(const CqiRow&) const = default;
};

inline constexpr int kCqiCount = 15;

/// The 15 LTE 4-bit CQI efficiencies with thresholds spaced 2.1 dB apart from -6.7 dB.
inline std::vector<CqiRow> standard_cqi_table() {
  return {{-6.7, 0.1523}, {-4.6, 0.2344}, {-2.5, 0.3770}, {-0.4, 0.6016}, {1.7, 0.8770},
          {3.8, 1.1758},  {5.9, 1.4766},  {8.0, 1.9141},  {10.1, 2.4063}, {12.2, 2.7305},
          {14.3, 3.3223}, {16.4, 3.9023}, {18.5, 4.5234}, {20.6, 5.1152}, {22.7, 5.5547}};
}

/// LTE FDD numerology and the abstraction knobs the throughput model uses.
/// Overheads are the fraction of the frame spent on control signaling; impl
/// factors scale the capped rate down to what the stack actually delivers.
struct LinkProfile {
  double bandwidth_mhz = 20.0;
  double usable_bandwidth_mhz = 18.0;
  double dl_overhead = 0.25;
  double ul_overhead = 0.25;
  double dl_cap_mbps = 75.0;
  double ul_cap_mbps = 50.0;
  double dl_impl_factor = 0.80;
  double ul_impl_factor = 1.00;
  std::vector<CqiRow> cqi_table = standard_cqi_table();

  bool operator==(const LinkProfile&) const = default;
};

inline std::vector<std::string> profile_violations(const LinkProfile& p) {
  std::vector<std::string> out;
  if (p.cqi_table.size() != kCqiCount) {
    out.push_back("CQI table has " + std::to_string(p.cqi_table.size()) + " rows, expected 15");
  }
  for (std::size_t i = 1; i < p.cqi_table.size(); ++i) {
    if (!(p.cqi_table[i].snr_threshold_db > p.cqi_table[i - 1].snr_threshold_db)) {
      out.push_back("CQI thresholds not strictly increasing at row " + std::to_string(i + 1));
    }
    if (!(p.cqi_table[i].efficiency_bps_hz > p.cqi_table[i - 1].efficiency_bps_hz)) {
      out.push_back("CQI efficiencies not strictly increasing at row " + std::to_string(i + 1));
    }
  }
  if (!(p.bandwidth_mhz > 0.0)) out.push_back("bandwidth must be positive");
  if (!(p.usable_bandwidth_mhz > 0.0) || p.usable_bandwidth_mhz > p.bandwidth_mhz) {
    out.push_back("usable bandwidth must be in (0, bandwidth]");
  }
  if (!(p.dl_overhead >= 0.0 && p.dl_overhead < 1.0)) out.push_back("dl_overhead must be in [0, 1)");
  if (!(p.ul_overhead >= 0.0 && p.ul_overhead < 1.0)) out.push_back("ul_overhead must be in [0, 1)");
  if (!(p.dl_cap_mbps > 0.0)) out.push_back("dl_cap must be positive");
  if (!(p.ul_cap_mbps > 0.0)) out.push_back("ul_cap must be positive");
  if (!(p.dl_impl_factor > 0.0 && p.dl_impl_factor <= 1.0)) out.push_back("dl_impl_factor must be in (0, 1]");
  if (!(p.ul_impl_factor > 0.0 && p.ul_impl_factor <= 1.0)) out.push_back("ul_impl_factor must be in (0, 1]");
  return out;
}

/// Reads `cqi,snr_threshold_db,efficiency_bps_hz` rows. A header line is optional;
/// row indices must run 1..15 in order.
inline std::vector<CqiRow> read_cqi_table_csv(std::istream& in) {
  std::vector<CqiRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (rows.empty() && line.rfind("cqi", 0) == 0) continue;
    std::istringstream fields(line);
    std::string idx, thr, eff;
    if (!std::getline(fields, idx, ',') || !std::getline(fields, thr, ',') || !std::getline(fields, eff)) {
      throw ScenarioError("CQI table line " + std::to_string(line_no) + ": expected 3 fields");
    }
    try {
      const int cqi = std::stoi(idx);
      if (cqi != static_cast<int>(rows.size()) + 1) {
        throw ScenarioError("CQI table line " + std::to_string(line_no) + ": index out of order");
      }
      rows.push_back({std::stod(thr), std::stod(eff)});
    } catch (const std::logic_error&) {
      throw ScenarioError("CQI table line " + std::to_string(line_no) + ": not a number");
    }
  }
  if (rows.size() != kCqiCount) {
    throw ScenarioError("CQI table has " + std::to_string(rows.size()) + " rows, expected 15");
  }
  return rows;
}

inline void write_cqi_table_csv(std::ostream& out, const std::vector<CqiRow>& rows) {
  out << "cqi,snr_threshold_db,efficiency_bps_hz\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << (i + 1) << ',' << rows[i].snr_threshold_db << ',' << rows[i].efficiency_bps_hz << '\n';
  }
}

struct NoiseModel {
  double thermal_density_dbm_hz = -174.0;
  double receiver_nf_db = 0.0;
};

inline double noise_floor_dbm(const NoiseModel& model, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw Error("noise bandwidth must be positive");
  return model.thermal_density_dbm_hz + 10.0 * std::log10(bandwidth_hz) + model.receiver_nf_db;
}

/// Largest CQI whose threshold is at or below `snr_db`; 0 below the first row.
inline int snr_to_cqi(double snr_db, const LinkProfile& profile) {
  int cqi = 0;
  for (std::size_t i = 0; i < profile.cqi_table.size(); ++i) {
    if (profile.cqi_table[i].snr_threshold_db <= snr_db) cqi = static_cast<int>(i) + 1;
    else break;
  }
  return cqi;
}

inline double throughput_mbps(int cqi, Direction dir, const LinkProfile& profile) {
  if (cqi < 0 || cqi > static_cast<int>(profile.cqi_table.size())) {
    throw Error("CQI " + std::to_string(cqi) + " out of range");
  }
  if (cqi == 0) return 0.0;
  const bool dl = dir == Direction::Downlink;
  const double overhead = dl ? profile.dl_overhead : profile.ul_overhead;
  const double cap = dl ? profile.dl_cap_mbps : profile.ul_cap_mbps;
  const double impl = dl ? profile.dl_impl_factor : profile.ul_impl_factor;
  const double raw = profile.cqi_table[cqi - 1].efficiency_bps_hz * profile.usable_bandwidth_mhz * (1.0 - overhead);
  return std::min(cap, raw) * impl;
}

inline double noise_floor_dbm(const NoiseModel& model, const LinkProfile& profile) {
  return noise_floor_dbm(model, profile.bandwidth_mhz * 1e6);
}

/// S / (N + I) in dB, summed in milliwatts.
inline double link_sinr_db(double serving_rx_dbm, std::optional<double> interference_dbm, double noise_dbm) {
  double denom_mw = db_to_linear(noise_dbm);
  if (interference_dbm) denom_mw += db_to_linear(*interference_dbm);
  return serving_rx_dbm - linear_to_db(denom_mw);
}

inline double link_throughput(double serving_rx_dbm, std::optional<double> interference_dbm,
                              const NoiseModel& noise, Direction dir, const LinkProfile& profile) {
  if (!std::isfinite(serving_rx_dbm) || (interference_dbm && std::isnan(*interference_dbm))) {
    throw Error("link powers must be finite");
  }
  const double sinr = link_sinr_db(serving_rx_dbm, interference_dbm, noise_floor_dbm(noise, profile));
  return throughput_mbps(snr_to_cqi(sinr, profile), dir, profile);
}

} // namespace uavtwin
