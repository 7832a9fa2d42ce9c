#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uavtwin/common.hpp"

namespace uavtwin {

inline constexpr std::string_view kTelemetryHeader =
    "t_s,node_id,x_m,y_m,z_m,serving_cell,rsrp_dbm,snr_db,sinr_db,dl_mbps,ul_mbps,battery_pct,events";

inline constexpr std::string_view kEventHandover = "handover";
inline constexpr std::string_view kEventSaturation = "saturation";
inline constexpr std::string_view kEventForcedLanding = "forced-landing";

/// One timestamped, location-tagged link record for a UE-role node.
struct TelemetrySample {
  double t_s = 0.0;
  NodeId node_id;
  double x_m = 0.0;
  double y_m = 0.0;
  double z_m = 0.0;
  NodeId serving_cell;
  double rsrp_dbm = 0.0;
  double snr_db = 0.0;
  double sinr_db = 0.0;
  double dl_mbps = 0.0;
  double ul_mbps = 0.0;
  double battery_pct = 1.0;
  std::vector<std::string> events;

  bool has_event(std::string_view e) const {
    for (const auto& x : events) {
      if (x == e) return true;
    }
    return false;
  }
  bool operator==(const TelemetrySample&) const = default;
};

/// Fixed three-decimal rendering; negative zero prints as 0.000.
inline std::string format_fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string telemetry_row(const TelemetrySample& s) {
  std::string row;
  row.reserve(128);
  auto num = [&row](double v) {
    row += format_fixed3(v);
    row += ',';
  };
  num(s.t_s);
  row += s.node_id + ',';
  num(s.x_m);
  num(s.y_m);
  num(s.z_m);
  row += s.serving_cell + ',';
  num(s.rsrp_dbm);
  num(s.snr_db);
  num(s.sinr_db);
  num(s.dl_mbps);
  num(s.ul_mbps);
  num(s.battery_pct);
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    if (i) row += ';';
    row += s.events[i];
  }
  return row;
}

/// Writes the header and rows; returns bytes written. Throws when the sink fails.
template <class Range>
std::size_t write_telemetry(const Range& samples, std::ostream& sink) {
  std::size_t bytes = 0;
  auto line = [&](std::string_view text) {
    sink << text << '\n';
    bytes += text.size() + 1;
  };
  line(kTelemetryHeader);
  for (const TelemetrySample& s : samples) line(telemetry_row(s));
  sink.flush();
  if (!sink) throw Error("telemetry sink write failed");
  return bytes;
}

/// Streaming writer that flushes every sample, so an interrupted run leaves a
/// valid prefix on disk.
class TelemetryWriter {
public:
  explicit TelemetryWriter(std::ostream& sink) : sink_(sink) { put(kTelemetryHeader); }

  void write(const TelemetrySample& s) { put(telemetry_row(s)); }

  std::size_t bytes_written() const { return bytes_; }

private:
  void put(std::string_view text) {
    sink_ << text << '\n';
    sink_.flush();
    if (!sink_) throw Error("telemetry sink write failed");
    bytes_ += text.size() + 1;
  }

  std::ostream& sink_;
  std::size_t bytes_ = 0;
};

inline TelemetrySample parse_telemetry_row(std::string_view row) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : row) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  f.push_back(cur);
  if (f.size() != 13) throw Error("telemetry row has " + std::to_string(f.size()) + " fields, expected 13");
  try {
    TelemetrySample s;
    s.t_s = std::stod(f[0]);
    s.node_id = f[1];
    s.x_m = std::stod(f[2]);
    s.y_m = std::stod(f[3]);
    s.z_m = std::stod(f[4]);
    s.serving_cell = f[5];
    s.rsrp_dbm = std::stod(f[6]);
    s.snr_db = std::stod(f[7]);
    s.sinr_db = std::stod(f[8]);
    s.dl_mbps = std::stod(f[9]);
    s.ul_mbps = std::stod(f[10]);
    s.battery_pct = std::stod(f[11]);
    std::istringstream ev(f[12]);
    std::string tok;
    while (std::getline(ev, tok, ';')) {
      if (!tok.empty()) s.events.push_back(tok);
    }
    return s;
  } catch (const std::logic_error&) {
    throw Error("telemetry row has a non-numeric field: " + std::string(row));
  }
}

inline std::vector<TelemetrySample> read_telemetry(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("telemetry stream is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTelemetryHeader) throw Error("unexpected telemetry header");
  std::vector<TelemetrySample> out;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_telemetry_row(line));
  }
  return out;
}

} // namespace uavtwin
