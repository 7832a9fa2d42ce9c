#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "uavtwin/common.hpp"
#include "uavtwin/propagation.hpp"

namespace uavtwin {

struct Velocity {
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;

  double norm() const { return std::hypot(vx, vy, vz); }
  bool operator==(const Velocity&) const = default;
};

struct UavState {
  Pose pose;
  Velocity velocity;
  double max_speed = 10.0;
  double max_climb = 3.0;

  bool operator==(const UavState&) const = default;
};

struct BatteryState {
  double capacity_mah = 0.0;
  double voltage_v = 0.0;
  double charge_mah = 0.0;
  double reserve_fraction = 0.1;

  double fraction() const { return capacity_mah > 0.0 ? charge_mah / capacity_mah : 0.0; }
  double reserve_mah() const { return reserve_fraction * capacity_mah; }
  bool at_reserve() const { return charge_mah <= reserve_mah() * (1.0 + 1e-12); }
  bool operator==(const BatteryState&) const = default;
};

struct PowerDraw {
  double hover_w = 0.0;
  double payload_w = 0.0;

  double total_w() const { return hover_w + payload_w; }
  bool operator==(const PowerDraw&) const = default;
};

/// Vertical rate is limited to max_climb first, then the horizontal part is
/// scaled so the total speed stays within max_speed.
inline Velocity clamp_velocity(const Velocity& cmd, double max_speed, double max_climb) {
  Velocity v = cmd;
  v.vz = std::clamp(v.vz, -max_climb, max_climb);
  if (v.norm() <= max_speed) return v;
  if (std::abs(v.vz) >= max_speed) return {0.0, 0.0, std::copysign(max_speed, v.vz)};
  const double horiz = std::hypot(v.vx, v.vy);
  const double allowed = std::sqrt(max_speed * max_speed - v.vz * v.vz);
  const double k = allowed / horiz;
  return {v.vx * k, v.vy * k, v.vz};
}

/// First-order response: the clamped command becomes the velocity immediately.
inline UavState step_kinematics(UavState state, const Velocity& commanded, double dt_s) {
  if (!(dt_s > 0.0)) throw Error("kinematics step needs dt > 0");
  state.velocity = clamp_velocity(commanded, state.max_speed, state.max_climb);
  state.pose.x += state.velocity.vx * dt_s;
  state.pose.y += state.velocity.vy * dt_s;
  state.pose.z += state.velocity.vz * dt_s;
  if (state.pose.z < 0.0) {
    state.pose.z = 0.0;
    state.velocity.vz = 0.0;
  }
  return state;
}

inline double drain_mah(const PowerDraw& draw, double voltage_v, double dt_s) {
  return draw.total_w() / voltage_v * dt_s / 3600.0 * 1000.0;
}

inline BatteryState drain(BatteryState battery, const PowerDraw& draw, double dt_s) {
  if (!(dt_s > 0.0)) throw Error("battery drain needs dt > 0");
  battery.charge_mah = std::max(0.0, battery.charge_mah - drain_mah(draw, battery.voltage_v, dt_s));
  return battery;
}

/// Capacity that carries `max_power_w` for `duration_h`, rounded up to 100 mAh.
/// No margin is added on top; the peak-power input is already the worst case.
inline double size_battery(double max_power_w, double voltage_v, double duration_h) {
  if (!(max_power_w > 0.0 && voltage_v > 0.0 && duration_h > 0.0)) {
    throw Error("battery sizing inputs must be positive");
  }
  const double mah = max_power_w / voltage_v * duration_h * 1000.0;
  // relative slack keeps 3000.0000000000005 from rounding up a whole quantum
  return std::ceil(mah / 100.0 * (1.0 - 1e-12)) * 100.0;
}

/// Seconds until the charge reaches the reserve at a constant draw.
inline double endurance_remaining(const BatteryState& battery, const PowerDraw& draw) {
  if (!(draw.total_w() > 0.0)) return std::numeric_limits<double>::infinity();
  const double usable_mah = std::max(0.0, battery.charge_mah - battery.reserve_mah());
  const double current_a = draw.total_w() / battery.voltage_v;
  return usable_mah / 1000.0 / current_a * 3600.0;
}

} // namespace uavtwin
