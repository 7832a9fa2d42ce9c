#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>

#include "uavtwin/common.hpp"

namespace uavtwin {

/// Position in metres; z is height above ground.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Pose&) const = default;
};

struct ChannelParams {
  double freq_mhz = 3500.0;
  double pathloss_exponent = 2.2;
  double shadowing_sigma_db = 0.0;
  std::uint64_t rng_seed = 1;

  bool operator==(const ChannelParams&) const = default;
};

inline constexpr double kMinModelDistanceM = 1.0;

inline double distance_3d(const Pose& a, const Pose& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline double unit_open(std::uint64_t bits) {
  // (0, 1): never returns 0 so the log in Box-Muller stays finite
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace detail

/// Identifies a link for shadowing draws. Symmetric in its endpoints.
inline std::uint64_t link_id(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  return detail::fnv1a(b, detail::fnv1a("|", detail::fnv1a(a)));
}

/// Counter-based standard normal keyed by (seed, link, sample index); evaluation
/// order never changes the value.
inline double shadowing_normal(std::uint64_t seed, std::uint64_t link, std::uint64_t sample_index) {
  const std::uint64_t key = detail::splitmix64(seed ^ detail::splitmix64(link ^ detail::splitmix64(sample_index)));
  const double u1 = detail::unit_open(detail::splitmix64(key));
  const double u2 = detail::unit_open(detail::splitmix64(key + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct ShadowKey {
  std::uint64_t link = 0;
  std::uint64_t sample_index = 0;
};

/// Log-distance loss anchored on free space at 1 km:
/// 32.44 + 20 log10(f_MHz) + 10 n log10(d_km), plus a shadowing draw when sigma > 0.
inline double path_loss_db(const ChannelParams& params, const Pose& a, const Pose& b, ShadowKey key = {}) {
  const double d = distance_3d(a, b);
  if (!(d >= kMinModelDistanceM)) {
    throw NearFieldError("link distance " + std::to_string(d) + " m is below the 1 m model limit");
  }
  double pl = 32.44 + 20.0 * std::log10(params.freq_mhz) +
              10.0 * params.pathloss_exponent * std::log10(d / 1000.0);
  if (params.shadowing_sigma_db > 0.0) {
    pl += params.shadowing_sigma_db * shadowing_normal(params.rng_seed, key.link, key.sample_index);
  }
  return pl;
}

inline double rx_power_dbm(double tx_eirp_dbm, double rx_antenna_gain_dbi, double path_loss) {
  return tx_eirp_dbm + rx_antenna_gain_dbi - path_loss;
}

} // namespace uavtwin
