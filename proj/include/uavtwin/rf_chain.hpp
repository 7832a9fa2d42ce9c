#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavtwin/common.hpp"

namespace uavtwin {

struct Passband {
  double low_mhz = 0.0;
  double high_mhz = 0.0;

  bool contains(double freq_mhz) const { return freq_mhz >= low_mhz && freq_mhz <= high_mhz; }
  bool operator==(const Passband&) const = default;
};

/// One amplifier, filter or attenuator. Filters carry negative gain (insertion loss).
/// A stage without p1db_out is treated as linear.
struct RfStage {
  std::string name;
  double gain_db = 0.0;
  double noise_figure_db = 0.0;
  std::optional<double> p1db_out_dbm;
  std::optional<double> oip3_dbm;
  std::optional<Passband> passband;

  bool operator==(const RfStage&) const = default;
};

/// Maps an SDR gain index to its calibrated value: average output power in dBm
/// for Tx chains, input-referred gain in dB for Rx chains.
///
/// Lookup order: exact anchor, linear interpolation between the two
/// surrounding anchors, then extrapolation from the nearest anchor at
/// `slope_db_per_step` for at most `max_extrapolation_steps` gain steps.
struct SdrCalibration {
  std::map<double, double> anchors;
  double slope_db_per_step = 1.0;
  double max_extrapolation_steps = 10.0;

  bool covers(double gain_index) const {
    if (anchors.empty() || !std::isfinite(gain_index)) return false;
    const double lo = anchors.begin()->first;
    const double hi = anchors.rbegin()->first;
    return gain_index >= lo - max_extrapolation_steps && gain_index <= hi + max_extrapolation_steps;
  }

  double lookup(double gain_index) const {
    if (!covers(gain_index)) {
      throw UncalibratedGainError("no SDR calibration covers gain index " + std::to_string(gain_index));
    }
    auto upper = anchors.lower_bound(gain_index);
    if (upper != anchors.end() && upper->first == gain_index) return upper->second;
    if (upper == anchors.begin()) {
      return upper->second - slope_db_per_step * (upper->first - gain_index);
    }
    auto lower = std::prev(upper);
    if (upper == anchors.end()) {
      return lower->second + slope_db_per_step * (gain_index - lower->first);
    }
    const double frac = (gain_index - lower->first) / (upper->first - lower->first);
    return lower->second + frac * (upper->second - lower->second);
  }

  bool operator==(const SdrCalibration&) const = default;
};

inline constexpr double kDefaultPaprDb = 8.0;

struct RfChain {
  std::vector<RfStage> stages;
  double sdr_gain_setting = 0.0;
  SdrCalibration sdr_calibration;
  double papr_db = kDefaultPaprDb;

  bool operator==(const RfChain&) const = default;
};

struct ChainOutput {
  double p_out_dbm = 0.0;
  bool distorted = false;
};

inline std::vector<std::string> stage_violations(const RfStage& s) {
  std::vector<std::string> out;
  const std::string who = "stage '" + s.name + "': ";
  if (!std::isfinite(s.gain_db)) out.push_back(who + "gain is not finite");
  if (!std::isfinite(s.noise_figure_db)) out.push_back(who + "noise figure is not finite");
  else if (s.noise_figure_db < 0.0) out.push_back(who + "noise figure is negative");
  if (s.p1db_out_dbm && s.oip3_dbm && *s.oip3_dbm < *s.p1db_out_dbm) {
    out.push_back(who + "OIP3 below P1dB");
  }
  if (s.passband && !(s.passband->low_mhz < s.passband->high_mhz)) {
    out.push_back(who + "passband low edge not below high edge");
  }
  return out;
}

/// Friis cascade, returned in dB. An empty chain is the identity (0 dB).
inline double cascade_noise_figure(std::span<const RfStage> stages) {
  double factor = 0.0;
  double gain_before = 1.0;
  bool first = true;
  for (const auto& s : stages) {
    if (!std::isfinite(s.gain_db) || !std::isfinite(s.noise_figure_db)) {
      throw InvalidStageError("stage '" + s.name + "' has a non-finite gain or noise figure");
    }
    const double f = db_to_linear(s.noise_figure_db);
    factor += first ? f : (f - 1.0) / gain_before;
    gain_before *= db_to_linear(s.gain_db);
    first = false;
  }
  return first ? 0.0 : linear_to_db(factor);
}

inline double cascade_noise_figure(const RfChain& chain) { return cascade_noise_figure(chain.stages); }

/// Average output power through the cascade. Each compressing stage hard-clamps at
/// its P1dB; the distortion flag trips when average output plus PAPR would exceed it.
inline ChainOutput chain_output_power(double p_in_avg_dbm, const RfChain& chain) {
  if (!std::isfinite(p_in_avg_dbm)) throw Error("chain input power is not finite");
  ChainOutput out{p_in_avg_dbm, false};
  for (const auto& s : chain.stages) {
    double p = out.p_out_dbm + s.gain_db;
    if (s.p1db_out_dbm) {
      if (p + chain.papr_db > *s.p1db_out_dbm) out.distorted = true;
      p = std::min(p, *s.p1db_out_dbm);
    }
    out.p_out_dbm = p;
  }
  return out;
}

/// Two-tone third-order intermodulation level at the stage output.
inline double im3_level(double p_per_tone_dbm, double oip3_dbm) {
  return 3.0 * p_per_tone_dbm - 2.0 * oip3_dbm;
}

inline double im3_level(double p_per_tone_dbm, const RfStage& stage) {
  if (!stage.oip3_dbm) throw NotApplicableError("stage '" + stage.name + "' has no OIP3");
  return im3_level(p_per_tone_dbm, *stage.oip3_dbm);
}

inline double sdr_output_dbm(const RfChain& tx) { return tx.sdr_calibration.lookup(tx.sdr_gain_setting); }

/// Average Tx power at the antenna port for the configured SDR gain.
inline ChainOutput transmit_output(const RfChain& tx) { return chain_output_power(sdr_output_dbm(tx), tx); }

inline double effective_isotropic_radiated_power(const RfChain& tx, double antenna_gain_dbi) {
  return transmit_output(tx).p_out_dbm + antenna_gain_dbi;
}

inline bool passes_carrier(const RfChain& chain, double freq_mhz) {
  for (const auto& s : chain.stages) {
    if (s.passband && !s.passband->contains(freq_mhz)) return false;
  }
  return true;
}

} // namespace uavtwin
