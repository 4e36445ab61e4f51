#pragma once

#include <cmath>

#include "co2grey/error.hpp"

namespace co2grey {

// Volume fraction -> ppm.
inline constexpr double kPpmPerFraction = 1.0e6;
inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kLitersPerCubicMeter = 1000.0;
inline constexpr double kLpsPerCfm = 0.471947;

inline constexpr double seconds_to_hours(double s) { return s / kSecondsPerHour; }
inline constexpr double hours_to_seconds(double h) { return h * kSecondsPerHour; }
inline constexpr double cfm_to_lps(double cfm) { return cfm * kLpsPerCfm; }

// Air changes per hour. Conversions to and from L/s go through the room volume.
struct AchRate {
  double ach = 0.0;

  static AchRate from_lps(double q_lps, double volume_l) {
    if (!(volume_l > 0.0)) throw InputError("AchRate: volume must be positive");
    return AchRate{q_lps * kSecondsPerHour / volume_l};
  }

  double to_lps(double volume_l) const { return ach * volume_l / kSecondsPerHour; }
};

inline bool all_finite(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace co2grey
