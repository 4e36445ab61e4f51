#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "co2grey/error.hpp"
#include "co2grey/units.hpp"

namespace co2grey {

// Timestamped CO2 observations. Timestamps are seconds (since the epoch for
// ingested data, since series start for simulated data) and strictly increasing.
// Values may dip below zero only in simulated output; ingestion rejects them.
class Co2Series {
 public:
  Co2Series() = default;

  Co2Series(std::vector<double> t_seconds, std::vector<double> co2_ppm,
            std::optional<double> interval_hint_s = std::nullopt)
      : t_(std::move(t_seconds)), c_(std::move(co2_ppm)), hint_(interval_hint_s) {
    if (t_.size() != c_.size()) throw InputError("Co2Series: time/value length mismatch");
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!std::isfinite(t_[i]) || !std::isfinite(c_[i]))
        throw InputError("Co2Series: non-finite sample at index " + std::to_string(i));
      if (i > 0 && !(t_[i] > t_[i - 1]))
        throw InputError("Co2Series: timestamps not strictly increasing at index " +
                         std::to_string(i));
    }
  }

  std::size_t size() const { return t_.size(); }
  bool empty() const { return t_.empty(); }

  double time(std::size_t i) const { return t_[i]; }
  double value(std::size_t i) const { return c_[i]; }
  double hours(std::size_t i) const { return seconds_to_hours(t_[i] - t_.front()); }

  std::span<const double> times() const { return t_; }
  std::span<const double> values() const { return c_; }
  std::optional<double> interval_hint() const { return hint_; }

  bool all_nonnegative() const {
    for (double v : c_)
      if (v < 0.0) return false;
    return true;
  }

  // Half-open index range [first, last) as a new series.
  Co2Series slice(std::size_t first, std::size_t last) const {
    if (first > last || last > size()) throw InputError("Co2Series::slice: bad range");
    return Co2Series({t_.begin() + first, t_.begin() + last},
                     {c_.begin() + first, c_.begin() + last}, hint_);
  }

  friend bool operator==(const Co2Series&, const Co2Series&) = default;

 private:
  std::vector<double> t_;
  std::vector<double> c_;
  std::optional<double> hint_;
};

inline void require_increments(const Co2Series& s, const char* who) {
  if (s.size() < 2) throw InputError(std::string(who) + ": series needs at least 2 samples");
}

}  // namespace co2grey
