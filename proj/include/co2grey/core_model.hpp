#pragma once

// Forward models of well-mixed room CO2: the mass-balance ODE
//
//   V dC/dt = (C_out - C) Q + E C_E
//
// and its stochastic extension dC = drift dt + sigma dW, stepped with
// Euler-Maruyama. Time is in hours, concentrations in ppm, volumes in liters,
// flows in L/s and sigma in ppm/sqrt(h).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "co2grey/error.hpp"
#include "co2grey/random.hpp"
#include "co2grey/series.hpp"
#include "co2grey/units.hpp"

namespace co2grey {

struct RoomGeometry {
  double width_m = 0.0;
  double length_m = 0.0;
  double height_m = 0.0;

  void validate() const {
    if (!(width_m > 0.0 && length_m > 0.0 && height_m > 0.0) ||
        !all_finite({width_m, length_m, height_m}))
      throw InputError("RoomGeometry: all dimensions must be positive and finite");
  }
  double volume_l() const { return width_m * length_m * height_m * kLitersPerCubicMeter; }
  double floor_area_m2() const { return width_m * length_m; }

  static RoomGeometry chamber() { return {2.3, 3.5, 2.4}; }
  static RoomGeometry classroom1() { return {9.4, 6.6, 3.47}; }
  static RoomGeometry classroom2() { return {8.8, 7.1, 3.2}; }
};

struct ModelParams {
  static constexpr double c_e = kPpmPerFraction;

  double q_vent = 0.0;  // L/s
  double c_out = 0.0;   // ppm
  double e_gen = 0.0;   // L/s
  double sigma = 0.0;   // ppm/sqrt(h)

  void validate() const {
    if (!all_finite({q_vent, c_out, e_gen, sigma}))
      throw InputError("ModelParams: non-finite parameter");
    if (q_vent < 0.0) throw InputError("ModelParams: q_vent must be >= 0");
    if (e_gen < 0.0) throw InputError("ModelParams: e_gen must be >= 0");
    if (sigma < 0.0) throw InputError("ModelParams: sigma must be >= 0");
    if (c_out < 0.0 || c_out > 5000.0) throw InputError("ModelParams: c_out outside [0, 5000] ppm");
  }
};

inline void require_volume(double volume_l) {
  if (!(volume_l > 0.0) || !std::isfinite(volume_l))
    throw InputError("volume must be positive and finite");
}

// dC/dt in ppm/h.
inline double drift(double c_r, const ModelParams& p, double volume_l) {
  return ((p.c_out - c_r) * p.q_vent + p.e_gen * ModelParams::c_e) / volume_l * kSecondsPerHour;
}

inline double checked_drift(double c_r, const ModelParams& p, double volume_l) {
  require_volume(volume_l);
  if (!std::isfinite(c_r)) throw InputError("drift: non-finite concentration");
  p.validate();
  return drift(c_r, p, volume_l);
}

// First-order decay rate q/V in 1/h, numerically the ventilation rate in ACH.
inline double decay_rate(const ModelParams& p, double volume_l) {
  return p.q_vent * kSecondsPerHour / volume_l;
}

inline double steady_state(const ModelParams& p, double volume_l) {
  require_volume(volume_l);
  p.validate();
  if (p.q_vent == 0.0) throw NoVentilationError();
  return p.c_out + p.e_gen * ModelParams::c_e / p.q_vent;
}

inline double closed_form_ode(double c0, const ModelParams& p, double volume_l, double t_h) {
  const double css = steady_state(p, volume_l);
  const double lambda = decay_rate(p, volume_l);
  return css + (c0 - css) * std::exp(-lambda * t_h);
}

// q_vent == 0 branch of the ODE: linear accumulation.
inline double no_ventilation_growth(double c0, const ModelParams& p, double volume_l, double t_h) {
  require_volume(volume_l);
  return c0 + p.e_gen * ModelParams::c_e * kSecondsPerHour * t_h / volume_l;
}

inline double euler_step(double c_r, const ModelParams& p, double volume_l, double dt_h) {
  return c_r + drift(c_r, p, volume_l) * dt_h;
}

inline double em_step(double c_r, const ModelParams& p, double volume_l, double dt_h, double z) {
  return euler_step(c_r, p, volume_l, dt_h) + p.sigma * std::sqrt(dt_h) * z;
}

namespace detail {

inline void check_step(const ModelParams& p, double volume_l, double dt_h) {
  require_volume(volume_l);
  p.validate();
  if (!(dt_h > 0.0) || !std::isfinite(dt_h)) throw InputError("time step must be positive");
  const double lambda = decay_rate(p, volume_l);
  if (lambda > 0.0 && dt_h > 2.0 / lambda)
    throw InputError("time step " + std::to_string(dt_h) + " h exceeds stability limit 2/lambda = " +
                     std::to_string(2.0 / lambda) + " h");
}

inline std::size_t step_count(double horizon_h, double dt_h) {
  if (!(horizon_h >= dt_h)) throw InputError("horizon must be >= dt");
  return static_cast<std::size_t>(std::floor(horizon_h / dt_h + 1e-9));
}

inline std::vector<double> uniform_grid_seconds(std::size_t steps, double dt_h) {
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = hours_to_seconds(static_cast<double>(k) * dt_h);
  return t;
}

}  // namespace detail

inline Co2Series simulate_ode(double c0, const ModelParams& p, double volume_l, double horizon_h,
                              double dt_h) {
  detail::check_step(p, volume_l, dt_h);
  const std::size_t steps = detail::step_count(horizon_h, dt_h);
  std::vector<double> c(steps + 1);
  c[0] = c0;
  for (std::size_t k = 1; k <= steps; ++k) c[k] = euler_step(c[k - 1], p, volume_l, dt_h);
  return Co2Series(detail::uniform_grid_seconds(steps, dt_h), std::move(c), hours_to_seconds(dt_h));
}

// One Euler-Maruyama path using draws from rng.
inline std::vector<double> sde_path(double c0, const ModelParams& p, double volume_l, double dt_h,
                                    std::size_t steps, Engine& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> c(steps + 1);
  c[0] = c0;
  for (std::size_t k = 1; k <= steps; ++k) c[k] = em_step(c[k - 1], p, volume_l, dt_h, normal(rng));
  return c;
}

inline Co2Series simulate_sde(double c0, const ModelParams& p, double volume_l, double horizon_h,
                              double dt_h, std::uint64_t seed) {
  detail::check_step(p, volume_l, dt_h);
  const std::size_t steps = detail::step_count(horizon_h, dt_h);
  Engine rng = make_engine(seed, 0);
  return Co2Series(detail::uniform_grid_seconds(steps, dt_h),
                   sde_path(c0, p, volume_l, dt_h, steps, rng), hours_to_seconds(dt_h));
}

// Paths on an arbitrary (possibly irregular) timestamp grid, starting at c0 at
// times[0]. Each interval gets its own step.
inline std::vector<double> ode_on_grid(double c0, const ModelParams& p, double volume_l,
                                       std::span<const double> times_s) {
  std::vector<double> c(times_s.size());
  if (c.empty()) return c;
  c[0] = c0;
  for (std::size_t k = 1; k < c.size(); ++k)
    c[k] = euler_step(c[k - 1], p, volume_l, seconds_to_hours(times_s[k] - times_s[k - 1]));
  return c;
}

inline std::vector<double> sde_on_grid(double c0, const ModelParams& p, double volume_l,
                                       std::span<const double> times_s, Engine& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> c(times_s.size());
  if (c.empty()) return c;
  c[0] = c0;
  for (std::size_t k = 1; k < c.size(); ++k)
    c[k] = em_step(c[k - 1], p, volume_l, seconds_to_hours(times_s[k] - times_s[k - 1]),
                   normal(rng));
  return c;
}

// Largest step on a grid, used for the stability guard on observed grids.
inline void check_grid(const ModelParams& p, double volume_l, std::span<const double> times_s) {
  double widest = 0.0;
  for (std::size_t k = 1; k < times_s.size(); ++k)
    widest = std::max(widest, times_s[k] - times_s[k - 1]);
  if (times_s.size() > 1) detail::check_step(p, volume_l, seconds_to_hours(widest));
}

struct Ensemble {
  std::vector<double> t_seconds;
  std::vector<std::vector<double>> runs;
  // True when any trajectory went below zero. Values are never clamped.
  bool went_negative = false;

  std::vector<double> mean() const {
    std::vector<double> m(t_seconds.size(), 0.0);
    for (const auto& r : runs)
      for (std::size_t k = 0; k < m.size(); ++k) m[k] += r[k];
    for (double& v : m) v /= static_cast<double>(runs.size());
    return m;
  }

  // Unbiased across-run variance per time point.
  std::vector<double> variance() const {
    const auto m = mean();
    std::vector<double> v(m.size(), 0.0);
    for (const auto& r : runs)
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += (r[k] - m[k]) * (r[k] - m[k]);
    for (double& x : v) x /= static_cast<double>(runs.size() - 1);
    return v;
  }
};

// n_runs independent paths; run i draws from stream (seed, i).
inline Ensemble simulate_ensemble(double c0, const ModelParams& p, double volume_l, double horizon_h,
                                  double dt_h, std::uint64_t seed, std::size_t n_runs) {
  detail::check_step(p, volume_l, dt_h);
  if (n_runs < 2) throw InputError("ensemble needs at least 2 runs");
  const std::size_t steps = detail::step_count(horizon_h, dt_h);
  Ensemble ens;
  ens.t_seconds = detail::uniform_grid_seconds(steps, dt_h);
  ens.runs.resize(n_runs);
  parallel_for(n_runs, [&](std::size_t i) {
    Engine rng = make_engine(seed, i);
    ens.runs[i] = sde_path(c0, p, volume_l, dt_h, steps, rng);
  });
  for (const auto& r : ens.runs)
    for (double v : r)
      if (v < 0.0) ens.went_negative = true;
  return ens;
}

}  // namespace co2grey
