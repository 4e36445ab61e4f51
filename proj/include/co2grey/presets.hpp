#pragma once

// Built-in synthetic scenarios: chamber decay and constant-injection twins
// (tests 1-7) and a synthetic classroom day generator, plus the published
// classroom evaluation rows used as reference inputs.

#include <random>
#include <string>
#include <vector>

#include "co2grey/core_model.hpp"
#include "co2grey/error.hpp"
#include "co2grey/ingest.hpp"
#include "co2grey/priors.hpp"
#include "co2grey/random.hpp"
#include "co2grey/series.hpp"

namespace co2grey {

struct ScenarioPreset {
  std::string name;
  std::string description;
  RoomGeometry geometry = RoomGeometry::chamber();
  double q_ach = 0.0;
  double c_out = 420.0;
  double e_lps = 0.0;
  double sigma = 0.0;
  double c0 = 420.0;
  double horizon_h = 3.0;
  double dt_s = 20.0;
  bool decay = false;

  ModelParams params() const {
    return {AchRate{q_ach}.to_lps(geometry.volume_l()), c_out, e_lps, sigma};
  }

  // Decay tests have no source; E is pinned near zero.
  PriorSet priors() const {
    PriorSet p = PriorSet::defaults();
    if (decay) p[Param::e] = PriorSpec::uniform(0.0, 1e-8);
    return p;
  }

  Co2Series simulate(std::uint64_t seed) const {
    return simulate_sde(c0, params(), geometry.volume_l(), horizon_h, seconds_to_hours(dt_s), seed);
  }
};

// Decay twins start at 2500 ppm; their sigma is set so the posterior sd of Q
// is about what the chamber tests reported. Injection twins start at ambient
// with the noise levels estimated for each test.
inline std::vector<ScenarioPreset> builtin_presets() {
  std::vector<ScenarioPreset> v;
  auto decay = [&](std::string name, std::string desc, double ach, double sigma, double horizon) {
    ScenarioPreset p;
    p.name = std::move(name);
    p.description = std::move(desc);
    p.q_ach = ach;
    p.sigma = sigma;
    p.c0 = 2500.0;
    p.horizon_h = horizon;
    p.decay = true;
    v.push_back(p);
  };
  auto inject = [&](std::string name, std::string desc, double e, double sigma) {
    ScenarioPreset p;
    p.name = std::move(name);
    p.description = std::move(desc);
    p.q_ach = 1.9;
    p.e_lps = e;
    p.sigma = sigma;
    v.push_back(p);
  };
  decay("test1", "concentration decay, ventilation mode 1 (1.9 ACH)", 1.9, 32.0, 2.5);
  decay("test2", "concentration decay, ventilation mode 2 (1.51 ACH)", 1.51, 24.0, 3.0);
  decay("test3", "concentration decay, ventilation mode 3 (0.53 ACH)", 0.53, 20.0, 8.0);
  inject("test4", "constant injection 0.013 L/s, fan off", 0.013, 72.7);
  inject("test5", "constant injection 0.013 L/s, fan on", 0.013, 75.4);
  inject("test6", "constant injection 0.026 L/s, fan off", 0.026, 157.3);
  inject("test7", "constant injection 0.026 L/s, fan on", 0.026, 48.6);
  return v;
}

inline ScenarioPreset find_preset(const std::string& name) {
  std::string names;
  for (const auto& p : builtin_presets()) {
    if (p.name == name) return p;
    names += (names.empty() ? "" : ", ") + p.name;
  }
  throw InputError("unknown scenario '" + name + "' (available: " + names + ")");
}

// ---- synthetic classroom days

struct SchoolDayProfile {
  double q_ach = 0.35;
  double e_lps = 0.044;
  double c_out = 430.0;
  double sigma = 5.0;
  double class_start_s = 8.5 * 3600.0;
  double first_break_s = 10.0 * 3600.0;
  double break_length_s = 1800.0;
  double class_end_s = 15.0 * 3600.0;
  double dt_s = 60.0;
};

// Consecutive days of wall-clock timestamps starting at local midnight
// first_day_s. The room is occupied from class start to the first break and
// from the end of the break to class end; E is zero otherwise.
inline Co2Series synthetic_school_days(const RoomGeometry& geometry, const SchoolDayProfile& prof,
                                       double first_day_s, int n_days, std::uint64_t seed) {
  if (n_days < 1) throw InputError("synthetic_school_days: n_days must be >= 1");
  const double v = geometry.volume_l();
  const ModelParams occupied{AchRate{prof.q_ach}.to_lps(v), prof.c_out, prof.e_lps, prof.sigma};
  ModelParams empty = occupied;
  empty.e_gen = 0.0;
  const double dt_h = seconds_to_hours(prof.dt_s);
  detail::check_step(occupied, v, dt_h);
  const auto steps = static_cast<std::size_t>(std::llround(n_days * kSecondsPerDay / prof.dt_s));
  Engine rng = make_engine(seed, 0);
  std::normal_distribution<double> z;
  std::vector<double> ts(steps), cs(steps);
  double c = prof.c_out;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = first_day_s + static_cast<double>(k) * prof.dt_s;
    ts[k] = t;
    cs[k] = c;
    const double tod = time_of_day(t);
    const bool in_class = (tod >= prof.class_start_s && tod < prof.first_break_s) ||
                          (tod >= prof.first_break_s + prof.break_length_s && tod < prof.class_end_s);
    c = em_step(c, in_class ? occupied : empty, v, dt_h, z(rng));
  }
  return Co2Series(std::move(ts), std::move(cs), prof.dt_s);
}

// ---- published classroom rows

struct ClassroomDay {
  std::string classroom;
  std::string season;
  int day = 0;
  double q_ach = 0.0;
  double e_lps = 0.0;
  int occupancy = 0;
  double ecai = 0.0;
};

inline std::vector<ClassroomDay> classroom_days(const std::string& classroom) {
  struct Row {
    const char* season;
    double q[5], e[5];
    int n[5];
    double ecai[5];
  };
  std::vector<Row> rows;
  if (classroom == "classroom1") {
    rows = {{"autumn", {0.35, 0.63, 0.24, 0.34, 0.25}, {0.044, 0.079, 0.09, 0.083, 0.088}, {9, 17, 19, 18, 19},
             {2.3, 2.2, 0.8, 1.1, 0.8}},
            {"winter", {0.58, 1.24, 0.96, 0.81, 0.2}, {0.044, 0.069, 0.078, 0.081, 0.091}, {9, 15, 17, 17, 19},
             {3.9, 5.0, 3.4, 2.9, 0.6}},
            {"spring", {0.11, 0.44, 1.38, 0.48, 0.14}, {0.046, 0.087, 0.079, 0.083, 0.092}, {10, 19, 17, 18, 20},
             {0.7, 1.4, 4.9, 1.6, 0.4}}};
  } else if (classroom == "classroom2") {
    rows = {{"autumn", {0.21, 0.26, 0.3, 0.24, 0.11}, {0.084, 0.089, 0.085, 0.083, 0.092}, {18, 19, 18, 18, 20},
             {0.6, 3.2, 0.9, 0.7, 0.3}},
            {"winter", {1.18, 0.6, 0.51, 0.79, 0.2}, {0.071, 0.083, 0.085, 0.071, 0.09}, {15, 18, 18, 15, 19},
             {4.4, 4.5, 1.6, 2.9, 0.6}},
            {"spring", {1.33, 3.66, 0.81, 0.88, 1.74}, {0.015, 0.068, 0.086, 0.081, 0.069}, {3, 14, 18, 17, 15},
             {24.7, 17.9, 2.5, 2.9, 6.5}}};
  } else {
    throw InputError("unknown classroom '" + classroom + "' (classroom1, classroom2)");
  }
  std::vector<ClassroomDay> out;
  for (const auto& r : rows)
    for (int d = 0; d < 5; ++d) out.push_back({classroom, r.season, d + 1, r.q[d], r.e[d], r.n[d], r.ecai[d]});
  return out;
}

}  // namespace co2grey
