#pragma once

// Ventilation verdicts from posterior estimates: occupancy from the emission
// rate, equivalent clean airflow per person (ECAi) under air-cleaning
// scenarios, and steady-state CO2 thresholds that indicate ECAi compliance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "co2grey/core_model.hpp"
#include "co2grey/error.hpp"
#include "co2grey/inference.hpp"
#include "co2grey/random.hpp"
#include "co2grey/stats.hpp"
#include "co2grey/units.hpp"

namespace co2grey {

struct Device {
  std::string label;
  double cadr_cfm = 0.0;
};

struct MitigationScenario {
  std::string name;
  std::vector<Device> devices;

  void validate() const {
    for (const auto& d : devices)
      if (!(d.cadr_cfm >= 0.0) || !std::isfinite(d.cadr_cfm))
        throw InputError("scenario '" + name + "': device '" + d.label + "' has negative CADR");
  }
  double cadr_cfm() const {
    double total = 0.0;
    for (const auto& d : devices) total += d.cadr_cfm;
    return total;
  }
  double cadr_lps() const { return cfm_to_lps(cadr_cfm()); }

  static MitigationScenario none() { return {"outdoor_air_only", {}}; }

  static MitigationScenario with_cadr(double cadr_cfm) {
    return {"cadr_" + std::to_string(static_cast<long long>(std::llround(cadr_cfm))),
            {{"air cleaning", cadr_cfm}}};
  }

  // In-room UV (200 cfm) and fan-filter air cleaners (400 cfm) combinations.
  static std::vector<MitigationScenario> standard_set() {
    const Device uv{"In-room UV", 200.0};
    const Device cleaner{"In-room air cleaner", 400.0};
    return {{"uv_200", {uv}},
            {"cleaner_400", {cleaner}},
            {"uv_cleaner_600", {uv, cleaner}},
            {"two_cleaners_800", {cleaner, cleaner}},
            {"uv_two_cleaners_1000", {uv, cleaner, cleaner}}};
  }
};

struct EcaPolicy {
  double ecai_target_lps_per_person = 20.0;
  double min_outdoor_lps_per_person = 7.4;
  double per_person_gen_lps = 0.0047;
  // Occupancy-independent part of the outdoor-air floor (e.g. an area-based
  // rate times floor area). Zero keeps the floor purely per person.
  double min_outdoor_fixed_lps = 0.0;

  void validate() const {
    if (!(ecai_target_lps_per_person > 0.0 && min_outdoor_lps_per_person > 0.0 &&
          per_person_gen_lps > 0.0))
      throw InputError("EcaPolicy: rates must be strictly positive");
    if (min_outdoor_lps_per_person > ecai_target_lps_per_person)
      throw InputError("EcaPolicy: min_outdoor_lps_per_person exceeds ecai_target_lps_per_person");
    if (!(min_outdoor_fixed_lps >= 0.0)) throw InputError("EcaPolicy: min_outdoor_fixed_lps must be >= 0");
  }
};

// Rounded half away from zero.
inline int estimate_occupancy(double e_gen_lps, const EcaPolicy& policy) {
  if (!(e_gen_lps >= 0.0) || !std::isfinite(e_gen_lps))
    throw InputError("estimate_occupancy: e_gen must be >= 0");
  policy.validate();
  return static_cast<int>(std::round(e_gen_lps / policy.per_person_gen_lps));
}

// (outdoor air + device CADR) per person, L/s/person.
inline double compute_ecai(AchRate q, double volume_l, int occupancy,
                           const MitigationScenario& scenario) {
  require_volume(volume_l);
  if (occupancy < 1) throw InputError("compute_ecai: occupancy must be >= 1");
  scenario.validate();
  return (q.to_lps(volume_l) + scenario.cadr_lps()) / occupancy;
}

// Outdoor air needed to reach the ECAi target after device CADR, never below
// the minimum ventilation floor.
inline double required_outdoor_q(int occupancy, const MitigationScenario& scenario,
                                 const EcaPolicy& policy) {
  if (occupancy < 1) throw InputError("required_outdoor_q: occupancy must be >= 1");
  policy.validate();
  const double n = occupancy;
  return std::max(policy.ecai_target_lps_per_person * n - scenario.cadr_lps(),
                  policy.min_outdoor_lps_per_person * n + policy.min_outdoor_fixed_lps);
}

struct ThresholdTriple {
  enum class Provenance { ensemble, empirical_equation };

  double c_limit = 0.0;
  double c_target = 0.0;
  double c_ideal = 0.0;
  Provenance provenance = Provenance::ensemble;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n_runs = 0;
  bool went_negative = false;

  static ThresholdTriple from_mean_sd(double mean, double sd, std::size_t n_runs) {
    return {mean + sd, mean, mean - sd, Provenance::ensemble, mean, sd, n_runs, false};
  }
};

struct EnsembleSettings {
  std::size_t n_runs = 2000;
  // Run length in time constants; the tail fraction of each run is averaged.
  double horizon_time_constants = 8.0;
  double tail_fraction = 0.2;
  double max_dt_h = 20.0 / kSecondsPerHour;
};

// Stationary value of each SDE run (tail average), summarized across runs as
// (mean + sd, mean, mean - sd). Runs start at the analytic steady state.
inline ThresholdTriple threshold_ensemble(double e_gen, double c_out, double sigma, double volume_l,
                                          int occupancy, const MitigationScenario& scenario,
                                          const EcaPolicy& policy, std::size_t n_runs,
                                          std::uint64_t seed, const EnsembleSettings& settings = {}) {
  if (n_runs < 100) throw InputError("threshold_ensemble: n_runs must be >= 100");
  const ModelParams p{required_outdoor_q(occupancy, scenario, policy), c_out, e_gen, sigma};
  const double css = steady_state(p, volume_l);
  if (sigma == 0.0) return ThresholdTriple::from_mean_sd(css, 0.0, n_runs);

  const double lambda = decay_rate(p, volume_l);
  const double dt_h = std::min(settings.max_dt_h, 0.1 / lambda);
  const double horizon_h = settings.horizon_time_constants / lambda;
  const std::size_t steps = detail::step_count(horizon_h, dt_h);
  const std::size_t tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(settings.tail_fraction * static_cast<double>(steps + 1))));
  std::vector<double> values(n_runs);
  std::vector<char> negative(n_runs, 0);
  parallel_for(n_runs, [&](std::size_t i) {
    Engine rng = make_engine(seed, i);
    const auto path = sde_path(css, p, volume_l, dt_h, steps, rng);
    double sum = 0.0;
    for (std::size_t k = path.size() - tail; k < path.size(); ++k) sum += path[k];
    values[i] = sum / static_cast<double>(tail);
    negative[i] = std::any_of(path.begin(), path.end(), [](double v) { return v < 0.0; });
  });
  auto t = ThresholdTriple::from_mean_sd(stats::mean(values), stats::sd(values), n_runs);
  t.went_negative = std::any_of(negative.begin(), negative.end(), [](char c) { return c != 0; });
  return t;
}

// Averaged classroom equations: linear below 600 cfm, constant above.
inline ThresholdTriple threshold_empirical(double cadr_cfm) {
  if (!(cadr_cfm >= 0.0)) throw InputError("threshold_empirical: CADR must be >= 0");
  ThresholdTriple t;
  t.provenance = ThresholdTriple::Provenance::empirical_equation;
  if (cadr_cfm <= 600.0) {
    t.c_limit = 0.8 * cadr_cfm + 829.1;
    t.c_target = 0.7 * cadr_cfm + 684.6;
    t.c_ideal = 0.5 * cadr_cfm + 540.1;
  } else {
    t.c_limit = 1309.1;
    t.c_target = 1104.6;
    t.c_ideal = 840.1;
  }
  t.mean = t.c_target;
  t.sd = 0.5 * (t.c_limit - t.c_ideal);
  return t;
}

struct PiecewiseLine {
  double slope = 0.0;
  double intercept = 0.0;
  double breakpoint = 0.0;
  double plateau = 0.0;

  double operator()(double x) const { return x <= breakpoint ? slope * x + intercept : plateau; }
};

struct ThresholdCurve {
  PiecewiseLine c_limit, c_target, c_ideal;
};

using CadrTriple = std::pair<double, ThresholdTriple>;

namespace detail {

inline double plateau_sse(std::span<const double> y, double level) {
  double s = 0.0;
  for (double v : y) s += (v - level) * (v - level);
  return s;
}

inline PiecewiseLine fit_split(std::span<const double> x, std::span<const double> y, std::size_t k,
                               std::optional<double> fixed_breakpoint) {
  PiecewiseLine line;
  const auto fit = stats::linear_fit(x.first(k), y.first(k));
  line.slope = fit.slope;
  line.intercept = fit.intercept;
  line.plateau = stats::mean(y.subspan(k));
  if (fixed_breakpoint) {
    line.breakpoint = *fixed_breakpoint;
    return line;
  }
  line.breakpoint = x[k - 1];
  if (line.slope != 0.0) {
    const double cross = (line.plateau - line.intercept) / line.slope;
    if (cross >= x[k - 1] && cross <= x[k]) line.breakpoint = cross;
  }
  return line;
}

}  // namespace detail

// Least-squares line on pre-breakpoint points and a constant on the rest. With
// no breakpoint given, the split minimizing the total squared error over all
// three thresholds is chosen and the breakpoint is placed where line and
// plateau meet (if inside the gap between the split points).
inline ThresholdCurve fit_threshold_curve(std::vector<CadrTriple> points,
                                          std::optional<double> breakpoint = std::nullopt) {
  if (points.size() < 4) throw InputError("fit_threshold_curve: need at least 4 CADR points");
  std::sort(points.begin(), points.end(),
            [](const CadrTriple& a, const CadrTriple& b) { return a.first < b.first; });
  const std::size_t n = points.size();
  std::vector<double> x(n), limit(n), target(n), ideal(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = points[i].first;
    limit[i] = points[i].second.c_limit;
    target[i] = points[i].second.c_target;
    ideal[i] = points[i].second.c_ideal;
  }
  auto distinct_prefix = [&](std::size_t k) { return k >= 2 && x[0] != x[k - 1]; };

  std::size_t split = 0;
  if (breakpoint) {
    split = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), *breakpoint) - x.begin());
    if (!distinct_prefix(split))
      throw InputError("fit_threshold_curve: fewer than 2 distinct CADR points at or below the breakpoint");
    if (split == n) throw InputError("fit_threshold_curve: no CADR points above the breakpoint");
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k < n; ++k) {
      if (!distinct_prefix(k)) continue;
      double sse = 0.0;
      for (const auto* y : {&limit, &target, &ideal}) {
        const std::span<const double> ys(*y);
        sse += stats::linear_fit(std::span<const double>(x).first(k), ys.first(k)).sse;
        sse += detail::plateau_sse(ys.subspan(k), stats::mean(ys.subspan(k)));
      }
      if (sse < best * (1.0 - 1e-12) - 1e-12) {
        best = sse;
        split = k;
      }
    }
    if (split == 0) throw InputError("fit_threshold_curve: CADR points are not distinct enough to fit");
  }
  return {detail::fit_split(x, limit, split, breakpoint), detail::fit_split(x, target, split, breakpoint),
          detail::fit_split(x, ideal, split, breakpoint)};
}

// c_target of the ensemble per occupancy, with E = N * e_per_person. All
// occupancies share the seed (common random numbers).
inline std::vector<std::pair<int, double>> design_target_curve(
    const std::vector<int>& occupancies, double cadr_cfm, double e_per_person,
    const EcaPolicy& policy, double volume_l, double c_out, double sigma, std::size_t n_runs,
    std::uint64_t seed) {
  if (occupancies.empty()) throw InputError("design_target_curve: no occupancies");
  const auto scenario = MitigationScenario::with_cadr(cadr_cfm);
  std::vector<std::pair<int, double>> out;
  for (int n : occupancies) {
    const auto t = threshold_ensemble(n * e_per_person, c_out, sigma, volume_l, n, scenario, policy,
                                      n_runs, seed);
    out.emplace_back(n, t.c_target);
  }
  return out;
}

struct ScenarioAssessment {
  std::string scenario;
  double cadr_cfm = 0.0;
  std::optional<double> ecai;
  bool complies_ecai = false;
  std::optional<ThresholdTriple> thresholds;
  std::optional<bool> observed_within_target;
};

struct DayAssessment {
  std::string day;
  std::string season;
  double volume_l = 0.0;
  ParamDraw posterior_mean{};
  ParamDraw posterior_sd{};
  int occupancy = 0;
  std::optional<double> ecai_provided;
  bool complies_ecai = false;
  double observed_level_ppm = 0.0;
  bool converged = true;
  std::vector<ScenarioAssessment> scenarios;  // first entry: outdoor air only
};

struct SeasonSummary {
  std::string season;
  std::size_t days = 0;
  double mean_q_ach = 0.0;
  double mean_occupancy = 0.0;
  double mean_ecai = 0.0;
  std::size_t days_complying = 0;
};

struct AssessmentReport {
  EcaPolicy policy;
  std::vector<DayAssessment> days;
  std::vector<SeasonSummary> seasons;
};

struct ThresholdOptions {
  bool enabled = true;
  std::size_t n_runs = 2000;
  std::uint64_t seed = 0;
};

// Verdict for one evaluated window. observed_level_ppm is compared against
// each scenario's c_target; the C_out used for thresholds is the window's own
// posterior mean.
inline DayAssessment assess_day(std::string day, std::string season, const PosteriorSummary& summary,
                                bool converged, double volume_l, double observed_level_ppm,
                                const std::vector<MitigationScenario>& scenarios,
                                const EcaPolicy& policy, const ThresholdOptions& thresholds) {
  DayAssessment d;
  d.day = std::move(day);
  d.season = std::move(season);
  d.volume_l = volume_l;
  d.converged = converged;
  d.posterior_mean = summary.means();
  d.posterior_sd = {summary[Param::q].sd, summary[Param::c_out].sd, summary[Param::e].sd,
                    summary[Param::sigma].sd};
  d.occupancy = estimate_occupancy(d.posterior_mean.e_lps, policy);
  d.observed_level_ppm = observed_level_ppm;
  std::vector<MitigationScenario> all{MitigationScenario::none()};
  all.insert(all.end(), scenarios.begin(), scenarios.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    ScenarioAssessment s;
    s.scenario = all[i].name;
    s.cadr_cfm = all[i].cadr_cfm();
    if (d.occupancy >= 1) {
      s.ecai = compute_ecai(AchRate{d.posterior_mean.q_ach}, volume_l, d.occupancy, all[i]);
      s.complies_ecai = *s.ecai >= policy.ecai_target_lps_per_person;
      if (thresholds.enabled) {
        s.thresholds = threshold_ensemble(d.posterior_mean.e_lps, d.posterior_mean.c_out_ppm,
                                          d.posterior_mean.sigma, volume_l, d.occupancy, all[i],
                                          policy, thresholds.n_runs, derive_seed(thresholds.seed, i));
        s.observed_within_target = observed_level_ppm <= s.thresholds->c_target;
      }
    }
    d.scenarios.push_back(std::move(s));
  }
  d.ecai_provided = d.scenarios.front().ecai;
  d.complies_ecai = d.scenarios.front().complies_ecai;
  return d;
}

inline std::vector<SeasonSummary> summarize_seasons(const std::vector<DayAssessment>& days) {
  std::vector<SeasonSummary> out;
  for (const auto& d : days) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SeasonSummary& s) { return s.season == d.season; });
    if (it == out.end()) {
      out.push_back({d.season});
      it = out.end() - 1;
    }
    it->days += 1;
    it->mean_q_ach += d.posterior_mean.q_ach;
    it->mean_occupancy += d.occupancy;
    it->mean_ecai += d.ecai_provided.value_or(0.0);
    if (d.complies_ecai) ++it->days_complying;
  }
  for (auto& s : out) {
    const double n = static_cast<double>(s.days);
    s.mean_q_ach /= n;
    s.mean_occupancy /= n;
    s.mean_ecai /= n;
  }
  return out;
}

}  // namespace co2grey
