#pragma once

// Run configuration: one JSON document, every object validated with unknown
// keys rejected before any computation starts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "co2grey/assessment.hpp"
#include "co2grey/diagnostics.hpp"
#include "co2grey/ingest.hpp"
#include "co2grey/io.hpp"
#include "co2grey/priors.hpp"
#include "co2grey/version.hpp"

namespace co2grey {

struct IngestConfig {
  ColumnMap columns;
  TimeZone timezone;
  SegmentSettings segment;
  std::vector<Season> seasons{Season::autumn, Season::winter, Season::spring};
  double school_hours_start_s = 8.0 * 3600.0;
  double school_hours_end_s = 16.0 * 3600.0;
  std::optional<double> cdf_threshold_ppm;
};

struct PpcConfig {
  std::size_t n_sims = 1000;
  TestStatistic statistic = TestStatistic::mean;
  std::size_t trend_sims = 100;
};

struct ThresholdConfig {
  bool enabled = true;
  std::size_t n_runs = 2000;
  std::vector<double> cadr_grid{0, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  std::optional<double> breakpoint_cfm;
};

struct RunConfig {
  RoomGeometry geometry = RoomGeometry::chamber();
  PriorSet priors = PriorSet::defaults();
  SamplerConfig sampler;
  EcaPolicy policy;
  std::vector<MitigationScenario> scenarios = MitigationScenario::standard_set();
  IngestConfig ingest;
  PpcConfig ppc;
  ThresholdConfig thresholds;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::string hhmm(double s) {
  const int m = static_cast<int>(std::lround(s / 60.0));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02d:%02d", m / 60, m % 60);
  return buf;
}

}  // namespace detail

inline Json to_json(const IngestConfig& c) {
  Json seasons = Json::array();
  for (auto s : c.seasons) seasons.push_back(to_string(s));
  Json j = {{"columns", {{"timestamp", c.columns.timestamp}, {"co2", c.columns.co2}, {"temp", c.columns.temp},
                         {"rh", c.columns.rh}}},
            {"timezone", c.timezone.to_string()}};
  j["school_start"] = c.segment.school_start_s ? Json(detail::hhmm(*c.segment.school_start_s)) : Json(nullptr);
  j["rise_threshold_ppm_per_h"] = c.segment.rise_threshold_ppm_per_h;
  j["smoothing_window_s"] = c.segment.smoothing_window_s;
  j["prominence_ppm"] = c.segment.prominence_ppm ? Json(*c.segment.prominence_ppm) : Json(nullptr);
  j["decline_s"] = c.segment.decline_s;
  j["min_samples"] = c.segment.min_samples;
  j["seasons"] = seasons;
  j["school_hours"] = {detail::hhmm(c.school_hours_start_s), detail::hhmm(c.school_hours_end_s)};
  j["cdf_threshold_ppm"] = c.cdf_threshold_ppm ? Json(*c.cdf_threshold_ppm) : Json(nullptr);
  return j;
}

inline IngestConfig ingest_config_from_json(const Json& j, const std::string& where = "ingest") {
  check_keys(j, {"columns", "timezone", "school_start", "rise_threshold_ppm_per_h", "smoothing_window_s",
                 "prominence_ppm", "decline_s", "min_samples", "seasons", "school_hours", "cdf_threshold_ppm"},
             where);
  IngestConfig c;
  if (j.contains("columns")) {
    const auto& col = j.at("columns");
    check_keys(col, {"timestamp", "co2", "temp", "rh"}, where + ".columns");
    get_optional(col, "timestamp", c.columns.timestamp, where + ".columns");
    get_optional(col, "co2", c.columns.co2, where + ".columns");
    get_optional(col, "temp", c.columns.temp, where + ".columns");
    get_optional(col, "rh", c.columns.rh, where + ".columns");
  }
  if (j.contains("timezone")) c.timezone = TimeZone::parse(get_field<std::string>(j, "timezone", where));
  if (j.contains("school_start") && !j.at("school_start").is_null())
    c.segment.school_start_s = parse_time_of_day(get_field<std::string>(j, "school_start", where));
  get_optional(j, "rise_threshold_ppm_per_h", c.segment.rise_threshold_ppm_per_h, where);
  get_optional(j, "smoothing_window_s", c.segment.smoothing_window_s, where);
  if (j.contains("prominence_ppm") && !j.at("prominence_ppm").is_null())
    c.segment.prominence_ppm = get_field<double>(j, "prominence_ppm", where);
  get_optional(j, "decline_s", c.segment.decline_s, where);
  get_optional(j, "min_samples", c.segment.min_samples, where);
  if (j.contains("seasons")) {
    c.seasons.clear();
    for (const auto& s : get_field<std::vector<std::string>>(j, "seasons", where))
      c.seasons.push_back(season_from_string(s));
    if (c.seasons.empty()) throw InputError(where + ".seasons must not be empty");
  }
  if (j.contains("school_hours")) {
    const auto h = get_field<std::vector<std::string>>(j, "school_hours", where);
    if (h.size() != 2) throw InputError(where + ".school_hours must be [\"HH:MM\", \"HH:MM\"]");
    c.school_hours_start_s = parse_time_of_day(h[0]);
    c.school_hours_end_s = parse_time_of_day(h[1]);
    if (!(c.school_hours_end_s > c.school_hours_start_s))
      throw InputError(where + ".school_hours end must be after start");
  }
  if (j.contains("cdf_threshold_ppm") && !j.at("cdf_threshold_ppm").is_null())
    c.cdf_threshold_ppm = get_field<double>(j, "cdf_threshold_ppm", where);
  if (!(c.segment.rise_threshold_ppm_per_h > 0.0) || !(c.segment.smoothing_window_s > 0.0) ||
      !(c.segment.decline_s > 0.0) || c.segment.min_samples < 2)
    throw InputError(where + ": segmentation settings must be positive (min_samples >= 2)");
  return c;
}

inline Json to_json(const RunConfig& c) {
  Json scenarios = Json::array();
  for (const auto& s : c.scenarios) scenarios.push_back(to_json(s));
  Json thresholds = {{"enabled", c.thresholds.enabled},
                     {"n_runs", c.thresholds.n_runs},
                     {"cadr_grid", c.thresholds.cadr_grid}};
  thresholds["breakpoint_cfm"] = c.thresholds.breakpoint_cfm ? Json(*c.thresholds.breakpoint_cfm) : Json(nullptr);
  return {{"geometry", to_json(c.geometry)},
          {"priors", to_json(c.priors)},
          {"sampler", to_json(c.sampler)},
          {"policy", to_json(c.policy)},
          {"scenarios", scenarios},
          {"ingest", to_json(c.ingest)},
          {"ppc", {{"n_sims", c.ppc.n_sims}, {"statistic", to_string(c.ppc.statistic)}, {"trend_sims", c.ppc.trend_sims}}},
          {"thresholds", thresholds},
          {"seed", c.seed}};
}

// "geometry" may name a preset ({"preset": "classroom1"}) or give dimensions.
// "priors" may list a subset of parameters; the rest keep their defaults.
inline RunConfig run_config_from_json(const Json& j) {
  check_keys(j, {"geometry", "priors", "sampler", "policy", "scenarios", "ingest", "ppc", "thresholds", "seed"},
             "config");
  RunConfig c;
  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    if (g.is_object() && g.contains("preset")) {
      check_keys(g, {"preset"}, "config.geometry");
      const auto name = get_field<std::string>(g, "preset", "config.geometry");
      if (name == "chamber") c.geometry = RoomGeometry::chamber();
      else if (name == "classroom1") c.geometry = RoomGeometry::classroom1();
      else if (name == "classroom2") c.geometry = RoomGeometry::classroom2();
      else throw InputError("config.geometry.preset '" + name + "' unknown (chamber, classroom1, classroom2)");
    } else {
      c.geometry = geometry_from_json(g, "config.geometry");
    }
  }
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    check_keys(p, {"q", "c_out", "e", "sigma"}, "config.priors");
    for (std::size_t i = 0; i < kNumParams; ++i)
      if (p.contains(kPriorKeys[i]))
        c.priors.specs[i] = prior_spec_from_json(p.at(kPriorKeys[i]), std::string("config.priors.") + kPriorKeys[i]);
    c.priors.validate();
  }
  if (j.contains("sampler")) c.sampler = sampler_config_from_json(j.at("sampler"), "config.sampler");
  if (j.contains("policy")) c.policy = policy_from_json(j.at("policy"), "config.policy");
  if (j.contains("scenarios")) {
    const auto& s = j.at("scenarios");
    if (!s.is_array()) throw InputError("config.scenarios must be an array");
    c.scenarios.clear();
    for (std::size_t i = 0; i < s.size(); ++i)
      c.scenarios.push_back(scenario_from_json(s[i], "config.scenarios[" + std::to_string(i) + "]"));
  }
  if (j.contains("ingest")) c.ingest = ingest_config_from_json(j.at("ingest"), "config.ingest");
  if (j.contains("ppc")) {
    const auto& p = j.at("ppc");
    check_keys(p, {"n_sims", "statistic", "trend_sims"}, "config.ppc");
    get_optional(p, "n_sims", c.ppc.n_sims, "config.ppc");
    get_optional(p, "trend_sims", c.ppc.trend_sims, "config.ppc");
    if (p.contains("statistic"))
      c.ppc.statistic = test_statistic_from_string(get_field<std::string>(p, "statistic", "config.ppc"));
    if (c.ppc.n_sims < 100) throw InputError("config.ppc.n_sims must be >= 100");
    if (c.ppc.trend_sims < 1) throw InputError("config.ppc.trend_sims must be >= 1");
  }
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    check_keys(t, {"enabled", "n_runs", "cadr_grid", "breakpoint_cfm"}, "config.thresholds");
    get_optional(t, "enabled", c.thresholds.enabled, "config.thresholds");
    get_optional(t, "n_runs", c.thresholds.n_runs, "config.thresholds");
    get_optional(t, "cadr_grid", c.thresholds.cadr_grid, "config.thresholds");
    if (t.contains("breakpoint_cfm") && !t.at("breakpoint_cfm").is_null())
      c.thresholds.breakpoint_cfm = get_field<double>(t, "breakpoint_cfm", "config.thresholds");
    if (c.thresholds.n_runs < 100) throw InputError("config.thresholds.n_runs must be >= 100");
    for (double x : c.thresholds.cadr_grid)
      if (!(x >= 0.0)) throw InputError("config.thresholds.cadr_grid values must be >= 0");
  }
  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed", "config");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json_file(path));
}

// 64-bit FNV-1a, hex.
inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Hash of the resolved configuration, so equivalent files hash alike.
inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(to_json(c).dump()); }

}  // namespace co2grey
