#pragma once

// JSON and CSV serialization. JSON keys keep insertion order; floats are
// written in shortest round-trip form so re-parsing is exact.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "co2grey/assessment.hpp"
#include "co2grey/core_model.hpp"
#include "co2grey/diagnostics.hpp"
#include "co2grey/error.hpp"
#include "co2grey/inference.hpp"
#include "co2grey/ingest.hpp"
#include "co2grey/priors.hpp"
#include "co2grey/series.hpp"

namespace co2grey {

using Json = nlohmann::ordered_json;

inline std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

// Reject keys outside `allowed`; `where` names the object in the message.
inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      std::string list;
      for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
      throw InputError(where + ": unknown key '" + key + "' (allowed: " + list + ")");
    }
  }
}

template <class T>
T get_field(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw InputError(where + ": missing required key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(where + "." + key + ": wrong type");
  }
}

template <class T>
void get_optional(const Json& j, const char* key, T& out, const std::string& where) {
  if (j.contains(key)) out = get_field<T>(j, key, where);
}

inline Json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(where + ": invalid JSON (" + e.what() + ")");
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

// ---- series CSV

inline void write_series_csv(std::ostream& out, const Co2Series& s) {
  out << "t_seconds,co2_ppm\n";
  for (std::size_t i = 0; i < s.size(); ++i) out << format_double(s.time(i)) << ',' << format_double(s.value(i)) << '\n';
}

inline std::string series_csv(const Co2Series& s) {
  std::ostringstream ss;
  write_series_csv(ss, s);
  return ss.str();
}

// ---- geometry, params

inline Json to_json(const RoomGeometry& g) {
  return {{"width_m", g.width_m}, {"length_m", g.length_m}, {"height_m", g.height_m}, {"volume_l", g.volume_l()}};
}

inline RoomGeometry geometry_from_json(const Json& j, const std::string& where = "geometry") {
  check_keys(j, {"width_m", "length_m", "height_m", "volume_l"}, where);
  RoomGeometry g{get_field<double>(j, "width_m", where), get_field<double>(j, "length_m", where),
                 get_field<double>(j, "height_m", where)};
  g.validate();
  if (j.contains("volume_l")) {
    const double v = get_field<double>(j, "volume_l", where);
    if (std::abs(v - g.volume_l()) > 1e-9 * g.volume_l())
      throw InputError(where + ".volume_l disagrees with width_m * length_m * height_m * 1000");
  }
  return g;
}

inline Json to_json(const ModelParams& p) {
  return {{"q_vent", p.q_vent}, {"c_out", p.c_out}, {"e_gen", p.e_gen}, {"sigma", p.sigma}, {"c_e", ModelParams::c_e}};
}

inline ModelParams model_params_from_json(const Json& j, const std::string& where = "params") {
  check_keys(j, {"q_vent", "c_out", "e_gen", "sigma", "c_e"}, where);
  if (j.contains("c_e") && get_field<double>(j, "c_e", where) != ModelParams::c_e)
    throw InputError(where + ".c_e is fixed at 1e6");
  ModelParams p{get_field<double>(j, "q_vent", where), get_field<double>(j, "c_out", where),
                get_field<double>(j, "e_gen", where), get_field<double>(j, "sigma", where)};
  p.validate();
  return p;
}

inline Json to_json(const ParamDraw& d) {
  return {{"q_ach", d.q_ach}, {"c_out_ppm", d.c_out_ppm}, {"e_lps", d.e_lps}, {"sigma", d.sigma}};
}

inline ParamDraw param_draw_from_json(const Json& j, const std::string& where = "params") {
  check_keys(j, {"q_ach", "c_out_ppm", "e_lps", "sigma"}, where);
  return {get_field<double>(j, "q_ach", where), get_field<double>(j, "c_out_ppm", where),
          get_field<double>(j, "e_lps", where), get_field<double>(j, "sigma", where)};
}

// ---- priors

inline Json to_json(const PriorSpec& s) {
  if (s.kind == PriorSpec::Kind::uniform) return {{"kind", "uniform"}, {"lower", s.lower()}, {"upper", s.upper()}};
  return {{"kind", "normal"}, {"mean", s.mean()}, {"sd", s.sd()}};
}

inline PriorSpec prior_spec_from_json(const Json& j, const std::string& where) {
  const auto kind = get_field<std::string>(j, "kind", where);
  if (kind == "uniform") {
    check_keys(j, {"kind", "lower", "upper"}, where);
    return PriorSpec::uniform(get_field<double>(j, "lower", where), get_field<double>(j, "upper", where));
  }
  if (kind == "normal") {
    check_keys(j, {"kind", "mean", "sd"}, where);
    return PriorSpec::normal(get_field<double>(j, "mean", where), get_field<double>(j, "sd", where));
  }
  throw InputError(where + ".kind must be 'uniform' or 'normal', got '" + kind + "'");
}

inline Json to_json(const PriorSet& p) {
  Json j = Json::object();
  for (std::size_t i = 0; i < kNumParams; ++i) j[kPriorKeys[i]] = to_json(p.specs[i]);
  return j;
}

// All four keys required.
inline PriorSet prior_set_from_json(const Json& j, const std::string& where = "priors") {
  check_keys(j, {"q", "c_out", "e", "sigma"}, where);
  PriorSet p;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const std::string key = kPriorKeys[i];
    if (!j.contains(key)) throw InputError(where + ": missing prior for '" + key + "'");
    p.specs[i] = prior_spec_from_json(j.at(key), where + "." + key);
  }
  p.validate();
  return p;
}

// ---- sampler, posterior

inline Json to_json(const SamplerConfig& c) {
  return {{"draws", c.draws},
          {"chains", c.chains},
          {"burn_in", c.burn_in},
          {"hdi_mass", c.hdi_mass},
          {"init_attempts", c.init_attempts},
          {"target_accept", c.target_accept},
          {"max_tree_depth", c.max_tree_depth},
          {"rhat_threshold", c.rhat_threshold}};
}

inline SamplerConfig sampler_config_from_json(const Json& j, const std::string& where = "sampler") {
  check_keys(j, {"draws", "chains", "burn_in", "hdi_mass", "init_attempts", "target_accept", "max_tree_depth",
                 "rhat_threshold"},
             where);
  SamplerConfig c;
  get_optional(j, "draws", c.draws, where);
  get_optional(j, "chains", c.chains, where);
  get_optional(j, "burn_in", c.burn_in, where);
  get_optional(j, "hdi_mass", c.hdi_mass, where);
  get_optional(j, "init_attempts", c.init_attempts, where);
  get_optional(j, "target_accept", c.target_accept, where);
  get_optional(j, "max_tree_depth", c.max_tree_depth, where);
  get_optional(j, "rhat_threshold", c.rhat_threshold, where);
  c.validate();
  return c;
}

inline Json to_json(const PosteriorSamples& s) {
  Json cfg = to_json(s.config);
  cfg["seed"] = s.seed;
  cfg["algorithm"] = "nuts_dense_metric";
  Json kernels = Json::array();
  for (const auto& k : s.kernels) {
    kernels.push_back({{"step_size", k.step_size},
                       {"inverse_metric", k.inverse_metric},
                       {"acceptance_rate", k.acceptance_rate},
                       {"divergences", k.divergences},
                       {"mean_tree_depth", k.mean_tree_depth},
                       {"initial", to_json(k.initial)}});
  }
  cfg["kernels"] = kernels;
  Json diag = Json::object();
  for (std::size_t i = 0; i < kNumParams; ++i)
    diag[kParamNames[i]] = {{"r_hat", s.diagnostics[i].r_hat},
                            {"effective_sample_size", s.diagnostics[i].ess},
                            {"acceptance_rate", s.diagnostics[i].acceptance_rate}};
  Json chains = Json::array();
  for (const auto& c : s.chains) {
    Json rows = Json::array();
    for (const auto& d : c) rows.push_back(d.to_array());
    chains.push_back(std::move(rows));
  }
  return {{"sampler_config", cfg},
          {"diagnostics", diag},
          {"converged", s.converged},
          {"columns", kParamNames},
          {"chains", chains}};
}

inline PosteriorSamples posterior_from_json(const Json& j, const std::string& where = "posterior") {
  check_keys(j, {"sampler_config", "diagnostics", "converged", "columns", "chains", "manifest"}, where);
  PosteriorSamples s;
  const Json& cfg = j.at("sampler_config");
  Json plain = cfg;
  for (const char* k : {"seed", "algorithm", "kernels"}) plain.erase(k);
  s.config = sampler_config_from_json(plain, where + ".sampler_config");
  s.seed = get_field<std::uint64_t>(cfg, "seed", where + ".sampler_config");
  if (cfg.contains("kernels"))
    for (const auto& k : cfg.at("kernels")) {
      ChainKernel ck;
      ck.step_size = k.value("step_size", 0.0);
      if (k.contains("inverse_metric")) ck.inverse_metric = k.at("inverse_metric").get<std::array<double, 16>>();
      ck.acceptance_rate = k.value("acceptance_rate", 0.0);
      ck.divergences = k.value("divergences", std::size_t{0});
      ck.mean_tree_depth = k.value("mean_tree_depth", 0.0);
      if (k.contains("initial")) ck.initial = param_draw_from_json(k.at("initial"), where + ".kernels.initial");
      s.kernels.push_back(ck);
    }
  const auto cols = get_field<std::vector<std::string>>(j, "columns", where);
  if (cols != std::vector<std::string>(kParamNames.begin(), kParamNames.end()))
    throw InputError(where + ".columns must be [q_ach, c_out_ppm, e_lps, sigma]");
  for (const auto& c : j.at("chains")) {
    std::vector<ParamDraw> draws;
    draws.reserve(c.size());
    for (const auto& row : c) {
      if (!row.is_array() || row.size() != kNumParams) throw InputError(where + ".chains: each draw needs 4 values");
      draws.push_back(ParamDraw::from_array(row.get<std::array<double, kNumParams>>()));
    }
    s.chains.push_back(std::move(draws));
  }
  if (s.chains.empty() || s.chains.front().empty()) throw InputError(where + ": posterior has no draws");
  compute_diagnostics(s);
  return s;
}

inline Json to_json(const PosteriorSummary& s) {
  Json params = Json::object();
  for (std::size_t i = 0; i < kNumParams; ++i)
    params[kParamNames[i]] = {{"mean", s.params[i].mean},
                              {"sd", s.params[i].sd},
                              {"hdi_low", s.params[i].hdi_low},
                              {"hdi_high", s.params[i].hdi_high}};
  return {{"hdi_mass", s.hdi_mass}, {"n_draws", s.n_draws}, {"params", params}, {"warnings", s.warnings}};
}

// Aligned text table, one row per parameter.
inline std::string summary_table(const PosteriorSummary& s, const PosteriorSamples* samples = nullptr) {
  std::string out;
  char buf[160];
  const int pct = static_cast<int>(std::lround(s.hdi_mass * 100.0));
  std::snprintf(buf, sizeof buf, "%-10s %12s %12s %12s %12s", "param", "mean", "sd",
                ("hdi" + std::to_string(pct) + "_low").c_str(), ("hdi" + std::to_string(pct) + "_high").c_str());
  out += buf;
  if (samples) {
    std::snprintf(buf, sizeof buf, " %8s %8s", "r_hat", "ess");
    out += buf;
  }
  out += '\n';
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& p = s.params[i];
    std::snprintf(buf, sizeof buf, "%-10s %12.5g %12.5g %12.5g %12.5g", kParamNames[i], p.mean, p.sd, p.hdi_low,
                  p.hdi_high);
    out += buf;
    if (samples) {
      std::snprintf(buf, sizeof buf, " %8.4f %8.0f", samples->diagnostics[i].r_hat, samples->diagnostics[i].ess);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

// ---- diagnostics

inline Json to_json(const PpcResult& r) {
  return {{"n_sims", r.n_sims},
          {"test_statistic", to_string(r.statistic)},
          {"t_obs", r.t_obs},
          {"bayesian_p", r.bayesian_p},
          {"interpretation", interpret_p_value(r.bayesian_p)},
          {"initial_value", r.initial_value},
          {"seed", r.seed},
          {"envelope_levels", r.envelope.levels},
          {"t_sims", r.t_sims}};
}

inline void write_envelope_csv(std::ostream& out, const Envelope& e) {
  out << "t_seconds,q025,q50,q975,observed\n";
  for (std::size_t i = 0; i < e.t_seconds.size(); ++i)
    out << format_double(e.t_seconds[i]) << ',' << format_double(e.low[i]) << ',' << format_double(e.mid[i]) << ','
        << format_double(e.high[i]) << ',' << format_double(e.observed[i]) << '\n';
}

inline void write_trend_csv(std::ostream& out, const TrendComparison& t) {
  out << "t_seconds,observed,ode,sde_q025,sde_q50,sde_q975,resid_q025,resid_q50,resid_q975\n";
  for (std::size_t i = 0; i < t.t_seconds.size(); ++i)
    out << format_double(t.t_seconds[i]) << ',' << format_double(t.observed[i]) << ',' << format_double(t.ode[i])
        << ',' << format_double(t.sde.low[i]) << ',' << format_double(t.sde.mid[i]) << ','
        << format_double(t.sde.high[i]) << ',' << format_double(t.residual_low[i]) << ','
        << format_double(t.residual_mid[i]) << ',' << format_double(t.residual_high[i]) << '\n';
}

// ---- assessment

inline Json to_json(const MitigationScenario& s) {
  Json devices = Json::array();
  for (const auto& d : s.devices) devices.push_back({{"label", d.label}, {"cadr_cfm", d.cadr_cfm}});
  return {{"name", s.name}, {"devices", devices}, {"cadr_cfm", s.cadr_cfm()}, {"cadr_lps", s.cadr_lps()}};
}

inline MitigationScenario scenario_from_json(const Json& j, const std::string& where) {
  check_keys(j, {"name", "devices", "cadr_cfm", "cadr_lps"}, where);
  MitigationScenario s;
  s.name = get_field<std::string>(j, "name", where);
  if (j.contains("devices")) {
    if (!j.at("devices").is_array()) throw InputError(where + ".devices must be an array");
    for (std::size_t i = 0; i < j.at("devices").size(); ++i) {
      const auto& d = j.at("devices")[i];
      const std::string w = where + ".devices[" + std::to_string(i) + "]";
      check_keys(d, {"label", "cadr_cfm"}, w);
      s.devices.push_back({d.value("label", std::string("device")), get_field<double>(d, "cadr_cfm", w)});
    }
  }
  if (j.contains("cadr_cfm") && std::abs(get_field<double>(j, "cadr_cfm", where) - s.cadr_cfm()) > 1e-9)
    throw InputError(where + ".cadr_cfm disagrees with the sum over devices");
  s.validate();
  return s;
}

inline Json to_json(const EcaPolicy& p) {
  return {{"ecai_target_lps_per_person", p.ecai_target_lps_per_person},
          {"min_outdoor_lps_per_person", p.min_outdoor_lps_per_person},
          {"per_person_gen_lps", p.per_person_gen_lps},
          {"min_outdoor_fixed_lps", p.min_outdoor_fixed_lps}};
}

inline EcaPolicy policy_from_json(const Json& j, const std::string& where = "policy") {
  check_keys(j, {"ecai_target_lps_per_person", "min_outdoor_lps_per_person", "per_person_gen_lps",
                 "min_outdoor_fixed_lps"},
             where);
  EcaPolicy p;
  get_optional(j, "ecai_target_lps_per_person", p.ecai_target_lps_per_person, where);
  get_optional(j, "min_outdoor_lps_per_person", p.min_outdoor_lps_per_person, where);
  get_optional(j, "per_person_gen_lps", p.per_person_gen_lps, where);
  get_optional(j, "min_outdoor_fixed_lps", p.min_outdoor_fixed_lps, where);
  p.validate();
  return p;
}

inline Json to_json(const ThresholdTriple& t) {
  Json j = {{"c_limit", t.c_limit}, {"c_target", t.c_target}, {"c_ideal", t.c_ideal}};
  if (t.provenance == ThresholdTriple::Provenance::ensemble) {
    j["provenance"] = {{"kind", "ensemble"}, {"mean", t.mean}, {"sd", t.sd}, {"n_runs", t.n_runs},
                       {"went_negative", t.went_negative}};
  } else {
    j["provenance"] = {{"kind", "empirical_equation"}};
  }
  return j;
}

inline Json to_json(const PiecewiseLine& l) {
  return {{"slope", l.slope}, {"intercept", l.intercept}, {"breakpoint", l.breakpoint}, {"plateau", l.plateau}};
}

inline Json to_json(const ThresholdCurve& c) {
  return {{"c_limit", to_json(c.c_limit)}, {"c_target", to_json(c.c_target)}, {"c_ideal", to_json(c.c_ideal)}};
}

inline void write_threshold_csv(std::ostream& out, const std::vector<CadrTriple>& rows) {
  out << "cadr_cfm,c_limit,c_target,c_ideal\n";
  for (const auto& [cadr, t] : rows)
    out << format_double(cadr) << ',' << format_double(t.c_limit) << ',' << format_double(t.c_target) << ','
        << format_double(t.c_ideal) << '\n';
}

inline Json to_json(const DayAssessment& d) {
  Json scenarios = Json::array();
  for (const auto& s : d.scenarios) {
    Json row = {{"scenario", s.scenario}, {"cadr_cfm", s.cadr_cfm}};
    row["ecai"] = s.ecai ? Json(*s.ecai) : Json(nullptr);
    row["complies_ecai"] = s.complies_ecai;
    row["thresholds"] = s.thresholds ? to_json(*s.thresholds) : Json(nullptr);
    row["observed_within_target"] = s.observed_within_target ? Json(*s.observed_within_target) : Json(nullptr);
    scenarios.push_back(std::move(row));
  }
  return {{"day", d.day},
          {"season", d.season},
          {"volume_l", d.volume_l},
          {"posterior_mean", to_json(d.posterior_mean)},
          {"posterior_sd", to_json(d.posterior_sd)},
          {"converged", d.converged},
          {"occupancy", d.occupancy},
          {"ecai_provided", d.ecai_provided ? Json(*d.ecai_provided) : Json(nullptr)},
          {"complies_ecai", d.complies_ecai},
          {"observed_level_ppm", d.observed_level_ppm},
          {"scenarios", scenarios}};
}

inline Json to_json(const AssessmentReport& r) {
  Json days = Json::array();
  for (const auto& d : r.days) days.push_back(to_json(d));
  Json seasons = Json::array();
  for (const auto& s : r.seasons)
    seasons.push_back({{"season", s.season},
                       {"days", s.days},
                       {"mean_q_ach", s.mean_q_ach},
                       {"mean_occupancy", s.mean_occupancy},
                       {"mean_ecai", s.mean_ecai},
                       {"days_complying", s.days_complying}});
  return {{"policy", to_json(r.policy)}, {"days", days}, {"seasons", seasons}};
}

inline void write_cdf_csv(std::ostream& out, const CdfTable& t) {
  out << "co2_ppm,cum_fraction\n";
  for (std::size_t i = 0; i < t.co2_ppm.size(); ++i)
    out << format_double(t.co2_ppm[i]) << ',' << format_double(t.cum_fraction[i]) << '\n';
}

}  // namespace co2grey
