#pragma once

// CLI command bodies. Each writes its outputs atomically into the output
// directory and returns a process exit code; errors surface as exceptions
// that run_guarded maps onto exit codes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "co2grey/assessment.hpp"
#include "co2grey/config.hpp"
#include "co2grey/diagnostics.hpp"
#include "co2grey/error.hpp"
#include "co2grey/inference.hpp"
#include "co2grey/ingest.hpp"
#include "co2grey/io.hpp"
#include "co2grey/presets.hpp"
#include "co2grey/version.hpp"

namespace co2grey {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitNotConverged = 2, kExitInput = 3, kExitUnreachable = 4 };

struct CommandContext {
  RunConfig config;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
  bool verbose = false;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;

  Json manifest(const std::string& command, Json args) const {
    return {{"tool", "co2grey"},
            {"version", kVersion},
            {"command", command},
            {"seed", seed},
            {"config_hash", config_hash(config)},
            {"args", std::move(args)},
            {"config", to_json(config)}};
  }

  void log(const std::string& msg) const {
    if (verbose) *err << msg << '\n';
  }
};

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write '" + path.string() + "'");
    f << content;
    f.flush();
    if (!f) throw InputError("write failed for '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot move output into place at '" + path.string() + "'");
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// CSV plus a "<file>.manifest.json" sidecar.
inline void write_csv_with_manifest(const std::filesystem::path& path, const std::string& csv, const Json& manifest) {
  write_file_atomic(path, csv);
  write_json(path.string() + ".manifest.json", {{"manifest", manifest}, {"file", path.filename().string()}});
}

inline Co2Series load_series(const CommandContext& ctx, const std::filesystem::path& path) {
  auto f = parse_csv(path, ctx.config.ingest.columns, ctx.config.ingest.timezone);
  for (const auto& w : f.meta.warnings) *ctx.err << "warning: " << w << '\n';
  return std::move(f.series);
}

// ---- simulate

inline int cmd_simulate(const CommandContext& ctx, const std::string& scenario) {
  Json args = {{"scenario", scenario}};
  Co2Series series;
  Json details;
  if (scenario == "classroom_week") {
    const SchoolDayProfile prof;
    const double monday = parse_date("2021-10-04");
    series = synthetic_school_days(RoomGeometry::classroom1(), prof, monday, 5, ctx.seed);
    details = {{"name", scenario},
               {"description", "five synthetic school days, classroom 1 geometry"},
               {"geometry", to_json(RoomGeometry::classroom1())},
               {"truth", to_json(ParamDraw{prof.q_ach, prof.c_out, prof.e_lps, prof.sigma})},
               {"first_day", "2021-10-04"},
               {"class_start", "08:30"},
               {"first_break", "10:00"},
               {"dt_s", prof.dt_s}};
  } else {
    const auto p = find_preset(scenario);
    series = p.simulate(ctx.seed);
    details = {{"name", p.name},
               {"description", p.description},
               {"geometry", to_json(p.geometry)},
               {"params", to_json(p.params())},
               {"truth", to_json(ParamDraw{p.q_ach, p.c_out, p.e_lps, p.sigma})},
               {"c0", p.c0},
               {"horizon_h", p.horizon_h},
               {"dt_s", p.dt_s},
               {"recommended_priors", to_json(p.priors())}};
  }
  auto m = ctx.manifest("simulate", args);
  m["scenario"] = details;
  const auto path = ctx.out_dir / (scenario + ".csv");
  write_csv_with_manifest(path, series_csv(series), m);
  *ctx.out << "wrote " << path.string() << " (" << series.size() << " samples)\n";
  return kExitOk;
}

// ---- infer

inline int cmd_infer(const CommandContext& ctx, const std::filesystem::path& data_path) {
  const auto& cfg = ctx.config;
  const auto data = load_series(ctx, data_path);
  const double v = cfg.geometry.volume_l();
  ctx.log("sampling " + std::to_string(cfg.sampler.chains) + " chains x " + std::to_string(cfg.sampler.draws) +
          " draws on " + std::to_string(data.size()) + " samples");
  const auto samples = sample_posterior(cfg.priors, data, v, cfg.sampler, ctx.seed);
  const auto summary = summarize(samples, cfg.sampler.hdi_mass);
  const auto m = ctx.manifest("infer", {{"data", data_path.string()}});

  Json post = to_json(samples);
  post["manifest"] = m;
  write_json(ctx.out_dir / "posterior.json", post);
  Json sj = {{"manifest", m}, {"summary", to_json(summary)}, {"converged", samples.converged}};
  sj["diagnostics"] = post.at("diagnostics");
  write_json(ctx.out_dir / "summary.json", sj);

  *ctx.out << summary_table(summary, &samples);
  for (const auto& w : summary.warnings) *ctx.err << "warning: " << w << '\n';
  if (!samples.converged) {
    *ctx.err << "\n*** WARNING: chains did not converge (r_hat > " << cfg.sampler.rhat_threshold
             << "); treat these estimates with caution ***\n\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// ---- ppc

inline int cmd_ppc(const CommandContext& ctx, const std::filesystem::path& posterior_path,
                   const std::filesystem::path& data_path) {
  const auto& cfg = ctx.config;
  const auto samples = posterior_from_json(read_json_file(posterior_path), posterior_path.string());
  const auto data = load_series(ctx, data_path);
  const double v = cfg.geometry.volume_l();
  const auto ppc = posterior_predictive(samples, data, v, cfg.ppc.n_sims, ctx.seed, cfg.ppc.statistic);
  const auto summary = summarize(samples, samples.config.hdi_mass);
  const auto trend = trend_compare(summary, data, v, cfg.ppc.trend_sims, ctx.seed);
  const auto m = ctx.manifest("ppc", {{"posterior", posterior_path.string()}, {"data", data_path.string()}});

  Json j = {{"manifest", m}, {"ppc", to_json(ppc)}};
  j["trend"] = {{"params", to_json(trend.params)},
                {"n_sims", cfg.ppc.trend_sims},
                {"final_residual_band", {trend.residual_low.back(), trend.residual_mid.back(), trend.residual_high.back()}}};
  write_json(ctx.out_dir / "ppc.json", j);
  std::ostringstream env, tr;
  write_envelope_csv(env, ppc.envelope);
  write_trend_csv(tr, trend);
  write_csv_with_manifest(ctx.out_dir / "envelope.csv", env.str(), m);
  write_csv_with_manifest(ctx.out_dir / "trend.csv", tr.str(), m);

  char buf[96];
  std::snprintf(buf, sizeof buf, "statistic %s: T_obs = %.6g, bayesian_p = %.4f\n", to_string(ppc.statistic),
                ppc.t_obs, ppc.bayesian_p);
  *ctx.out << buf << interpret_p_value(ppc.bayesian_p) << " (good near 0.5, poor near 0 or 1)\n";
  return kExitOk;
}

// ---- assess

inline std::vector<std::pair<std::string, SensorFile>> load_sensor_inputs(const CommandContext& ctx,
                                                                          const std::filesystem::path& path) {
  const auto& ing = ctx.config.ingest;
  std::vector<std::pair<std::string, SensorFile>> out;
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    auto files = parse_directory(path, ing.columns, ing.timezone);
    for (auto& f : files) out.emplace_back(std::filesystem::path(f.meta.source).stem().string(), std::move(f));
  } else {
    out.emplace_back(path.stem().string(), parse_csv(path, ing.columns, ing.timezone));
  }
  for (const auto& [name, f] : out)
    for (const auto& w : f.meta.warnings) *ctx.err << "warning: " << w << '\n';
  return out;
}

// Mean over the last 10 minutes of an occupied window: the level compared
// against c_target.
inline double observed_level(const Co2Series& s) {
  const double t_end = s.time(s.size() - 1);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = s.size(); i-- > 0 && t_end - s.time(i) <= 600.0;) {
    sum += s.value(i);
    ++n;
  }
  return sum / static_cast<double>(n);
}

inline int cmd_assess(const CommandContext& ctx, const std::filesystem::path& data_path) {
  const auto& cfg = ctx.config;
  const double v = cfg.geometry.volume_l();
  const auto inputs = load_sensor_inputs(ctx, data_path);

  struct Window {
    std::string label, season;
    Co2Series series;
  };
  std::vector<Window> windows;
  for (const auto& [name, f] : inputs) {
    for (const auto& seg : segment_occupied(f.series, cfg.ingest.segment, f.meta.accuracy_ppm)) {
      const auto slice = seg.slice(f.series);
      const Season season = season_of(slice.time(0));
      if (std::find(cfg.ingest.seasons.begin(), cfg.ingest.seasons.end(), season) == cfg.ingest.seasons.end()) {
        ctx.log("skipping " + seg.day + " (" + to_string(season) + " not in configured seasons)");
        continue;
      }
      windows.push_back({inputs.size() > 1 ? name + "/" + seg.day : seg.day, to_string(season), slice});
    }
  }
  if (windows.empty())
    throw InputError("no occupied windows found: check ingest.school_start, rise_threshold_ppm_per_h (" +
                     format_double(cfg.ingest.segment.rise_threshold_ppm_per_h) + "), prominence and seasons");

  AssessmentReport report;
  report.policy = cfg.policy;
  bool all_converged = true;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    ctx.log("inferring " + w.label + " (" + std::to_string(w.series.size()) + " samples)");
    const auto samples = sample_posterior(cfg.priors, w.series, v, cfg.sampler, derive_seed(ctx.seed, k));
    const auto summary = summarize(samples, cfg.sampler.hdi_mass);
    all_converged = all_converged && samples.converged;
    const ThresholdOptions topt{cfg.thresholds.enabled, cfg.thresholds.n_runs, derive_seed(ctx.seed, 100000 + k)};
    report.days.push_back(assess_day(w.label, w.season, summary, samples.converged, v, observed_level(w.series),
                                     cfg.scenarios, cfg.policy, topt));
  }
  report.seasons = summarize_seasons(report.days);

  // School-hours distribution against the mean outdoor-air-only c_target.
  std::optional<double> threshold = cfg.ingest.cdf_threshold_ppm;
  if (!threshold && cfg.thresholds.enabled) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& d : report.days)
      if (d.scenarios.front().thresholds) {
        sum += d.scenarios.front().thresholds->c_target;
        ++n;
      }
    if (n > 0) threshold = sum / static_cast<double>(n);
  }
  std::vector<Co2Series> all;
  for (const auto& [name, f] : inputs) all.push_back(f.series);
  CdfFilter filter{cfg.ingest.school_hours_start_s, cfg.ingest.school_hours_end_s, cfg.ingest.seasons, {}};
  const auto cdf = school_hours_cdf(all, filter, threshold);

  const auto m = ctx.manifest("assess", {{"data", data_path.string()}});
  Json j = {{"manifest", m}, {"report", to_json(report)}};
  j["school_hours"] = {{"filter", filter.describe()}, {"n_samples", cdf.n_samples}};
  j["school_hours"]["threshold_ppm"] = cdf.threshold_ppm ? Json(*cdf.threshold_ppm) : Json(nullptr);
  j["school_hours"]["fraction_at_or_below"] = cdf.fraction_at_or_below ? Json(*cdf.fraction_at_or_below) : Json(nullptr);
  write_json(ctx.out_dir / "assessment.json", j);

  std::ostringstream table;
  table << "day,season,scenario,cadr_cfm,occupancy,ecai,complies_ecai,c_limit,c_target,c_ideal,observed_within_target\n";
  for (const auto& d : report.days)
    for (const auto& s : d.scenarios) {
      table << d.day << ',' << d.season << ',' << s.scenario << ',' << format_double(s.cadr_cfm) << ','
            << d.occupancy << ',' << (s.ecai ? format_double(*s.ecai) : "") << ',' << (s.complies_ecai ? 1 : 0) << ',';
      if (s.thresholds)
        table << format_double(s.thresholds->c_limit) << ',' << format_double(s.thresholds->c_target) << ','
              << format_double(s.thresholds->c_ideal) << ',' << (*s.observed_within_target ? 1 : 0);
      else
        table << ",,,";
      table << '\n';
    }
  write_csv_with_manifest(ctx.out_dir / "ecai_table.csv", table.str(), m);
  std::ostringstream cdf_csv;
  write_cdf_csv(cdf_csv, cdf);
  write_csv_with_manifest(ctx.out_dir / "cdf.csv", cdf_csv.str(), m);

  char buf[200];
  std::snprintf(buf, sizeof buf, "%-14s %-7s %8s %8s %4s %8s %s\n", "day", "season", "q_ach", "e_lps", "N", "ecai",
                "complies");
  *ctx.out << buf;
  for (const auto& d : report.days) {
    std::snprintf(buf, sizeof buf, "%-14s %-7s %8.3f %8.4f %4d %8.2f %s%s\n", d.day.c_str(), d.season.c_str(),
                  d.posterior_mean.q_ach, d.posterior_mean.e_lps, d.occupancy, d.ecai_provided.value_or(0.0),
                  d.complies_ecai ? "yes" : "no", d.converged ? "" : "  (not converged)");
    *ctx.out << buf;
  }
  if (cdf.fraction_at_or_below) {
    std::snprintf(buf, sizeof buf, "school-hour samples at or below %.1f ppm: %.1f%%\n", *cdf.threshold_ppm,
                  100.0 * *cdf.fraction_at_or_below);
    *ctx.out << buf;
  }
  if (!all_converged) {
    *ctx.err << "\n*** WARNING: at least one window did not converge ***\n\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// ---- thresholds

struct ThresholdInput {
  std::string label;
  double e_lps = 0.0;
  double c_out = 0.0;
  double sigma = 0.0;
  int occupancy = 0;
};

// {"e_lps", "c_out_ppm", "sigma", "occupancy"?} or {"days": [...]} of those.
inline std::vector<ThresholdInput> threshold_inputs_from_json(const Json& j, const EcaPolicy& policy,
                                                              const std::string& where) {
  auto one = [&](const Json& o, const std::string& w, std::string label) {
    check_keys(o, {"label", "e_lps", "c_out_ppm", "sigma", "occupancy"}, w);
    ThresholdInput in;
    in.label = o.value("label", label);
    in.e_lps = get_field<double>(o, "e_lps", w);
    in.c_out = get_field<double>(o, "c_out_ppm", w);
    in.sigma = get_field<double>(o, "sigma", w);
    in.occupancy = o.contains("occupancy") ? get_field<int>(o, "occupancy", w) : estimate_occupancy(in.e_lps, policy);
    if (in.occupancy < 1) throw InputError(w + ": occupancy must be >= 1");
    ModelParams{1.0, in.c_out, in.e_lps, in.sigma}.validate();
    return in;
  };
  std::vector<ThresholdInput> out;
  if (j.contains("days")) {
    check_keys(j, {"days"}, where);
    const auto& days = j.at("days");
    if (!days.is_array() || days.empty()) throw InputError(where + ".days must be a nonempty array");
    for (std::size_t i = 0; i < days.size(); ++i)
      out.push_back(one(days[i], where + ".days[" + std::to_string(i) + "]", "day" + std::to_string(i + 1)));
  } else {
    out.push_back(one(j, where, "params"));
  }
  return out;
}

// Per CADR point, the triple averaged over the inputs (one ensemble each).
inline std::vector<CadrTriple> threshold_ladder(const std::vector<ThresholdInput>& inputs,
                                                const std::vector<double>& grid, double volume_l,
                                                const EcaPolicy& policy, std::size_t n_runs, std::uint64_t seed) {
  std::vector<CadrTriple> out;
  for (double cadr : grid) {
    const auto scenario = MitigationScenario::with_cadr(cadr);
    ThresholdTriple avg;
    avg.n_runs = n_runs;
    double var = 0.0;
    for (std::size_t d = 0; d < inputs.size(); ++d) {
      const auto& in = inputs[d];
      const auto t = threshold_ensemble(in.e_lps, in.c_out, in.sigma, volume_l, in.occupancy, scenario, policy,
                                        n_runs, derive_seed(seed, d));
      avg.mean += t.mean;
      var += t.sd * t.sd;
      avg.went_negative = avg.went_negative || t.went_negative;
    }
    const double n = static_cast<double>(inputs.size());
    avg.mean /= n;
    avg.sd = std::sqrt(var / n);
    const auto triple = ThresholdTriple::from_mean_sd(avg.mean, avg.sd, n_runs);
    out.emplace_back(cadr, ThresholdTriple{triple.c_limit, triple.c_target, triple.c_ideal,
                                           ThresholdTriple::Provenance::ensemble, avg.mean, avg.sd, n_runs,
                                           avg.went_negative});
  }
  return out;
}

inline int cmd_thresholds(const CommandContext& ctx, const std::optional<std::filesystem::path>& posterior_path,
                          const std::optional<std::filesystem::path>& params_path,
                          const std::optional<std::vector<double>>& cadr_grid) {
  const auto& cfg = ctx.config;
  if (posterior_path.has_value() == params_path.has_value())
    throw InputError("thresholds: give exactly one of --posterior or --params");
  std::vector<ThresholdInput> inputs;
  Json args = Json::object();
  if (posterior_path) {
    args["posterior"] = posterior_path->string();
    const auto samples = posterior_from_json(read_json_file(*posterior_path), posterior_path->string());
    const auto mean = summarize(samples, samples.config.hdi_mass).means();
    const int n = estimate_occupancy(mean.e_lps, cfg.policy);
    if (n < 1) throw InputError("thresholds: posterior emission rate implies zero occupancy");
    inputs.push_back({"posterior", mean.e_lps, mean.c_out_ppm, mean.sigma, n});
  } else {
    args["params"] = params_path->string();
    inputs = threshold_inputs_from_json(read_json_file(*params_path), cfg.policy, params_path->string());
  }
  const auto grid = cadr_grid.value_or(cfg.thresholds.cadr_grid);
  if (grid.empty()) throw InputError("thresholds: CADR grid is empty");
  args["cadr_grid"] = grid;

  const auto ladder = threshold_ladder(inputs, grid, cfg.geometry.volume_l(), cfg.policy, cfg.thresholds.n_runs, ctx.seed);
  const auto m = ctx.manifest("thresholds", args);
  Json points = Json::array();
  for (const auto& [cadr, t] : ladder)
    points.push_back({{"cadr_cfm", cadr}, {"ensemble", to_json(t)}, {"empirical", to_json(threshold_empirical(cadr))}});
  Json in_json = Json::array();
  for (const auto& in : inputs)
    in_json.push_back({{"label", in.label}, {"e_lps", in.e_lps}, {"c_out_ppm", in.c_out}, {"sigma", in.sigma},
                       {"occupancy", in.occupancy}});
  Json j = {{"manifest", m}, {"inputs", in_json}, {"points", points}};
  try {
    j["fit"] = to_json(fit_threshold_curve(ladder, cfg.thresholds.breakpoint_cfm));
  } catch (const InputError& e) {
    j["fit"] = nullptr;
    j["fit_error"] = e.what();
    *ctx.err << "warning: " << e.what() << '\n';
  }
  write_json(ctx.out_dir / "thresholds.json", j);
  std::ostringstream csv;
  write_threshold_csv(csv, ladder);
  write_csv_with_manifest(ctx.out_dir / "thresholds.csv", csv.str(), m);

  char buf[160];
  std::snprintf(buf, sizeof buf, "%9s %9s %9s %9s | %9s (empirical)\n", "cadr_cfm", "c_limit", "c_target", "c_ideal",
                "c_target");
  *ctx.out << buf;
  for (const auto& [cadr, t] : ladder) {
    std::snprintf(buf, sizeof buf, "%9.0f %9.1f %9.1f %9.1f | %9.1f\n", cadr, t.c_limit, t.c_target, t.c_ideal,
                  threshold_empirical(cadr).c_target);
    *ctx.out << buf;
  }
  if (!j["fit"].is_null()) {
    const auto& f = j["fit"]["c_target"];
    std::snprintf(buf, sizeof buf, "fitted c_target: slope %.3f, intercept %.1f, breakpoint %.0f, plateau %.1f\n",
                  f["slope"].get<double>(), f["intercept"].get<double>(), f["breakpoint"].get<double>(),
                  f["plateau"].get<double>());
    *ctx.out << buf;
  }
  return kExitOk;
}

// ---- error mapping

template <class Fn>
int run_guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const PosteriorUnreachableError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnreachable;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DegenerateDataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace co2grey
