// co2grey command-line front end.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "co2grey/commands.hpp"

namespace {

// "0:1000:200" (inclusive) or "0,200,400".
std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      const auto next = s.find(':', pos);
      const auto v = co2grey::detail::parse_double(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
      if (!v) throw co2grey::InputError("bad --cadr-grid '" + s + "'");
      parts.push_back(*v);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
      throw co2grey::InputError("--cadr-grid range must be start:stop:step with step > 0");
    const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return out;
  }
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(',', pos);
    const auto v = co2grey::detail::parse_double(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (!v) throw co2grey::InputError("bad --cadr-grid '" + s + "'");
    out.push_back(*v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"co2grey: stochastic grey-box CO2 model fitting and clean-air assessment"};
  app.set_version_flag("--version", std::string("co2grey ") + co2grey::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_option("--config", config_path, "run configuration JSON");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--verbose,-v", verbose, "progress messages on stderr");

  auto* sim = app.add_subcommand("simulate", "simulate a built-in scenario (test1..test7, classroom_week)");
  std::string scenario;
  sim->add_option("scenario", scenario, "scenario name")->required();

  auto* infer = app.add_subcommand("infer", "fit the model to a CO2 series");
  std::string data;
  infer->add_option("--data", data, "CO2 CSV file")->required();

  auto* ppc = app.add_subcommand("ppc", "posterior predictive check");
  std::string posterior;
  ppc->add_option("--posterior", posterior, "posterior.json from infer")->required();
  ppc->add_option("--data", data, "CO2 CSV file")->required();

  auto* assess = app.add_subcommand("assess", "per-day ventilation assessment of sensor data");
  assess->add_option("--data", data, "CSV file or directory of CSV files")->required();

  auto* thr = app.add_subcommand("thresholds", "steady-state CO2 thresholds over a CADR grid");
  std::string params, grid;
  thr->add_option("--posterior", posterior, "posterior.json from infer");
  thr->add_option("--params", params, "JSON with e_lps, c_out_ppm, sigma[, occupancy] or {\"days\": [...]}");
  thr->add_option("--cadr-grid", grid, "start:stop:step or comma list (cfm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : co2grey::kExitInput;
  }

  return co2grey::run_guarded(std::cerr, [&] {
    co2grey::CommandContext ctx;
    if (!config_path.empty()) ctx.config = co2grey::load_run_config(config_path);
    ctx.seed = seed.value_or(ctx.config.seed);
    ctx.out_dir = out_dir;
    ctx.verbose = verbose;
    if (sim->parsed()) return co2grey::cmd_simulate(ctx, scenario);
    if (infer->parsed()) return co2grey::cmd_infer(ctx, data);
    if (ppc->parsed()) return co2grey::cmd_ppc(ctx, posterior, data);
    if (assess->parsed()) return co2grey::cmd_assess(ctx, data);
    std::optional<std::filesystem::path> post, par;
    if (!posterior.empty()) post = posterior;
    if (!params.empty()) par = params;
    std::optional<std::vector<double>> g;
    if (!grid.empty()) g = parse_grid(grid);
    return co2grey::cmd_thresholds(ctx, post, par, g);
  });
}
