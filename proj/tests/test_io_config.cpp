#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "co2grey/co2grey.hpp"

using namespace co2grey;
using Catch::Approx;

namespace {

Json parse(const std::string& s) { return parse_json_text(s, "test"); }

template <class F>
std::string error_of(F f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("doubles print in shortest round-trip form") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 1484.4173, -0.0047, 72.7}) {
    const auto s = format_double(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(format_double(20.0) == "20");
}

TEST_CASE("prior set JSON") {
  const auto p = prior_set_from_json(parse(R"({"q":{"kind":"uniform","lower":0,"upper":3},
      "c_out":{"kind":"normal","mean":400,"sd":20},"e":{"kind":"uniform","lower":0,"upper":0.05},
      "sigma":{"kind":"uniform","lower":0,"upper":500}})"));
  CHECK(p[Param::c_out] == PriorSpec::normal(400.0, 20.0));
  CHECK(prior_set_from_json(to_json(p)) == p);
  CHECK(error_of([] { prior_set_from_json(parse(R"({"q":{"kind":"uniform","lower":0,"upper":3}})")); })
            .find("missing prior for 'c_out'") != std::string::npos);
  CHECK(error_of([] { prior_spec_from_json(parse(R"({"kind":"gamma","a":1})"), "priors.q"); })
            .find("priors.q.kind") != std::string::npos);
  CHECK(error_of([] { prior_spec_from_json(parse(R"({"kind":"uniform","lower":0,"upper":3,"mean":1})"), "priors.q"); })
            .find("unknown key 'mean'") != std::string::npos);
}

TEST_CASE("posterior JSON round trip is exact") {
  SamplerConfig cfg;
  cfg.draws = 1000;
  cfg.burn_in = 200;
  const auto post = sample_posterior(PriorSet::defaults(), find_preset("test4").simulate(2), 19320.0, cfg, 2);
  const std::string text = to_json(post).dump();
  const auto back = posterior_from_json(parse(text));
  REQUIRE(back.chains.size() == post.chains.size());
  for (std::size_t c = 0; c < post.chains.size(); ++c) CHECK(back.chains[c] == post.chains[c]);
  CHECK(back.seed == post.seed);
  CHECK(back.kernels.size() == post.kernels.size());
  CHECK(back.kernels[0].step_size == post.kernels[0].step_size);
  for (std::size_t i = 0; i < kNumParams; ++i) {
    CHECK(back.diagnostics[i].r_hat == post.diagnostics[i].r_hat);
    CHECK(back.diagnostics[i].ess == post.diagnostics[i].ess);
  }
  CHECK(to_json(back).dump() == text);

  const auto j = parse(text);
  CHECK(j.at("columns") == Json::array({"q_ach", "c_out_ppm", "e_lps", "sigma"}));
  CHECK(j.at("diagnostics").at("q_ach").contains("effective_sample_size"));
  CHECK(j.at("sampler_config").at("burn_in") == 200);

  auto bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(posterior_from_json(bad), InputError);
  bad = j;
  bad["chains"][0][0] = Json::array({1.0, 2.0});
  CHECK_THROWS_AS(posterior_from_json(bad), InputError);
}

TEST_CASE("run config defaults round trip and hash stably") {
  const RunConfig c;
  const auto j = to_json(c);
  const auto back = run_config_from_json(j);
  CHECK(to_json(back).dump() == j.dump());
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  RunConfig other;
  other.seed = 2;
  CHECK(config_hash(other) != config_hash(c));
  // Equivalent documents hash the same after resolution.
  CHECK(config_hash(run_config_from_json(parse("{}"))) == config_hash(c));
  CHECK(config_hash(run_config_from_json(parse(R"({"seed": 1, "policy": {"ecai_target_lps_per_person": 20}})"))) ==
        config_hash(c));
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("run config reading") {
  const auto c = run_config_from_json(parse(R"({
    "geometry": {"preset": "classroom1"},
    "priors": {"q": {"kind": "normal", "mean": 2, "sd": 0.2}},
    "sampler": {"draws": 2000, "chains": 4},
    "policy": {"min_outdoor_fixed_lps": 37.2},
    "scenarios": [{"name": "uv", "devices": [{"label": "uv", "cadr_cfm": 200}]}],
    "ingest": {"timezone": "+01:00", "school_start": "08:30", "seasons": ["winter"],
               "columns": {"co2": "CO2"}, "school_hours": ["08:30", "15:00"]},
    "ppc": {"n_sims": 500, "statistic": "max"},
    "thresholds": {"n_runs": 300, "cadr_grid": [0, 200, 400, 600, 800], "breakpoint_cfm": 600},
    "seed": 99})"));
  CHECK(c.geometry.volume_l() == Approx(RoomGeometry::classroom1().volume_l()));
  CHECK(c.priors[Param::q] == PriorSpec::normal(2.0, 0.2));
  CHECK(c.priors[Param::c_out] == PriorSet::defaults()[Param::c_out]);
  CHECK(c.sampler.chains == 4);
  CHECK(c.policy.min_outdoor_fixed_lps == 37.2);
  REQUIRE(c.scenarios.size() == 1);
  CHECK(c.scenarios[0].cadr_cfm() == 200.0);
  CHECK(c.ingest.timezone.offset_minutes == 60);
  CHECK(*c.ingest.segment.school_start_s == 8.5 * 3600.0);
  CHECK(c.ingest.columns.co2 == "CO2");
  CHECK(c.ingest.columns.timestamp == "timestamp");
  CHECK(c.ingest.seasons == std::vector<Season>{Season::winter});
  CHECK(c.ingest.school_hours_end_s == 15.0 * 3600.0);
  CHECK(c.ppc.statistic == TestStatistic::max);
  CHECK(c.thresholds.cadr_grid.size() == 5);
  CHECK(*c.thresholds.breakpoint_cfm == 600.0);
  CHECK(c.seed == 99);
  CHECK(to_json(run_config_from_json(to_json(c))).dump() == to_json(c).dump());
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK(error_of([] { run_config_from_json(parse(R"({"sede": 1})")); }).find("unknown key 'sede'") !=
        std::string::npos);
  CHECK(error_of([] { run_config_from_json(parse(R"({"sampler": {"draw": 1000}})")); })
            .find("config.sampler: unknown key 'draw'") != std::string::npos);
  CHECK(error_of([] { run_config_from_json(parse(R"({"ingest": {"columns": {"co": "x"}}})")); })
            .find("config.ingest.columns") != std::string::npos);
  CHECK(error_of([] { run_config_from_json(parse(R"({"priors": {"Q": {}}})")); }).find("'Q'") !=
        std::string::npos);
  CHECK(error_of([] { run_config_from_json(parse(R"({"geometry": {"preset": "gym"}})")); }).find("gym") !=
        std::string::npos);
  CHECK(error_of([] { run_config_from_json(parse(R"({"geometry": {"width_m": 1, "length_m": 2}})")); })
            .find("height_m") != std::string::npos);
  CHECK(error_of([] { run_config_from_json(parse(R"({"seed": "one"})")); }).find("wrong type") !=
        std::string::npos);
  CHECK_THROWS_AS(run_config_from_json(parse(R"({"thresholds": {"n_runs": 10}})")), InputError);
  CHECK_THROWS_AS(run_config_from_json(parse(R"({"policy": {"min_outdoor_lps_per_person": 30}})")), InputError);
  CHECK_THROWS_AS(parse_json_text("{not json", "x"), InputError);
}

TEST_CASE("geometry volume consistency") {
  const auto g = geometry_from_json(to_json(RoomGeometry::chamber()));
  CHECK(g.volume_l() == Approx(19320.0));
  CHECK_THROWS_AS(geometry_from_json(parse(R"({"width_m":2.3,"length_m":3.5,"height_m":2.4,"volume_l":20000})")),
                  InputError);
}

TEST_CASE("scenario JSON") {
  const auto s = scenario_from_json(to_json(MitigationScenario::standard_set()[3]), "s");
  CHECK(s.name == "two_cleaners_800");
  CHECK(s.cadr_cfm() == 800.0);
  CHECK_THROWS_AS(scenario_from_json(parse(R"({"name":"x","devices":[{"cadr_cfm":100}],"cadr_cfm":200})"), "s"),
                  InputError);
  CHECK_THROWS_AS(scenario_from_json(parse(R"({"name":"x","devices":[{"cadr_cfm":-5}]})"), "s"), InputError);
}

TEST_CASE("CSV writers use the documented headers") {
  std::ostringstream thr, cdf, env;
  write_threshold_csv(thr, {{0.0, threshold_empirical(0.0)}});
  CHECK(thr.str() == "cadr_cfm,c_limit,c_target,c_ideal\n0,829.1,684.6,540.1\n");
  CdfTable t;
  t.co2_ppm = {500.0, 700.0};
  t.cum_fraction = {0.5, 1.0};
  write_cdf_csv(cdf, t);
  CHECK(cdf.str() == "co2_ppm,cum_fraction\n500,0.5\n700,1\n");
  Envelope e;
  e.t_seconds = {0.0};
  e.low = {1.0};
  e.mid = {2.0};
  e.high = {3.0};
  e.observed = {2.5};
  write_envelope_csv(env, e);
  CHECK(env.str() == "t_seconds,q025,q50,q975,observed\n0,1,2,3,2.5\n");
}

TEST_CASE("assessment JSON carries what is needed to recompute ECAi") {
  const auto summary = summarize_draws(std::vector<ParamDraw>(1000, ParamDraw{0.35, 430.0, 0.044, 80.0}), 0.95);
  ThresholdOptions th;
  th.n_runs = 100;
  const double v = RoomGeometry::classroom1().volume_l();
  AssessmentReport r;
  r.days.push_back(assess_day("2021-10-04", "autumn", summary, true, v, 800.0, MitigationScenario::standard_set(),
                              EcaPolicy{}, th));
  r.seasons = summarize_seasons(r.days);
  const auto j = parse(to_json(r).dump());
  const auto& day = j.at("days")[0];
  const double q = day.at("posterior_mean").at("q_ach").get<double>();
  const double vol = day.at("volume_l").get<double>();
  const int n = day.at("occupancy").get<int>();
  CHECK(day.at("ecai_provided").get<double>() == q * vol / 3600.0 / n);
  CHECK(day.at("scenarios").size() == 6);
  CHECK(day.at("scenarios")[0].at("thresholds").at("provenance").at("kind") == "ensemble");
  CHECK(j.at("seasons")[0].at("days") == 1);
}
