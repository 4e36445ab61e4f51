#pragma once

// Posterior predictive checks: regenerate SDE trajectories on the observed
// time grid from posterior draws, compare a test statistic with the observed
// one, and build per-time predictive envelopes.

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "co2grey/core_model.hpp"
#include "co2grey/error.hpp"
#include "co2grey/inference.hpp"
#include "co2grey/random.hpp"
#include "co2grey/stats.hpp"

namespace co2grey {

enum class TestStatistic { mean, max, final_value };

inline const char* to_string(TestStatistic s) {
  switch (s) {
    case TestStatistic::mean:
      return "mean";
    case TestStatistic::max:
      return "max";
    case TestStatistic::final_value:
      return "final_value";
  }
  return "mean";
}

inline TestStatistic test_statistic_from_string(const std::string& s) {
  if (s == "mean") return TestStatistic::mean;
  if (s == "max") return TestStatistic::max;
  if (s == "final_value") return TestStatistic::final_value;
  throw InputError("unknown test statistic '" + s + "' (expected mean, max or final_value)");
}

inline double compute_statistic(TestStatistic s, std::span<const double> values) {
  if (values.empty()) throw InputError("statistic of empty series");
  switch (s) {
    case TestStatistic::mean:
      return stats::mean(values);
    case TestStatistic::max:
      return *std::max_element(values.begin(), values.end());
    case TestStatistic::final_value:
      return values.back();
  }
  return 0.0;
}

// (1 + #{t_sim >= t_obs}) / (1 + n). Ties count toward the numerator.
inline double bayesian_p_value(double t_obs, std::span<const double> t_sims) {
  std::size_t ge = 0;
  for (double t : t_sims)
    if (t >= t_obs) ++ge;
  return (1.0 + static_cast<double>(ge)) / (1.0 + static_cast<double>(t_sims.size()));
}

struct Envelope {
  std::array<double, 3> levels{0.025, 0.5, 0.975};
  std::vector<double> t_seconds;
  std::vector<double> low, mid, high;
  std::vector<double> observed;
};

struct PpcResult {
  std::size_t n_sims = 0;
  TestStatistic statistic = TestStatistic::mean;
  double t_obs = 0.0;
  std::vector<double> t_sims;
  double bayesian_p = 0.5;
  Envelope envelope;
  std::uint64_t seed = 0;
  // Predictive paths start from the observed first value.
  std::string initial_value = "observed";
};

inline const char* interpret_p_value(double p) {
  if (p < 0.05 || p > 0.95) return "poor fit: observations are atypical under the model";
  if (p < 0.2 || p > 0.8) return "marginal fit";
  return "good fit: observations look typical of the posterior predictive";
}

namespace detail {

inline Envelope envelope_of(const std::vector<std::vector<double>>& paths,
                            std::span<const double> times, std::span<const double> observed,
                            const std::array<double, 3>& levels) {
  Envelope env;
  env.levels = levels;
  env.t_seconds.assign(times.begin(), times.end());
  env.observed.assign(observed.begin(), observed.end());
  std::vector<double> column(paths.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t i = 0; i < paths.size(); ++i) column[i] = paths[i][k];
    std::sort(column.begin(), column.end());
    env.low.push_back(stats::quantile_sorted(column, levels[0]));
    env.mid.push_back(stats::quantile_sorted(column, levels[1]));
    env.high.push_back(stats::quantile_sorted(column, levels[2]));
  }
  return env;
}

}  // namespace detail

// Simulation i uses selected[i] and noise stream (seed, i).
inline PpcResult ppc_from_draws(const std::vector<ParamDraw>& selected, const Co2Series& data,
                                double volume_l, std::uint64_t seed, TestStatistic statistic) {
  if (data.empty()) throw InputError("posterior_predictive: empty data");
  const auto times = data.times();
  std::vector<std::vector<double>> paths(selected.size());
  parallel_for(selected.size(), [&](std::size_t i) {
    const ModelParams p = to_model_params(selected[i], volume_l);
    check_grid(p, volume_l, times);
    Engine rng = make_engine(seed, i);
    paths[i] = sde_on_grid(data.value(0), p, volume_l, times, rng);
  });
  PpcResult r;
  r.n_sims = selected.size();
  r.statistic = statistic;
  r.seed = seed;
  r.t_obs = compute_statistic(statistic, data.values());
  for (const auto& path : paths) r.t_sims.push_back(compute_statistic(statistic, path));
  r.bayesian_p = bayesian_p_value(r.t_obs, r.t_sims);
  r.envelope = detail::envelope_of(paths, times, data.values(), r.envelope.levels);
  return r;
}

// Posterior draw indices for each simulation, uniform with replacement over the
// pooled chains, from a stream separate from the trajectory noise.
inline std::vector<std::size_t> resampling_indices(std::size_t pooled, std::size_t n_sims,
                                                   std::uint64_t seed) {
  Engine rng = make_engine(splitmix64(seed ^ 0x5eedba5eULL), 0);
  std::uniform_int_distribution<std::size_t> pick(0, pooled - 1);
  std::vector<std::size_t> idx(n_sims);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

inline PpcResult posterior_predictive(const PosteriorSamples& samples, const Co2Series& data,
                                      double volume_l, std::size_t n_sims, std::uint64_t seed,
                                      TestStatistic statistic = TestStatistic::mean) {
  const auto pooled = samples.pooled_draws();
  if (pooled.empty()) throw InputError("posterior_predictive: empty posterior");
  if (n_sims < 100) throw InputError("posterior_predictive: n_sims must be >= 100");
  if (data.empty()) throw InputError("posterior_predictive: empty data");
  std::vector<ParamDraw> selected;
  selected.reserve(n_sims);
  for (std::size_t i : resampling_indices(pooled.size(), n_sims, seed)) selected.push_back(pooled[i]);
  return ppc_from_draws(selected, data, volume_l, seed, statistic);
}

struct TrendComparison {
  std::vector<double> t_seconds;
  std::vector<double> observed;
  std::vector<double> ode;
  Envelope sde;
  // Quantiles of (SDE - ODE) per time point.
  std::vector<double> residual_low, residual_mid, residual_high;
  ParamDraw params{};
};

// ODE and n_sims SDE paths at the posterior means, on the observed grid.
inline TrendComparison trend_compare(const PosteriorSummary& summary, const Co2Series& data,
                                     double volume_l, std::size_t n_sims = 100,
                                     std::uint64_t seed = 0) {
  if (data.empty()) throw InputError("trend_compare: empty data");
  if (n_sims < 2) throw InputError("trend_compare: n_sims must be >= 2");
  const ParamDraw means = summary.means();
  const ModelParams p = to_model_params(means, volume_l);
  p.validate();
  const auto times = data.times();
  check_grid(p, volume_l, times);
  TrendComparison out;
  out.params = means;
  out.t_seconds.assign(times.begin(), times.end());
  out.observed.assign(data.values().begin(), data.values().end());
  out.ode = ode_on_grid(data.value(0), p, volume_l, times);
  std::vector<std::vector<double>> paths(n_sims);
  parallel_for(n_sims, [&](std::size_t i) {
    Engine rng = make_engine(seed, i);
    paths[i] = sde_on_grid(data.value(0), p, volume_l, times, rng);
  });
  out.sde = detail::envelope_of(paths, times, data.values(), out.sde.levels);
  auto residuals = paths;
  for (auto& r : residuals)
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= out.ode[k];
  const auto band = detail::envelope_of(residuals, times, data.values(), out.sde.levels);
  out.residual_low = band.low;
  out.residual_mid = band.mid;
  out.residual_high = band.high;
  return out;
}

}  // namespace co2grey
