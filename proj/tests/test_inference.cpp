#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "co2grey/inference.hpp"
#include "co2grey/io.hpp"
#include "co2grey/presets.hpp"

using namespace co2grey;
using Catch::Approx;

namespace {

constexpr double kChamberL = 19320.0;

Co2Series test4_twin(std::uint64_t seed) { return find_preset("test4").simulate(seed); }

SamplerConfig quick_config() {
  SamplerConfig c;
  c.draws = 1000;
  c.burn_in = 300;
  return c;
}

// Independent Euler-Maruyama log-likelihood, written out term by term.
double reference_loglik(const ParamDraw& d, const Co2Series& s, double v) {
  const double q_lps = d.q_ach * v / 3600.0;
  double ll = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double dt = (s.time(i + 1) - s.time(i)) / 3600.0;
    const double mu = s.value(i) + ((d.c_out_ppm - s.value(i)) * q_lps + d.e_lps * 1e6) / v * 3600.0 * dt;
    const double var = d.sigma * d.sigma * dt;
    const double r = s.value(i + 1) - mu;
    ll += -0.5 * std::log(2.0 * M_PI * var) - 0.5 * r * r / var;
  }
  return ll;
}

}  // namespace

TEST_CASE("log prior values") {
  const auto p = PriorSet::defaults();
  const ParamDraw inside{1.0, 400.0, 0.01, 50.0};
  CHECK(log_prior(inside, p) == Approx(-(std::log(3.0) + std::log(200.0) + std::log(0.05) + std::log(500.0))));
  CHECK(log_prior({3.5, 400.0, 0.01, 50.0}, p) == kNegInf);
  CHECK(log_prior({1.0, 600.0, 0.01, 50.0}, p) == kNegInf);
  CHECK(log_prior({1.0, 400.0, -0.01, 50.0}, p) == kNegInf);
  auto informative = p;
  informative[Param::q] = PriorSpec::normal(2.0, 0.2);
  const double rest = -(std::log(200.0) + std::log(0.05) + std::log(500.0));
  CHECK(log_prior({2.0, 400.0, 0.01, 50.0}, informative) == Approx(-std::log(0.2 * std::sqrt(2 * M_PI)) + rest));
  // Normal prior on a nonnegative parameter still excludes negatives.
  CHECK(log_prior({-0.1, 400.0, 0.01, 50.0}, informative) == kNegInf);
}

TEST_CASE("prior spec validation") {
  CHECK_THROWS_AS(PriorSpec::uniform(3.0, 1.0), InputError);
  CHECK_THROWS_AS(PriorSpec::normal(1.0, 0.0), InputError);
  auto p = PriorSet::defaults();
  p[Param::sigma] = PriorSpec::uniform(-1.0, 10.0);
  CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("bijectors round trip and their jacobians match finite differences") {
  const std::array<Bijector, 3> bs{Bijector{Bijector::Kind::logit, 350.0, 550.0}, Bijector{Bijector::Kind::log, 0, 0},
                                   Bijector{Bijector::Kind::identity, 0, 0}};
  for (const auto& b : bs)
    for (double th : {-4.0, -0.3, 0.0, 1.7, 5.0}) {
      CHECK(b.inverse(b.forward(th)) == Approx(th).margin(1e-9));
      const double h = 1e-6;
      const double fd = (b.forward(th + h) - b.forward(th - h)) / (2 * h);
      CHECK(b.dforward(th) == Approx(fd).epsilon(1e-6));
      CHECK(std::log(b.dforward(th)) == Approx(b.log_jacobian(th)).margin(1e-10));
      const double fdj = (b.log_jacobian(th + h) - b.log_jacobian(th - h)) / (2 * h);
      CHECK(b.d_log_jacobian(th) == Approx(fdj).margin(1e-6));
    }
}

TEST_CASE("likelihood matches a term-by-term reference on regular and irregular grids") {
  const auto s = test4_twin(1);
  const ParamDraw d{1.7, 430.0, 0.012, 80.0};
  CHECK(log_likelihood_em(d, s, kChamberL) == Approx(reference_loglik(d, s, kChamberL)).epsilon(1e-10));
  // Drop every third sample: gaps of 20 s and 40 s.
  std::vector<double> t, c;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i % 3 != 2) {
      t.push_back(s.time(i));
      c.push_back(s.value(i));
    }
  const Co2Series irregular(t, c);
  CHECK(log_likelihood_em(d, irregular, kChamberL) == Approx(reference_loglik(d, irregular, kChamberL)).epsilon(1e-10));
}

TEST_CASE("likelihood on noise-free data") {
  const auto p = find_preset("test4");
  const auto s = simulate_ode(420.0, p.params(), kChamberL, 3.0, 20.0 / 3600.0);
  const double dt = 20.0 / 3600.0;
  const double n = static_cast<double>(s.size() - 1);
  const ParamDraw truth{1.9, 420.0, 0.013, 10.0};
  CHECK(log_likelihood_em(truth, s, kChamberL) == Approx(n * -0.5 * std::log(2 * M_PI * 100.0 * dt)).epsilon(1e-9));
  ParamDraw wider = truth;
  wider.sigma = 20.0;
  CHECK(log_likelihood_em(wider, s, kChamberL) < log_likelihood_em(truth, s, kChamberL));
  ParamDraw zero = truth;
  zero.sigma = 0.0;
  CHECK_THROWS_AS(log_likelihood_em(zero, s, kChamberL), DegenerateDataError);
  zero.q_ach = 1.8;
  CHECK(log_likelihood_em(zero, s, kChamberL) == kNegInf);
  CHECK_THROWS_AS(log_likelihood_em(truth, s.slice(0, 1), kChamberL), InputError);
}

TEST_CASE("likelihood grid search peaks near the true ventilation rate") {
  const auto s = test4_twin(2024);
  double best_q = -1.0, best = kNegInf;
  for (int i = 0; i <= 300; ++i) {
    const double q = 0.01 * i;
    const double ll = log_likelihood_em({q, 420.0, 0.013, 72.7}, s, kChamberL);
    if (ll > best) {
      best = ll;
      best_q = q;
    }
  }
  CHECK(std::abs(best_q - 1.9) <= 0.1);
}

TEST_CASE("informative prior pulls the conditional mode toward its mean") {
  const auto s = test4_twin(2024);
  auto flat = PriorSet::defaults();
  auto informative = flat;
  informative[Param::q] = PriorSpec::normal(2.0, 0.2);
  auto argmax = [&](const PriorSet& p) {
    double arg = 0, best = kNegInf;
    for (int i = 1; i < 3000; ++i) {
      const double q = 0.001 * i;
      const double lp = log_posterior({q, 420.0, 0.013, 72.7}, p, s, kChamberL);
      if (lp > best) {
        best = lp;
        arg = q;
      }
    }
    return arg;
  };
  const double a_flat = argmax(flat), a_inf = argmax(informative);
  CHECK(std::abs(a_inf - 2.0) < std::abs(a_flat - 2.0));
  CHECK(log_posterior({3.2, 420.0, 0.013, 72.7}, flat, s, kChamberL) == kNegInf);
}

TEST_CASE("analytic gradient matches central differences") {
  const auto s = test4_twin(9);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const bool normal_priors : {false, true}) {
    auto priors = PriorSet::defaults();
    if (normal_priors) {
      priors[Param::q] = PriorSpec::normal(2.0, 0.2);
      priors[Param::c_out] = PriorSpec::normal(400.0, 20.0);
      priors[Param::e] = PriorSpec::normal(0.013, 0.005);
    }
    const detail::UnconstrainedTarget target(priors, s, kChamberL);
    for (int k = 0; k < 20; ++k) {
      detail::Vec th{};
      for (auto& v : th) v = u(rng);
      if (normal_priors) {
        th[0] = std::log(1.5 + 0.5 * u(rng) / 2.0);
        th[1] = 410.0 + 5.0 * u(rng);
        th[2] = std::log(0.013 + 0.002 * u(rng) / 2.0);
      }
      detail::Vec g{}, scratch{};
      const double f = target(th, g);
      REQUIRE(std::isfinite(f));
      for (std::size_t i = 0; i < kNumParams; ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(th[i]));
        auto plus = th, minus = th;
        plus[i] += h;
        minus[i] -= h;
        const double fd = (target(plus, scratch) - target(minus, scratch)) / (2 * h);
        CHECK(g[i] == Approx(fd).epsilon(1e-6).margin(1e-6 * std::abs(f) * 1e-3));
      }
    }
  }
}

TEST_CASE("posterior equals the prior when the likelihood is flat") {
  // One pair with zero increment at C = C_out and no source: drift is zero for
  // every Q, so the data say nothing about Q.
  const Co2Series s({0.0, 20.0}, {420.0, 420.0});
  PriorSet p = PriorSet::defaults();
  p[Param::c_out] = PriorSpec::uniform(420.0 - 1e-7, 420.0 + 1e-7);
  p[Param::e] = PriorSpec::uniform(0.0, 1e-12);
  p[Param::sigma] = PriorSpec::uniform(50.0, 50.0 + 1e-6);
  const auto post = sample_posterior(p, s, kChamberL, SamplerConfig{}, 31);
  const auto q = post.pooled(Param::q);
  REQUIRE(q.size() == 10000);
  CHECK(stats::ks_distance(q, [](double x) { return std::clamp(x / 3.0, 0.0, 1.0); }) < 0.05);
}

TEST_CASE("recovery and convergence on a constant-injection twin") {
  const auto s = test4_twin(4);
  const auto post = sample_posterior(PriorSet::defaults(), s, kChamberL, SamplerConfig{}, 4);
  const auto sum = summarize(post, 0.95);
  CHECK(post.converged);
  for (const auto& d : post.diagnostics) {
    CHECK(d.r_hat <= 1.05);
    CHECK(d.ess >= 400.0);
  }
  CHECK(sum[Param::q].hdi_low <= 1.9);
  CHECK(sum[Param::q].hdi_high >= 1.9);
  CHECK(std::abs(sum[Param::q].mean / 1.9 - 1.0) < 0.15);
  CHECK(post.chains.size() == 2);
  CHECK(post.chains[0].size() == 5000);
}

TEST_CASE("decay twin recovery with the source pinned at zero") {
  const auto preset = find_preset("test1");
  const auto post = sample_posterior(preset.priors(), preset.simulate(11), kChamberL, quick_config(), 11);
  const auto sum = summarize(post, 0.95);
  CHECK(std::abs(sum[Param::q].mean / 1.9 - 1.0) < 0.05);
}

TEST_CASE("sampling is deterministic and chains are distinct") {
  const auto s = test4_twin(3);
  const auto a = sample_posterior(PriorSet::defaults(), s, kChamberL, quick_config(), 77);
  const auto b = sample_posterior(PriorSet::defaults(), s, kChamberL, quick_config(), 77);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(a.chains[0] != a.chains[1]);
  const auto c = sample_posterior(PriorSet::defaults(), s, kChamberL, quick_config(), 78);
  CHECK(a.chains[0] != c.chains[0]);
}

TEST_CASE("adaptation stops at the end of burn-in") {
  // With the kernel frozen after burn-in, asking for more draws only extends
  // each chain.
  const auto s = test4_twin(3);
  auto short_cfg = quick_config();
  auto long_cfg = quick_config();
  long_cfg.draws = 1500;
  const auto a = sample_posterior(PriorSet::defaults(), s, kChamberL, short_cfg, 5);
  const auto b = sample_posterior(PriorSet::defaults(), s, kChamberL, long_cfg, 5);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a.kernels[k].step_size == b.kernels[k].step_size);
    CHECK(std::equal(a.chains[k].begin(), a.chains[k].end(), b.chains[k].begin()));
  }
}

TEST_CASE("sampler configuration limits") {
  auto c = SamplerConfig{};
  c.draws = 999;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SamplerConfig{};
  c.chains = 1;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("unreachable posterior is reported") {
  const Co2Series s({0.0, 20.0, 40.0}, {1e308, -1e308, 1e308});
  CHECK_THROWS_AS(sample_posterior(PriorSet::defaults(), s, kChamberL, quick_config(), 1), PosteriorUnreachableError);
}

TEST_CASE("degenerate constant data: sampler completes on the drift-balance surface") {
  std::vector<double> t, c;
  for (int i = 0; i < 200; ++i) {
    t.push_back(20.0 * i);
    c.push_back(600.0);
  }
  PriorSet p = PriorSet::defaults();
  p[Param::sigma] = PriorSpec::uniform(10.0, 20.0);
  const auto post = sample_posterior(p, Co2Series(t, c), kChamberL, quick_config(), 8);
  const double k = 1e6 * 3600.0 / kChamberL;
  const double hours = 199 * 20.0 / 3600.0;
  double worst = 0.0;
  for (const auto& d : post.pooled_draws())
    worst = std::max(worst, std::abs(d.q_ach * (d.c_out_ppm - 600.0) + d.e_lps * k));
  // Drift at the observed level stays within a few noise units of zero.
  CHECK(worst < 5.0 * 20.0 / std::sqrt(hours));
  // Q is not identified: its marginal stays broad.
  CHECK(stats::sd(post.pooled(Param::q)) > 0.3);
}

TEST_CASE("summaries") {
  std::vector<ParamDraw> same(2000, ParamDraw{1.0, 400.0, 0.01, 30.0});
  const auto s = summarize_draws(same, 0.95);
  CHECK(s[Param::q].mean == 1.0);
  CHECK(s[Param::q].sd == 0.0);
  CHECK(s[Param::q].hdi_low == 1.0);
  CHECK(s[Param::q].hdi_high == 1.0);
  CHECK_THROWS_AS(summarize_draws(std::vector<ParamDraw>(999, ParamDraw{}), 0.95), InputError);
  CHECK_THROWS_AS(summarize_draws(same, 1.2), InputError);
  CHECK_THROWS_AS(summarize_draws(same, 0.0), InputError);
}

TEST_CASE("prior sensitivity bookkeeping") {
  const auto s = test4_twin(4);
  const NamedPriorSets twice{{"a", PriorSet::defaults()}, {"b", PriorSet::defaults()}};
  const auto rep = prior_sensitivity(s, kChamberL, twice, quick_config(), 3);
  CHECK(rep.shift("a", "b", Param::q) == 0.0);
  CHECK(to_json(rep.at("a")).dump() == to_json(rep.at("b")).dump());
  CHECK_THROWS_AS(prior_sensitivity(s, kChamberL, {{"a", PriorSet::defaults()}}, quick_config(), 3), InputError);
  SamplerConfig bad = quick_config();
  bad.draws = 10;
  try {
    prior_sensitivity(s, kChamberL, twice, bad, 3);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("prior set 'a'") != std::string::npos);
  }
}

TEST_CASE("decay reference estimator") {
  std::vector<double> t, c;
  for (int i = 0; i < 100; ++i) {
    t.push_back(60.0 * i);
    c.push_back(420.0 + 1580.0 * std::exp(-1.9 * i / 60.0));
  }
  const auto exact = decay_reference_ach(Co2Series(t, c), 420.0);
  CHECK(exact.ach == Approx(1.9).epsilon(1e-9));
  CHECK(exact.se < 1e-9);
  CHECK_FALSE(exact.not_decaying);

  // Over many SDE traces the estimator centres on the discrete-time decay rate
  // of the Euler-Maruyama recursion, -ln(1 - lambda dt) / dt.
  for (const double ach : {1.9, 0.53}) {
    const ModelParams p{ach * kChamberL / 3600.0, 420.0, 0.0, 30.0};
    const double dt = 20.0 / 3600.0;
    const double horizon = ach > 1.0 ? 1.0 : 3.0;
    std::vector<double> est;
    double se_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto e = decay_reference_ach(simulate_sde(2500.0, p, kChamberL, horizon, dt, seed), 420.0);
      est.push_back(e.ach);
      se_sum += e.se;
    }
    const double discrete = -std::log(1.0 - ach * dt) / dt;
    const double mc_se = stats::sd(est) / std::sqrt(static_cast<double>(est.size()));
    CHECK(std::abs(stats::mean(est) - discrete) <= 2.0 * mc_se);
    CHECK(std::abs(stats::mean(est) / ach - 1.0) < 0.01);
    CHECK(se_sum / 200.0 > 0.0);
  }
  CHECK_THROWS_AS(decay_reference_ach(Co2Series({0, 60}, {900, 400}), 420.0), InputError);
  const auto rising = decay_reference_ach(Co2Series({0, 60, 120}, {500, 600, 700}), 420.0);
  CHECK(rising.not_decaying);
}
