#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "co2grey/core_model.hpp"
#include "co2grey/io.hpp"
#include "co2grey/stats.hpp"

using namespace co2grey;
using Catch::Approx;

namespace {

constexpr double kChamberL = 19320.0;

// Test-4 style chamber: 1.9 ACH, E = 0.013 L/s.
ModelParams chamber_params(double sigma = 0.0) {
  return {1.9 * kChamberL / 3600.0, 420.0, 0.013, sigma};
}

}  // namespace

TEST_CASE("room geometry volume and validation") {
  CHECK(RoomGeometry::chamber().volume_l() == Approx(kChamberL).epsilon(1e-9));
  CHECK(RoomGeometry::classroom1().volume_l() == Approx(9.4 * 6.6 * 3.47 * 1000).epsilon(1e-9));
  CHECK_THROWS_AS((RoomGeometry{0.0, 1.0, 1.0}.validate()), InputError);
  CHECK_THROWS_AS((RoomGeometry{1.0, -1.0, 1.0}.validate()), InputError);
  CHECK_NOTHROW(RoomGeometry::classroom2().validate());
}

TEST_CASE("model parameter invariants") {
  CHECK_NOTHROW((ModelParams{1, 400, 0, 0}.validate()));
  CHECK_THROWS_AS((ModelParams{-1, 400, 0, 0}.validate()), InputError);
  CHECK_THROWS_AS((ModelParams{1, 400, -0.1, 0}.validate()), InputError);
  CHECK_THROWS_AS((ModelParams{1, 400, 0, -1}.validate()), InputError);
  CHECK_THROWS_AS((ModelParams{1, 5000.5, 0, 0}.validate()), InputError);
  CHECK(ModelParams::c_e == 1e6);
}

TEST_CASE("ach round trip through L/s is the identity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ach(0.0, 20.0), vol(1e3, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double a = ach(rng), v = vol(rng);
    const double back = AchRate::from_lps(AchRate{a}.to_lps(v), v).ach;
    CHECK(std::abs(back - a) <= 1e-12 * std::max(1.0, a));
  }
}

TEST_CASE("drift arithmetic") {
  CHECK(drift(420.0, {5.0, 420.0, 0.0, 0.0}, kChamberL) == 0.0);
  CHECK(drift(420.0, {0.0, 420.0, 0.013, 0.0}, kChamberL) == Approx(0.013e6 * 3600 / kChamberL));
  CHECK(drift(420.0, {0.0, 420.0, 0.013, 0.0}, kChamberL) == Approx(2422.4).margin(0.05));
  CHECK(drift(1000.0, {10.195, 400.0, 0.0, 0.0}, kChamberL) == Approx(-600.0 * 10.195 * 3600 / kChamberL)); // about -1139.6
  CHECK(drift(1000.0, {10.195, 400.0, 0.0, 0.0}, kChamberL) == Approx(-1139.6).margin(0.5));
  CHECK_THROWS_AS(checked_drift(std::nan(""), chamber_params(), kChamberL), InputError);
  CHECK_THROWS_AS(checked_drift(400.0, chamber_params(), 0.0), InputError);
}

TEST_CASE("closed-form solution") {
  const ModelParams p{10.195, 400.0, 0.013, 0.0};
  CHECK(closed_form_ode(400.0, p, kChamberL, 0.0) == 400.0);
  const double css = 400.0 + 0.013e6 / 10.195;
  CHECK(closed_form_ode(400.0, p, kChamberL, 50.0) == Approx(css).epsilon(1e-6));
  const double lambda = 10.195 * 3600 / kChamberL;
  CHECK(closed_form_ode(400.0, p, kChamberL, 1.0) == Approx(css + (400.0 - css) * std::exp(-lambda)).epsilon(1e-12));
  // 400 + 1275.1 (1 - e^-1.9)
  CHECK(closed_form_ode(400.0, p, kChamberL, 1.0) == Approx(1484.4).margin(0.1));
}

TEST_CASE("steady state and the no-ventilation branch") {
  CHECK(steady_state({5.0, 420.0, 0.0, 0.0}, kChamberL) == 420.0);
  CHECK(steady_state(chamber_params(), kChamberL) == Approx(1695.0).margin(0.5));
  CHECK(steady_state({133.2, 420.0, 18 * 0.0047, 0.0}, 2e5) == Approx(1055.1).margin(0.1));
  CHECK_THROWS_AS(steady_state({0.0, 420.0, 0.013, 0.0}, kChamberL), NoVentilationError);
  const ModelParams closed{0.0, 420.0, 0.013, 0.0};
  CHECK(no_ventilation_growth(420.0, closed, kChamberL, 2.0) == Approx(420.0 + 0.013e6 * 3600 * 2 / kChamberL));
  // Euler is exact for linear growth.
  const auto s = simulate_ode(420.0, closed, kChamberL, 1.0, 1.0 / 60.0);
  CHECK(s.value(s.size() - 1) == Approx(no_ventilation_growth(420.0, closed, kChamberL, 1.0)).epsilon(1e-12));
}

TEST_CASE("em_step arithmetic") {
  const ModelParams p{10.195, 400.0, 0.0, 72.7};
  const double dt = 1.0 / 180.0;
  CHECK(em_step(1000.0, p, kChamberL, dt, 1.0) == Approx(999.088).margin(0.01));
  CHECK(em_step(1000.0, p, kChamberL, dt, 0.0) == euler_step(1000.0, p, kChamberL, dt));
  ModelParams quiet = p;
  quiet.sigma = 0.0;
  for (double z : {-3.0, 0.5, 2.0}) CHECK(em_step(1000.0, quiet, kChamberL, dt, z) == euler_step(1000.0, quiet, kChamberL, dt));
}

TEST_CASE("simulate_ode tracks the closed form at first order") {
  const auto p = chamber_params();
  auto max_err = [&](double dt_s) {
    const auto s = simulate_ode(420.0, p, kChamberL, 3.0, dt_s / 3600.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      worst = std::max(worst, std::abs(s.value(i) - closed_form_ode(420.0, p, kChamberL, s.hours(i))));
    return worst;
  };
  const auto s = simulate_ode(420.0, p, kChamberL, 3.0, 1.0 / 3600.0);
  CHECK(s.size() == 10801);
  CHECK(std::abs(s.value(10800) / closed_form_ode(420.0, p, kChamberL, 3.0) - 1.0) < 0.005);
  const double e1 = max_err(20.0), e2 = max_err(10.0), e3 = max_err(5.0);
  CHECK(e2 <= 0.5 * e1 * 1.02);
  CHECK(e3 <= 0.5 * e2 * 1.02);
}

TEST_CASE("simulate_ode decay slope") {
  const ModelParams p{1.9 * kChamberL / 3600.0, 420.0, 0.0, 0.0};
  const auto s = simulate_ode(2000.0, p, kChamberL, 2.0, 1.0 / 3600.0);
  std::vector<double> t, y;
  for (std::size_t i = 0; i < s.size(); ++i) {
    t.push_back(s.hours(i));
    y.push_back(std::log((s.value(i) - 420.0) / 1580.0));
  }
  CHECK(stats::linear_fit(t, y).slope == Approx(-1.9).epsilon(1e-3));
}

TEST_CASE("simulate_ode constant series at equilibrium without a source") {
  const auto s = simulate_ode(420.0, {3.0, 420.0, 0.0, 0.0}, kChamberL, 1.0, 1.0 / 180.0);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.value(i) == 420.0);
}

TEST_CASE("ode trajectories approach steady state monotonically without crossing") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelParams p{0.5 + 20.0 * u(rng), 300.0 + 200.0 * u(rng), 0.05 * u(rng), 0.0};
    const double css = steady_state(p, kChamberL);
    const double c0 = 3000.0 * u(rng);
    const auto s = simulate_ode(c0, p, kChamberL, 3.0, 20.0 / 3600.0);
    const double sign = c0 > css ? -1.0 : 1.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      REQUIRE(sign * (s.value(i) - s.value(i - 1)) >= -1e-9);
      REQUIRE(sign * (css - s.value(i)) >= -1e-9);
    }
  }
}

TEST_CASE("stability guard rejects dt beyond 2/lambda") {
  const auto p = chamber_params();
  CHECK_THROWS_AS(simulate_ode(420, p, kChamberL, 5.0, 1.1), InputError);
  CHECK_NOTHROW(simulate_ode(420, p, kChamberL, 5.0, 1.0));
  CHECK_THROWS_AS(simulate_ode(420, p, kChamberL, 0.001, 0.01), InputError);
  CHECK_THROWS_AS(simulate_ode(420, p, kChamberL, 1.0, 0.0), InputError);
}

TEST_CASE("sde with zero sigma is bit-identical to the ode") {
  const auto ode = simulate_ode(420.0, chamber_params(0.0), kChamberL, 3.0, 20.0 / 3600.0);
  const auto sde = simulate_sde(420.0, chamber_params(0.0), kChamberL, 3.0, 20.0 / 3600.0, 99);
  REQUIRE(ode.size() == sde.size());
  for (std::size_t i = 0; i < ode.size(); ++i) REQUIRE(ode.value(i) == sde.value(i));
}

TEST_CASE("sde is deterministic per seed") {
  const auto p = chamber_params(72.7);
  const auto a = simulate_sde(420.0, p, kChamberL, 3.0, 20.0 / 3600.0, 5);
  const auto b = simulate_sde(420.0, p, kChamberL, 3.0, 20.0 / 3600.0, 5);
  const auto c = simulate_sde(420.0, p, kChamberL, 3.0, 20.0 / 3600.0, 6);
  CHECK(series_csv(a) == series_csv(b));
  CHECK(a != c);
}

TEST_CASE("ensemble mean and stationary variance") {
  const auto p = chamber_params(72.7);
  const double dt = 20.0 / 3600.0;
  const auto ens = simulate_ensemble(420.0, p, kChamberL, 3.0, dt, 2024, 1000);
  const auto m = ens.mean();
  const auto v = ens.variance();
  const double lambda = decay_rate(p, kChamberL);
  int outside = 0;
  for (std::size_t k = 54; k < m.size(); k += 54) {
    // Euler drift is the oracle's discretization; compare with the exact mean
    // of the discrete recursion to avoid O(dt) bias.
    const double exact_discrete = steady_state(p, kChamberL) +
                                  (420.0 - steady_state(p, kChamberL)) * std::pow(1.0 - lambda * dt, static_cast<double>(k));
    if (std::abs(m[k] - exact_discrete) > 3.0 * std::sqrt(v[k] / 1000.0)) ++outside;
  }
  CHECK(outside <= 1);
  const double stationary = 72.7 * 72.7 / (2.0 * lambda);
  CHECK(stationary == Approx(1390.9).margin(1.0));
  CHECK(v.back() == Approx(stationary).epsilon(0.15));
  CHECK_FALSE(ens.went_negative);
}

TEST_CASE("ensemble flags negative excursions without clamping") {
  const ModelParams p{1.9 * kChamberL / 3600.0, 5.0, 0.0, 400.0};
  const auto ens = simulate_ensemble(5.0, p, kChamberL, 1.0, 20.0 / 3600.0, 3, 50);
  CHECK(ens.went_negative);
  bool saw_negative = false;
  for (const auto& r : ens.runs)
    for (double x : r) saw_negative = saw_negative || x < 0.0;
  CHECK(saw_negative);
}

TEST_CASE("ensemble is independent of run scheduling") {
  const auto p = chamber_params(72.7);
  const auto a = simulate_ensemble(420.0, p, kChamberL, 1.0, 20.0 / 3600.0, 77, 64);
  const auto b = simulate_ensemble(420.0, p, kChamberL, 1.0, 20.0 / 3600.0, 77, 64);
  CHECK(a.runs == b.runs);
  // Run i is the single path from stream (seed, i).
  Engine rng = make_engine(77, 10);
  CHECK(a.runs[10] == sde_path(420.0, p, kChamberL, 20.0 / 3600.0, a.t_seconds.size() - 1, rng));
}
