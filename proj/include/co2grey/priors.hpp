#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "co2grey/error.hpp"
#include "co2grey/random.hpp"

namespace co2grey {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Inferred parameters, in storage/column order.
enum class Param : std::size_t { q = 0, c_out = 1, e = 2, sigma = 3 };
inline constexpr std::size_t kNumParams = 4;
inline constexpr std::array<const char*, kNumParams> kParamNames{"q_ach", "c_out_ppm", "e_lps",
                                                                 "sigma"};
inline constexpr std::array<const char*, kNumParams> kPriorKeys{"q", "c_out", "e", "sigma"};

// Physical support of each parameter; priors must stay inside it.
inline constexpr std::array<std::pair<double, double>, kNumParams> kSupport{{
    {0.0, std::numeric_limits<double>::infinity()},
    {0.0, 5000.0},
    {0.0, std::numeric_limits<double>::infinity()},
    {0.0, std::numeric_limits<double>::infinity()},
}};

// One point of (Q [ACH], C_out [ppm], E [L/s], sigma [ppm/sqrt(h)]).
struct ParamDraw {
  double q_ach = 0.0;
  double c_out_ppm = 0.0;
  double e_lps = 0.0;
  double sigma = 0.0;

  std::array<double, kNumParams> to_array() const { return {q_ach, c_out_ppm, e_lps, sigma}; }
  static ParamDraw from_array(const std::array<double, kNumParams>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  double operator[](Param p) const { return to_array()[static_cast<std::size_t>(p)]; }

  friend bool operator==(const ParamDraw&, const ParamDraw&) = default;
};

struct PriorSpec {
  enum class Kind { uniform, normal };

  Kind kind = Kind::uniform;
  double a = 0.0;  // lower bound or mean
  double b = 1.0;  // upper bound or sd

  static PriorSpec uniform(double lower, double upper) {
    if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper))
      throw InputError("uniform prior requires finite lower < upper");
    return {Kind::uniform, lower, upper};
  }
  static PriorSpec normal(double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd))
      throw InputError("normal prior requires finite mean and sd > 0");
    return {Kind::normal, mean, sd};
  }

  double lower() const { return a; }
  double upper() const { return b; }
  double mean() const { return a; }
  double sd() const { return b; }

  double log_density(double x) const {
    if (kind == Kind::uniform) return (x >= a && x <= b) ? -std::log(b - a) : kNegInf;
    const double z = (x - a) / b;
    return -0.5 * z * z - std::log(b * std::sqrt(2.0 * std::numbers::pi));
  }

  // d/dx log_density inside the support.
  double d_log_density(double x) const {
    if (kind == Kind::uniform) return 0.0;
    return -(x - a) / (b * b);
  }

  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

struct PriorSet {
  std::array<PriorSpec, kNumParams> specs;

  const PriorSpec& operator[](Param p) const { return specs[static_cast<std::size_t>(p)]; }
  PriorSpec& operator[](Param p) { return specs[static_cast<std::size_t>(p)]; }

  void validate() const {
    for (std::size_t i = 0; i < kNumParams; ++i) {
      const auto& s = specs[i];
      const auto [lo, hi] = kSupport[i];
      if (s.kind == PriorSpec::Kind::uniform) {
        if (!(s.a < s.b)) throw InputError(std::string("prior ") + kPriorKeys[i] + ": lower >= upper");
        if (s.a < lo || s.b > hi)
          throw InputError(std::string("prior ") + kPriorKeys[i] + ": support leaves the physical range");
      } else if (!(s.b > 0.0)) {
        throw InputError(std::string("prior ") + kPriorKeys[i] + ": sd must be positive");
      }
    }
  }

  // Q ~ U(0,3) ACH, C_out ~ U(350,550) ppm, E ~ U(0,0.05) L/s; sigma ~ U(0,500).
  static PriorSet defaults() {
    return {{PriorSpec::uniform(0.0, 3.0), PriorSpec::uniform(350.0, 550.0),
             PriorSpec::uniform(0.0, 0.05), PriorSpec::uniform(0.0, 500.0)}};
  }

  friend bool operator==(const PriorSet&, const PriorSet&) = default;
};

using NamedPriorSets = std::vector<std::pair<std::string, PriorSet>>;

// The default / vague / informative alternatives, each varying one parameter.
inline NamedPriorSets sensitivity_prior_sets() {
  auto with = [](Param p, PriorSpec s) {
    PriorSet set = PriorSet::defaults();
    set[p] = s;
    return set;
  };
  return {
      {"default", PriorSet::defaults()},
      {"q_vague", with(Param::q, PriorSpec::uniform(0.0, 10.0))},
      {"q_informative", with(Param::q, PriorSpec::normal(2.0, 0.2))},
      {"e_vague", with(Param::e, PriorSpec::uniform(0.0, 0.1))},
      {"e_informative", with(Param::e, PriorSpec::normal(0.013, 0.005))},
      {"c_out_informative_uniform", with(Param::c_out, PriorSpec::uniform(396.0, 416.0))},
      {"c_out_informative_normal", with(Param::c_out, PriorSpec::normal(400.0, 20.0))},
  };
}

inline bool in_support(Param p, double x) {
  const auto [lo, hi] = kSupport[static_cast<std::size_t>(p)];
  return x >= lo && x <= hi;
}

// Sum of independent log densities; -inf outside any prior or physical support.
inline double log_prior(const ParamDraw& draw, const PriorSet& priors) {
  const auto x = draw.to_array();
  double lp = 0.0;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (!std::isfinite(x[i]) || !in_support(static_cast<Param>(i), x[i])) return kNegInf;
    lp += priors.specs[i].log_density(x[i]);
    if (lp == kNegInf) return kNegInf;
  }
  return lp;
}

// Map between the constrained parameter and an unconstrained coordinate.
// Uniform priors use a scaled logit; normal priors on nonnegative parameters a
// log; a normal prior on C_out is left on the identity map.
struct Bijector {
  enum class Kind { logit, log, identity };
  Kind kind = Kind::identity;
  double lower = 0.0;
  double upper = 1.0;

  static Bijector for_prior(Param p, const PriorSpec& spec) {
    if (spec.kind == PriorSpec::Kind::uniform) return {Kind::logit, spec.lower(), spec.upper()};
    if (p == Param::c_out) return {Kind::identity, 0.0, 0.0};
    return {Kind::log, 0.0, 0.0};
  }

  double forward(double theta) const {
    switch (kind) {
      case Kind::logit: {
        const double s = theta >= 0.0 ? 1.0 / (1.0 + std::exp(-theta))
                                      : std::exp(theta) / (1.0 + std::exp(theta));
        return lower + (upper - lower) * s;
      }
      case Kind::log:
        return std::exp(theta);
      case Kind::identity:
        break;
    }
    return theta;
  }

  double inverse(double x) const {
    switch (kind) {
      case Kind::logit: {
        const double u = (x - lower) / (upper - lower);
        return std::log(u) - std::log1p(-u);
      }
      case Kind::log:
        return std::log(x);
      case Kind::identity:
        break;
    }
    return x;
  }

  double dforward(double theta) const {
    switch (kind) {
      case Kind::logit: {
        const double e = std::exp(-std::abs(theta));
        return (upper - lower) * e / ((1.0 + e) * (1.0 + e));
      }
      case Kind::log:
        return std::exp(theta);
      case Kind::identity:
        break;
    }
    return 1.0;
  }

  // d/dtheta log |dx/dtheta|
  double d_log_jacobian(double theta) const {
    switch (kind) {
      case Kind::logit:
        return std::tanh(-0.5 * theta);  // 1 - 2 logistic(theta)
      case Kind::log:
        return 1.0;
      case Kind::identity:
        break;
    }
    return 0.0;
  }

  // log |dx/dtheta|
  double log_jacobian(double theta) const {
    switch (kind) {
      case Kind::logit:
        return std::log(upper - lower) - std::abs(theta) - 2.0 * std::log1p(std::exp(-std::abs(theta)));
      case Kind::log:
        return theta;
      case Kind::identity:
        break;
    }
    return 0.0;
  }
};

inline std::array<Bijector, kNumParams> bijectors_for(const PriorSet& priors) {
  std::array<Bijector, kNumParams> out;
  for (std::size_t i = 0; i < kNumParams; ++i)
    out[i] = Bijector::for_prior(static_cast<Param>(i), priors.specs[i]);
  return out;
}

// Draw from the prior; normal priors are truncated to the physical support by
// rejection.
inline ParamDraw sample_prior(const PriorSet& priors, Engine& rng) {
  std::array<double, kNumParams> x{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& s = priors.specs[i];
    if (s.kind == PriorSpec::Kind::uniform) {
      std::uniform_real_distribution<double> u(s.lower(), s.upper());
      x[i] = u(rng);
    } else {
      std::normal_distribution<double> n(s.mean(), s.sd());
      int guard = 0;
      do {
        x[i] = n(rng);
      } while (!in_support(static_cast<Param>(i), x[i]) && ++guard < 1000);
    }
  }
  return ParamDraw::from_array(x);
}

}  // namespace co2grey
