#pragma once

// Bayesian estimation of (Q, C_out, E, sigma) from a CO2 series.
//
// The likelihood is the Euler-Maruyama transition density: each observed
// increment is Gaussian with mean drift(C_i) * dt_i and variance sigma^2 dt_i,
// conditioned on the first observation. Sampling is the No-U-Turn sampler on
// an unconstrained reparameterization; step size and metric adapt only
// during burn-in and the post-burn-in kernel is fixed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "co2grey/core_model.hpp"
#include "co2grey/error.hpp"
#include "co2grey/priors.hpp"
#include "co2grey/random.hpp"
#include "co2grey/series.hpp"
#include "co2grey/stats.hpp"

namespace co2grey {

inline ModelParams to_model_params(const ParamDraw& d, double volume_l) {
  return {AchRate{d.q_ach}.to_lps(volume_l), d.c_out_ppm, d.e_lps, d.sigma};
}

// Log-likelihood with per-pair time steps cached for repeated evaluation.
class EmLikelihood {
 public:
  EmLikelihood(const Co2Series& data, double volume_l) : data_(&data), volume_l_(volume_l) {
    require_volume(volume_l);
    require_increments(data, "log_likelihood_em");
    dt_h_.reserve(data.size() - 1);
    for (std::size_t i = 1; i < data.size(); ++i) {
      const double dt = seconds_to_hours(data.time(i) - data.time(i - 1));
      dt_h_.push_back(dt);
      sum_log_dt_ += std::log(dt);
    }
  }

  std::size_t pairs() const { return dt_h_.size(); }

  // Throws DegenerateDataError when sigma == 0 and every residual vanishes.
  double operator()(const ParamDraw& d) const {
    const ModelParams p = to_model_params(d, volume_l_);
    const auto c = data_->values();
    if (d.sigma == 0.0) {
      for (std::size_t i = 0; i < dt_h_.size(); ++i)
        // Residuals at round-off level count as zero.
        if (std::abs(c[i + 1] - euler_step(c[i], p, volume_l_, dt_h_[i])) >
            1e-9 * std::max(1.0, std::abs(c[i + 1])))
          return kNegInf;
      throw DegenerateDataError("sigma = 0 and all Euler-Maruyama residuals are zero");
    }
    double weighted_ss = 0.0;
    for (std::size_t i = 0; i < dt_h_.size(); ++i) {
      const double r = c[i + 1] - c[i] - drift(c[i], p, volume_l_) * dt_h_[i];
      weighted_ss += r * r / dt_h_[i];
    }
    return normalized(d.sigma, weighted_ss);
  }

  // Value and gradient with respect to (q_ach, c_out_ppm, e_lps, sigma), with
  // the drift written as q_ach (c_out - C) + e K, K = C_E * 3600 / V.
  // Requires sigma > 0.
  double value_and_gradient(const ParamDraw& d, std::array<double, kNumParams>& grad) const {
    const double k = ModelParams::c_e * kSecondsPerHour / volume_l_;
    const auto c = data_->values();
    double weighted_ss = 0.0, s_q = 0.0, s_r = 0.0;
    for (std::size_t i = 0; i < dt_h_.size(); ++i) {
      const double gap = d.c_out_ppm - c[i];
      const double r = c[i + 1] - c[i] - (d.q_ach * gap + d.e_lps * k) * dt_h_[i];
      weighted_ss += r * r / dt_h_[i];
      s_q += r * gap;
      s_r += r;
    }
    const double var = d.sigma * d.sigma;
    grad[0] = s_q / var;
    grad[1] = d.q_ach * s_r / var;
    grad[2] = k * s_r / var;
    grad[3] = -static_cast<double>(dt_h_.size()) / d.sigma + weighted_ss / (var * d.sigma);
    return normalized(d.sigma, weighted_ss);
  }

 private:
  double normalized(double sigma, double weighted_ss) const {
    const double n = static_cast<double>(dt_h_.size());
    const double var = sigma * sigma;
    return -0.5 * n * std::log(2.0 * std::numbers::pi * var) - 0.5 * sum_log_dt_ -
           0.5 * weighted_ss / var;
  }

  const Co2Series* data_;
  double volume_l_;
  std::vector<double> dt_h_;
  double sum_log_dt_ = 0.0;
};

inline double log_likelihood_em(const ParamDraw& draw, const Co2Series& data, double volume_l) {
  return EmLikelihood(data, volume_l)(draw);
}

// Unnormalized: the evidence term is never computed.
inline double log_posterior(const ParamDraw& draw, const PriorSet& priors, const Co2Series& data,
                            double volume_l) {
  const double lp = log_prior(draw, priors);
  if (lp == kNegInf) return kNegInf;
  return lp + log_likelihood_em(draw, data, volume_l);
}

struct SamplerConfig {
  std::size_t draws = 5000;  // per chain, post burn-in
  std::size_t chains = 2;
  std::size_t burn_in = 500;
  double hdi_mass = 0.95;
  std::size_t init_attempts = 50;
  double target_accept = 0.8;
  std::size_t max_tree_depth = 10;
  double rhat_threshold = 1.05;

  void validate() const {
    if (draws < 1000) throw InputError("sampler: draws must be >= 1000");
    if (chains < 2) throw InputError("sampler: chains must be >= 2");
    if (burn_in < 100) throw InputError("sampler: burn_in must be >= 100");
    if (!(hdi_mass > 0.0 && hdi_mass < 1.0)) throw InputError("sampler: hdi_mass must lie in (0, 1)");
    if (init_attempts < 1) throw InputError("sampler: init_attempts must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw InputError("sampler: target_accept must lie in (0, 1)");
    if (max_tree_depth < 1 || max_tree_depth > 15)
      throw InputError("sampler: max_tree_depth must lie in [1, 15]");
    if (!(rhat_threshold >= 1.0)) throw InputError("sampler: rhat_threshold must be >= 1");
  }
};

// Post-burn-in kernel of one chain, frozen at the end of adaptation.
struct ChainKernel {
  double step_size = 0.0;
  // Inverse mass matrix over the unconstrained coordinates, row-major.
  std::array<double, kNumParams * kNumParams> inverse_metric{};
  double acceptance_rate = 0.0;  // mean NUTS acceptance statistic
  std::size_t divergences = 0;
  double mean_tree_depth = 0.0;
  ParamDraw initial{};
};

struct ParamDiagnostics {
  double r_hat = 1.0;
  double ess = 0.0;
  double acceptance_rate = 0.0;
};

struct PosteriorSamples {
  std::vector<std::vector<ParamDraw>> chains;
  SamplerConfig config;
  std::uint64_t seed = 0;
  std::vector<ChainKernel> kernels;
  std::array<ParamDiagnostics, kNumParams> diagnostics{};
  bool converged = true;

  std::size_t total_draws() const {
    std::size_t n = 0;
    for (const auto& c : chains) n += c.size();
    return n;
  }

  stats::Chains chain_columns(Param p) const {
    stats::Chains out;
    for (const auto& c : chains) {
      std::vector<double> col;
      col.reserve(c.size());
      for (const auto& d : c) col.push_back(d[p]);
      out.push_back(std::move(col));
    }
    return out;
  }

  std::vector<double> pooled(Param p) const {
    std::vector<double> out;
    for (const auto& c : chains)
      for (const auto& d : c) out.push_back(d[p]);
    return out;
  }

  std::vector<ParamDraw> pooled_draws() const {
    std::vector<ParamDraw> out;
    for (const auto& c : chains) out.insert(out.end(), c.begin(), c.end());
    return out;
  }
};

// Diagnostics recomputed from the stored draws and per-chain acceptance rates.
inline void compute_diagnostics(PosteriorSamples& s) {
  if (s.chains.empty()) throw InputError("diagnostics: empty posterior");
  for (const auto& c : s.chains)
    if (c.size() != s.chains.front().size()) throw InputError("diagnostics: chains differ in length");
  double accept = 0.0;
  for (const auto& k : s.kernels) accept += k.acceptance_rate;
  accept /= s.kernels.empty() ? 1.0 : static_cast<double>(s.kernels.size());
  s.converged = true;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto cols = s.chain_columns(static_cast<Param>(i));
    auto& d = s.diagnostics[i];
    d.r_hat = stats::rank_normalized_rhat(cols);
    d.ess = stats::bulk_ess(cols);
    d.acceptance_rate = accept;
    if (!(d.r_hat <= s.config.rhat_threshold)) s.converged = false;
  }
}

namespace detail {

using Vec = std::array<double, kNumParams>;
using Mat = std::array<double, kNumParams * kNumParams>;

inline Mat identity_matrix() {
  Mat m{};
  for (std::size_t i = 0; i < kNumParams; ++i) m[i * kNumParams + i] = 1.0;
  return m;
}

// Cholesky factor of a symmetric matrix; false if not positive definite.
inline bool cholesky(const Mat& a, Mat& l) {
  l.fill(0.0);
  constexpr std::size_t n = kNumParams;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return true;
}

inline Vec mat_vec(const Mat& m, const Vec& v) {
  Vec out{};
  for (std::size_t i = 0; i < kNumParams; ++i)
    for (std::size_t j = 0; j < kNumParams; ++j) out[i] += m[i * kNumParams + j] * v[j];
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumParams; ++i) s += a[i] * b[i];
  return s;
}

// Windowed covariance, shrunk toward 1e-3 I as in the usual warmup scheme.
inline Mat regularized_covariance(const std::vector<Vec>& xs) {
  constexpr std::size_t n = kNumParams;
  const double count = static_cast<double>(xs.size());
  Vec m{};
  for (const auto& x : xs)
    for (std::size_t i = 0; i < n; ++i) m[i] += x[i] / count;
  Mat c{};
  for (const auto& x : xs)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += (x[i] - m[i]) * (x[j] - m[j]);
  for (double& v : c) v *= (1.0 / (count - 1.0)) * (count / (count + 5.0));
  for (std::size_t i = 0; i < n; ++i) c[i * n + i] += 1e-3 * 5.0 / (count + 5.0);
  return c;
}

// Log-posterior over unconstrained coordinates, including the Jacobian.
class UnconstrainedTarget {
 public:
  UnconstrainedTarget(const PriorSet& priors, const Co2Series& data, double volume_l)
      : priors_(priors), bij_(bijectors_for(priors)), lik_(data, volume_l) {}

  ParamDraw to_draw(const Vec& theta) const {
    Vec x{};
    for (std::size_t i = 0; i < kNumParams; ++i) x[i] = bij_[i].forward(theta[i]);
    return ParamDraw::from_array(x);
  }

  Vec to_theta(const ParamDraw& d) const {
    const auto x = d.to_array();
    Vec t{};
    for (std::size_t i = 0; i < kNumParams; ++i) t[i] = bij_[i].inverse(x[i]);
    return t;
  }

  // -inf (with unspecified gradient) outside the support or where sigma == 0.
  double operator()(const Vec& theta, Vec& grad) const {
    const ParamDraw d = to_draw(theta);
    double lp = log_prior(d, priors_);
    if (lp == kNegInf || !(d.sigma > 0.0)) return kNegInf;
    Vec g_x{};
    lp += lik_.value_and_gradient(d, g_x);
    const auto x = d.to_array();
    for (std::size_t i = 0; i < kNumParams; ++i) {
      lp += bij_[i].log_jacobian(theta[i]);
      grad[i] = (g_x[i] + priors_.specs[i].d_log_density(x[i])) * bij_[i].dforward(theta[i]) +
                bij_[i].d_log_jacobian(theta[i]);
    }
    if (!std::isfinite(lp)) return kNegInf;
    for (double g : grad)
      if (!std::isfinite(g)) return kNegInf;
    return lp;
  }

 private:
  const PriorSet& priors_;
  std::array<Bijector, kNumParams> bij_;
  EmLikelihood lik_;
};

struct Point {
  Vec theta{};
  Vec grad{};
  double logp = kNegInf;
};

// No-U-Turn sampler with slice sampling, a dense Euclidean metric and
// dual-averaging step-size adaptation.
class Nuts {
 public:
  Nuts(const UnconstrainedTarget& target, std::size_t max_depth, Engine& rng)
      : target_(target), max_depth_(max_depth), rng_(rng) {
    set_metric(identity_matrix());
  }

  void set_metric(const Mat& inverse_metric) {
    Mat l{};
    if (!cholesky(inverse_metric, l)) return;
    inv_metric_ = inverse_metric;
    chol_ = l;
  }
  const Mat& inverse_metric() const { return inv_metric_; }

  Point evaluate(const Vec& theta) const {
    Point p;
    p.theta = theta;
    p.logp = target_(theta, p.grad);
    return p;
  }

  struct Transition {
    Point point;
    double accept_stat = 0.0;
    bool divergent = false;
    std::size_t depth = 0;
  };

  // Heuristic initial step: double or halve until the one-step acceptance
  // probability crosses 0.5.
  double find_reasonable_step(const Point& start) {
    double eps = 0.1;
    Vec p = sample_momentum();
    auto log_accept = [&](double e) {
      Point x = start;
      Vec r = p;
      leapfrog(x, r, e);
      if (!std::isfinite(x.logp)) return kNegInf;
      return (x.logp - kinetic(r)) - (start.logp - kinetic(p));
    };
    double la = log_accept(eps);
    const double direction = la > std::log(0.5) ? 1.0 : -1.0;
    for (int i = 0; i < 100; ++i) {
      if (direction > 0 ? !(la > std::log(0.5)) : !(la < std::log(0.5))) break;
      eps *= direction > 0 ? 2.0 : 0.5;
      if (eps > 1e3 || eps < 1e-8) break;
      la = log_accept(eps);
    }
    return eps;
  }

  Transition transition(const Point& current, double eps) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Vec p0 = sample_momentum();
    const double h0 = current.logp - kinetic(p0);
    const double log_u = h0 + std::log(unif(rng_));

    Tree tree;
    tree.minus = tree.plus = current;
    tree.p_minus = tree.p_plus = p0;
    Transition out;
    out.point = current;
    double n = 1.0;
    bool keep_going = true;
    std::size_t depth = 0;
    double alpha_sum = 0.0;
    double n_alpha = 0.0;
    while (keep_going && depth < max_depth_) {
      const bool forward = unif(rng_) < 0.5;
      Subtree sub;
      if (forward) {
        sub = build(tree.plus, tree.p_plus, log_u, +1.0, depth, eps, h0);
        tree.plus = sub.plus;
        tree.p_plus = sub.p_plus;
      } else {
        sub = build(tree.minus, tree.p_minus, log_u, -1.0, depth, eps, h0);
        tree.minus = sub.minus;
        tree.p_minus = sub.p_minus;
      }
      alpha_sum += sub.alpha_sum;
      n_alpha += sub.n_alpha;
      if (sub.divergent) out.divergent = true;
      if (sub.ok && unif(rng_) < std::min(1.0, sub.n / n)) out.point = sub.proposal;
      n += sub.n;
      keep_going = sub.ok && no_uturn(tree.minus, tree.plus, tree.p_minus, tree.p_plus);
      ++depth;
    }
    out.depth = depth;
    out.accept_stat = n_alpha > 0.0 ? alpha_sum / n_alpha : 0.0;
    return out;
  }

 private:
  struct Tree {
    Point minus, plus;
    Vec p_minus{}, p_plus{};
  };

  struct Subtree {
    Point minus, plus, proposal;
    Vec p_minus{}, p_plus{};
    double n = 0.0;
    bool ok = true;
    bool divergent = false;
    double alpha_sum = 0.0;
    double n_alpha = 0.0;
  };

  Vec sample_momentum() {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z{};
    for (double& v : z) v = normal(rng_);
    // p ~ N(0, M) with M = inverse_metric^-1: solve L^T p = z.
    Vec p{};
    for (std::size_t ii = kNumParams; ii-- > 0;) {
      double s = z[ii];
      for (std::size_t k = ii + 1; k < kNumParams; ++k) s -= chol_[k * kNumParams + ii] * p[k];
      p[ii] = s / chol_[ii * kNumParams + ii];
    }
    return p;
  }

  double kinetic(const Vec& p) const { return 0.5 * dot(p, mat_vec(inv_metric_, p)); }

  void leapfrog(Point& x, Vec& p, double eps) const {
    for (std::size_t i = 0; i < kNumParams; ++i) p[i] += 0.5 * eps * x.grad[i];
    const Vec v = mat_vec(inv_metric_, p);
    for (std::size_t i = 0; i < kNumParams; ++i) x.theta[i] += eps * v[i];
    x.logp = target_(x.theta, x.grad);
    if (!std::isfinite(x.logp)) return;
    for (std::size_t i = 0; i < kNumParams; ++i) p[i] += 0.5 * eps * x.grad[i];
  }

  bool no_uturn(const Point& minus, const Point& plus, const Vec& p_minus, const Vec& p_plus) const {
    Vec span{};
    for (std::size_t i = 0; i < kNumParams; ++i) span[i] = plus.theta[i] - minus.theta[i];
    return dot(span, mat_vec(inv_metric_, p_minus)) >= 0.0 &&
           dot(span, mat_vec(inv_metric_, p_plus)) >= 0.0;
  }

  Subtree build(const Point& start, const Vec& p_start, double log_u, double direction,
                std::size_t depth, double eps, double h0) {
    constexpr double kMaxEnergyError = 1000.0;
    if (depth == 0) {
      Subtree t;
      Point x = start;
      Vec p = p_start;
      leapfrog(x, p, direction * eps);
      const double h = std::isfinite(x.logp) ? x.logp - kinetic(p) : kNegInf;
      t.minus = t.plus = t.proposal = x;
      t.p_minus = t.p_plus = p;
      t.n = (log_u <= h) ? 1.0 : 0.0;
      t.ok = h > log_u - kMaxEnergyError;
      t.divergent = !t.ok;
      t.alpha_sum = std::isfinite(h) ? std::min(1.0, std::exp(h - h0)) : 0.0;
      t.n_alpha = 1.0;
      return t;
    }
    Subtree t = build(start, p_start, log_u, direction, depth - 1, eps, h0);
    if (!t.ok) return t;
    Subtree u = direction < 0 ? build(t.minus, t.p_minus, log_u, direction, depth - 1, eps, h0)
                              : build(t.plus, t.p_plus, log_u, direction, depth - 1, eps, h0);
    if (direction < 0) {
      t.minus = u.minus;
      t.p_minus = u.p_minus;
    } else {
      t.plus = u.plus;
      t.p_plus = u.p_plus;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double total = t.n + u.n;
    if (total > 0.0 && unif(rng_) < u.n / total) t.proposal = u.proposal;
    t.alpha_sum += u.alpha_sum;
    t.n_alpha += u.n_alpha;
    t.divergent = t.divergent || u.divergent;
    t.ok = u.ok && no_uturn(t.minus, t.plus, t.p_minus, t.p_plus);
    t.n = total;
    return t;
  }

  const UnconstrainedTarget& target_;
  std::size_t max_depth_;
  Engine& rng_;
  Mat inv_metric_{};
  Mat chol_{};
};

struct DualAveraging {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  double counter = 0.0;
  double target = 0.8;

  void restart(double eps) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = 0.0;
    h_bar = 0.0;
    counter = 0.0;
  }

  double update(double accept_stat) {
    constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
    counter += 1.0;
    const double w = 1.0 / (counter + t0);
    h_bar = (1.0 - w) * h_bar + w * (target - accept_stat);
    log_eps = mu - std::sqrt(counter) / gamma * h_bar;
    const double decay = std::pow(counter, -kappa);
    log_eps_bar = decay * log_eps + (1.0 - decay) * log_eps_bar;
    return std::exp(log_eps);
  }

  double final_step() const { return std::exp(log_eps_bar); }
};

// Metric-estimation windows [start, end) inside burn-in: a fast initial
// buffer, doubling slow windows, then a terminal step-size-only buffer.
inline std::vector<std::pair<std::size_t, std::size_t>> metric_windows(std::size_t burn_in) {
  std::size_t init = 75, term = 50, base = 25;
  if (burn_in < init + term + base) {
    init = burn_in * 15 / 100;
    term = burn_in / 10;
    base = burn_in - init - term;
  }
  const std::size_t slow_end = burn_in - term;
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  std::size_t start = init, size = base;
  while (start < slow_end) {
    std::size_t end = start + size;
    if (end + 2 * size > slow_end) end = slow_end;
    windows.emplace_back(start, end);
    start = end;
    size *= 2;
  }
  return windows;
}

struct ChainResult {
  std::vector<ParamDraw> draws;
  ChainKernel kernel;
};

inline ChainResult run_chain(const UnconstrainedTarget& target, const PriorSet& priors,
                             const SamplerConfig& cfg, std::uint64_t seed, std::size_t chain) {
  Engine rng = make_engine(seed, chain);

  Point current;
  ParamDraw initial{};
  Vec scratch{};
  for (std::size_t attempt = 0; attempt < cfg.init_attempts && !std::isfinite(current.logp);
       ++attempt) {
    initial = sample_prior(priors, rng);
    current.theta = target.to_theta(initial);
    current.logp = target(current.theta, scratch);
  }
  if (!std::isfinite(current.logp))
    throw PosteriorUnreachableError("posterior unreachable: no finite log-posterior in " +
                                    std::to_string(cfg.init_attempts) + " prior draws (chain " +
                                    std::to_string(chain) + ")");

  Nuts nuts(target, cfg.max_tree_depth, rng);
  current = nuts.evaluate(current.theta);
  DualAveraging da;
  da.target = cfg.target_accept;
  double eps = nuts.find_reasonable_step(current);
  da.restart(eps);

  const auto windows = metric_windows(cfg.burn_in);
  std::size_t next_window = 0;
  std::vector<Vec> window;

  for (std::size_t it = 0; it < cfg.burn_in; ++it) {
    const auto tr = nuts.transition(current, eps);
    current = tr.point;
    eps = da.update(tr.accept_stat);
    if (next_window == windows.size()) continue;
    const auto [start, end] = windows[next_window];
    if (it >= start) window.push_back(current.theta);
    if (it + 1 == end) {
      if (window.size() >= 10) nuts.set_metric(regularized_covariance(window));
      window.clear();
      ++next_window;
      eps = nuts.find_reasonable_step(current);
      da.restart(eps);
    }
  }
  eps = da.final_step();

  ChainResult result;
  result.draws.reserve(cfg.draws);
  double accept_sum = 0.0, depth_sum = 0.0;
  std::size_t divergences = 0;
  for (std::size_t it = 0; it < cfg.draws; ++it) {
    const auto tr = nuts.transition(current, eps);
    current = tr.point;
    accept_sum += tr.accept_stat;
    depth_sum += static_cast<double>(tr.depth);
    if (tr.divergent) ++divergences;
    result.draws.push_back(target.to_draw(current.theta));
  }
  const double n = static_cast<double>(cfg.draws);
  result.kernel.step_size = eps;
  result.kernel.inverse_metric = nuts.inverse_metric();
  result.kernel.acceptance_rate = accept_sum / n;
  result.kernel.divergences = divergences;
  result.kernel.mean_tree_depth = depth_sum / n;
  result.kernel.initial = initial;
  return result;
}

}  // namespace detail

// Chains run concurrently; chain k draws from stream (seed, k). Non-convergence
// (any r_hat above the threshold) is reported through `converged`, not thrown.
inline PosteriorSamples sample_posterior(const PriorSet& priors, const Co2Series& data,
                                         double volume_l, const SamplerConfig& config,
                                         std::uint64_t seed) {
  config.validate();
  priors.validate();
  const detail::UnconstrainedTarget target(priors, data, volume_l);
  std::vector<detail::ChainResult> results(config.chains);
  parallel_for(config.chains, [&](std::size_t k) {
    results[k] = detail::run_chain(target, priors, config, seed, k);
  });
  PosteriorSamples out;
  out.config = config;
  out.seed = seed;
  for (auto& r : results) {
    out.chains.push_back(std::move(r.draws));
    out.kernels.push_back(r.kernel);
  }
  compute_diagnostics(out);
  return out;
}

struct ParamSummary {
  double mean = 0.0;
  double sd = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
};

struct PosteriorSummary {
  std::array<ParamSummary, kNumParams> params{};
  double hdi_mass = 0.95;
  std::size_t n_draws = 0;
  std::vector<std::string> warnings;

  const ParamSummary& operator[](Param p) const { return params[static_cast<std::size_t>(p)]; }
  ParamSummary& operator[](Param p) { return params[static_cast<std::size_t>(p)]; }

  ParamDraw means() const {
    return {params[0].mean, params[1].mean, params[2].mean, params[3].mean};
  }
};

inline PosteriorSummary summarize_draws(const std::vector<ParamDraw>& draws, double hdi_mass) {
  if (!(hdi_mass > 0.0 && hdi_mass < 1.0)) throw InputError("hdi_mass must lie in (0, 1)");
  if (draws.size() < 1000) throw InputError("summarize: need at least 1000 pooled draws");
  PosteriorSummary s;
  s.hdi_mass = hdi_mass;
  s.n_draws = draws.size();
  for (std::size_t i = 0; i < kNumParams; ++i) {
    std::vector<double> col;
    col.reserve(draws.size());
    for (const auto& d : draws) col.push_back(d.to_array()[i]);
    auto& p = s.params[i];
    p.mean = stats::mean(col);
    p.sd = stats::sd(col);
    const auto iv = stats::hdi(std::move(col), hdi_mass);
    p.hdi_low = iv.low;
    p.hdi_high = iv.high;
    if (!iv.contains(p.mean))
      s.warnings.push_back(std::string(kParamNames[i]) + ": mean lies outside the HDI (multimodal or skewed marginal)");
  }
  return s;
}

inline PosteriorSummary summarize(const PosteriorSamples& samples, double hdi_mass) {
  if (samples.chains.empty()) throw InputError("summarize: empty posterior");
  return summarize_draws(samples.pooled_draws(), hdi_mass);
}

struct PriorShift {
  std::string first;
  std::string second;
  Param param = Param::q;
  // |mean difference| / sqrt((sd_a^2 + sd_b^2) / 2)
  double shift_pooled_sd = 0.0;
};

struct SensitivityReport {
  std::vector<std::pair<std::string, PosteriorSummary>> summaries;
  std::vector<PriorShift> shifts;
  std::vector<std::pair<std::string, bool>> converged;

  const PosteriorSummary& at(const std::string& name) const {
    for (const auto& [n, s] : summaries)
      if (n == name) return s;
    throw InputError("no prior set named " + name);
  }

  double shift(const std::string& a, const std::string& b, Param p) const {
    for (const auto& s : shifts)
      if (s.param == p && ((s.first == a && s.second == b) || (s.first == b && s.second == a)))
        return s.shift_pooled_sd;
    throw InputError("no shift recorded for " + a + " vs " + b);
  }
};

// Each prior set is sampled independently with the same seed.
inline SensitivityReport prior_sensitivity(const Co2Series& data, double volume_l,
                                           const NamedPriorSets& prior_sets,
                                           const SamplerConfig& config, std::uint64_t seed) {
  if (prior_sets.size() < 2) throw InputError("prior_sensitivity: need at least 2 prior sets");
  SensitivityReport rep;
  for (const auto& [name, priors] : prior_sets) {
    try {
      const auto samples = sample_posterior(priors, data, volume_l, config, seed);
      rep.summaries.emplace_back(name, summarize(samples, config.hdi_mass));
      rep.converged.emplace_back(name, samples.converged);
    } catch (const PosteriorUnreachableError& e) {
      throw PosteriorUnreachableError("prior set '" + name + "': " + e.what());
    } catch (const std::exception& e) {
      throw InputError("prior set '" + name + "': " + e.what());
    }
  }
  for (std::size_t a = 0; a < rep.summaries.size(); ++a)
    for (std::size_t b = a + 1; b < rep.summaries.size(); ++b)
      for (std::size_t i = 0; i < kNumParams; ++i) {
        const auto& sa = rep.summaries[a].second.params[i];
        const auto& sb = rep.summaries[b].second.params[i];
        const double pooled = std::sqrt(0.5 * (sa.sd * sa.sd + sb.sd * sb.sd));
        const double diff = std::abs(sa.mean - sb.mean);
        rep.shifts.push_back({rep.summaries[a].first, rep.summaries[b].first, static_cast<Param>(i),
                              pooled > 0.0 ? diff / pooled : (diff == 0.0 ? 0.0 : INFINITY)});
      }
  return rep;
}

struct DecayEstimate {
  double ach = 0.0;
  double se = 0.0;
  // Fitted log-slope was >= 0: the series does not decay.
  bool not_decaying = false;
};

// Tracer-gas decay: negated least-squares slope of ln(C - c_out) against hours.
// Residuals of a sampled decay are serially correlated, so the OLS standard
// error is inflated by sqrt((1 + r1) / (1 - r1)) with r1 their lag-1
// autocorrelation (clamped to [0, 0.999]).
inline DecayEstimate decay_reference_ach(const Co2Series& data, double c_out) {
  require_increments(data, "decay_reference_ach");
  std::vector<double> t, y;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(data.value(i) > c_out))
      throw InputError("decay_reference_ach: sample " + std::to_string(i) + " (" +
                       std::to_string(data.value(i)) + " ppm) is not above c_out");
    t.push_back(data.hours(i));
    y.push_back(std::log(data.value(i) - c_out));
  }
  const auto fit = stats::linear_fit(t, y);
  double r0 = 0.0, r1 = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * t[i]);
    r0 += r * r;
    if (i > 0) r1 += r * prev;
    prev = r;
  }
  const double rho = r0 > 0.0 ? std::clamp(r1 / r0, 0.0, 0.999) : 0.0;
  return {-fit.slope, fit.se_slope * std::sqrt((1.0 + rho) / (1.0 - rho)), fit.slope >= 0.0};
}

}  // namespace co2grey
