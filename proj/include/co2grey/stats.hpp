#pragma once

// Descriptive statistics, interval estimates, least squares and the MCMC
// convergence diagnostics (rank-normalized split R-hat, bulk ESS).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "co2grey/error.hpp"

namespace co2grey::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw InputError("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Unbiased (n - 1) variance; zero for a single value.
inline double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline double sd(std::span<const double> x) { return std::sqrt(variance(x)); }

// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("quantile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  return quantile_sorted(x, p);
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
  double width() const { return high - low; }
  bool contains(double v) const { return low <= v && v <= high; }
};

// Narrowest interval spanning ceil(mass * n) of the draws.
inline Interval hdi(std::vector<double> draws, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw InputError("HDI mass must lie in (0, 1)");
  if (draws.empty()) throw InputError("HDI of empty sample");
  std::sort(draws.begin(), draws.end());
  const std::size_t n = draws.size();
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n))));
  if (k >= n) return {draws.front(), draws.back()};
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k - 1 < n; ++i) {
    const double w = draws[i + k - 1] - draws[i];
    if (w < best_width) {
      best_width = w;
      best = i;
    }
  }
  return {draws[best], draws[best + k - 1]};
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se_slope = 0.0;
  double se_intercept = 0.0;
  double sse = 0.0;
  std::size_t n = 0;
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("linear_fit: length mismatch");
  if (x.size() < 2) throw InputError("linear_fit: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InputError("linear_fit: x values are all equal");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.sse += r * r;
  }
  if (x.size() > 2) {
    const double s2 = f.sse / (n - 2.0);
    f.se_slope = std::sqrt(s2 / sxx);
    f.se_intercept = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return f;
}

// Kolmogorov-Smirnov distance between the empirical CDF of x and cdf.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw InputError("ks_distance of empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double normal_cdf(double x) {
  return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

using Chains = std::vector<std::vector<double>>;

namespace detail {

inline void require_chains(const Chains& chains) {
  if (chains.empty() || chains.front().size() < 4)
    throw InputError("diagnostics need at least one chain of 4 draws");
  for (const auto& c : chains)
    if (c.size() != chains.front().size()) throw InputError("chains must have equal length");
}

inline Chains split(const Chains& chains) {
  Chains out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + half);
    out.emplace_back(c.end() - half, c.end());
  }
  return out;
}

// Normal scores of pooled ranks (average ranks for ties, Blom offset).
inline Chains rank_normalize(const Chains& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t m = 0; m < chains.size(); ++m)
    for (std::size_t i = 0; i < chains[m].size(); ++i)
      pooled.emplace_back(chains[m][i], m * chains[m].size() + i);
  std::sort(pooled.begin(), pooled.end());
  const double total = static_cast<double>(pooled.size());
  std::vector<double> z(pooled.size());
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    const double score = normal_quantile((avg_rank - 0.375) / (total + 0.25));
    for (std::size_t k = i; k < j; ++k) z[pooled[k].second] = score;
    i = j;
  }
  Chains out(chains.size());
  const std::size_t n = chains.front().size();
  for (std::size_t m = 0; m < chains.size(); ++m) out[m].assign(z.begin() + m * n, z.begin() + (m + 1) * n);
  return out;
}

inline double rhat_basic(const Chains& chains) {
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean(c));
    vars.push_back(variance(c));
  }
  const double w = mean(vars);
  const double b = n * variance(means);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_hat = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_hat / w);
}

inline bool all_identical(const Chains& chains) {
  const double first = chains.front().front();
  for (const auto& c : chains)
    for (double v : c)
      if (v != first) return false;
  return true;
}

// Biased autocovariance at one lag.
inline double autocov(std::span<const double> x, double m, std::size_t lag) {
  double s = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - m) * (x[i + lag] - m);
  return s / static_cast<double>(x.size());
}

// Geyer initial-monotone-sequence ESS over equal-length chains.
inline double ess_raw(const Chains& chains) {
  const std::size_t m_chains = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> cmeans(m_chains);
  for (std::size_t m = 0; m < m_chains; ++m) cmeans[m] = mean(chains[m]);
  auto acov_mean = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t m = 0; m < m_chains; ++m) s += autocov(chains[m], cmeans[m], lag);
    return s / static_cast<double>(m_chains);
  };
  const double nd = static_cast<double>(n);
  const double mean_var = acov_mean(0) * nd / (nd - 1.0);
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m_chains > 1) var_plus += variance(cmeans);
  const double total = static_cast<double>(m_chains * n);
  if (var_plus == 0.0) return total;

  std::vector<double> rho(n + 2, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - acov_mean(1)) / var_plus;
  rho[1] = rho_odd;
  std::size_t s = 1;
  while (s + 4 < n && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - acov_mean(s + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - acov_mean(s + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[s + 1] = rho_even;
      rho[s + 2] = rho_odd;
    }
    s += 2;
  }
  const std::size_t max_s = s;
  if (rho_even > 0.0) rho[max_s + 1] = rho_even;
  for (s = 1; s + 3 <= max_s; s += 2) {
    if (rho[s + 1] + rho[s + 2] > rho[s - 1] + rho[s]) {
      rho[s + 1] = 0.5 * (rho[s - 1] + rho[s]);
      rho[s + 2] = rho[s + 1];
    }
  }
  double tau = -1.0 + rho[max_s + 1];
  for (std::size_t k = 0; k < max_s; ++k) tau += 2.0 * rho[k];
  return std::min(total / tau, total * std::log10(total));
}

}  // namespace detail

// max(rank-normalized split R-hat, folded rank-normalized split R-hat).
inline double rank_normalized_rhat(const Chains& chains) {
  detail::require_chains(chains);
  if (detail::all_identical(chains)) return 1.0;
  const Chains halves = detail::split(chains);
  const double bulk = detail::rhat_basic(detail::rank_normalize(halves));
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const double med = quantile(pooled, 0.5);
  Chains folded = halves;
  for (auto& c : folded)
    for (double& v : c) v = std::abs(v - med);
  const double tail = detail::all_identical(folded) ? 1.0 : detail::rhat_basic(detail::rank_normalize(folded));
  return std::max(bulk, tail);
}

// Bulk effective sample size: ESS of rank-normalized split chains.
inline double bulk_ess(const Chains& chains) {
  detail::require_chains(chains);
  const double total = static_cast<double>(chains.size() * chains.front().size());
  if (detail::all_identical(chains)) return total;
  return detail::ess_raw(detail::rank_normalize(detail::split(chains)));
}

}  // namespace co2grey::stats
