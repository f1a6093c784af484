#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace drc {

/// Absolute distance from the optimum, floored at 1e-6.
inline double accuracy(double value, double optimum) {
  if (std::isnan(value) || std::isnan(optimum))
    throw std::invalid_argument("stats: accuracy of NaN");
  return std::max(std::abs(value - optimum), 1e-6);
}

/// Linear-interpolation quantile of a sorted sample, with level in [0, 1].
inline double quantile_sorted(const std::vector<double>& sorted, double level) {
  if (sorted.empty())
    throw std::invalid_argument("stats: quantile of an empty sample");
  const double h = level * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Median and interquartile range of a sample.
inline std::pair<double, double> aggregate(std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("stats: aggregate of an empty sample");
  std::sort(values.begin(), values.end());
  const double median = quantile_sorted(values, 0.5);
  const double iqr =
      quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
  return {median, iqr};
}

namespace detail {

/// Midranks of the concatenation of two samples; ties share averaged ranks.
inline std::vector<double> midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pooled[a] < pooled[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Two-sided unpaired rank-sum test; exact enumeration for pooled sizes up
/// to 12, normal approximation with tie and continuity corrections beyond.
inline double rank_sum_test(const std::vector<double>& a,
                            const std::vector<double>& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("stats: rank-sum test needs two samples");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t n = n1 + n2;
  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled)
    if (std::isnan(v)) throw std::invalid_argument("stats: rank-sum of NaN");
  const std::vector<double> ranks = detail::midranks(pooled);

  double r1 = 0.0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
  const double u_obs =
      r1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;

  if (n <= 12) {
    // Enumerate every assignment of n1 pooled ranks to the first sample.
    std::vector<std::size_t> pick(n1);
    for (std::size_t i = 0; i < n1; ++i) pick[i] = i;
    long long total = 0, le = 0, ge = 0;
    const double eps = 1e-9;
    while (true) {
      double r = 0.0;
      for (std::size_t i : pick) r += ranks[i];
      const double u =
          r - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
      ++total;
      if (u <= u_obs + eps) ++le;
      if (u >= u_obs - eps) ++ge;
      // next combination
      std::size_t k = n1;
      while (k > 0 && pick[k - 1] == n - n1 + k - 1) --k;
      if (k == 0) break;
      ++pick[k - 1];
      for (std::size_t j = k; j < n1; ++j) pick[j] = pick[j - 1] + 1;
    }
    const double tail = std::min(static_cast<double>(le), static_cast<double>(ge)) /
                        static_cast<double>(total);
    return std::min(1.0, 2.0 * tail);
  }

  // Tie-corrected normal approximation.
  const double dn1 = static_cast<double>(n1);
  const double dn2 = static_cast<double>(n2);
  const double dn = static_cast<double>(n);
  double tie_sum = 0.0;
  {
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_sum += t * t * t - t;
      i = j + 1;
    }
  }
  const double mu = dn1 * dn2 / 2.0;
  const double var =
      dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_sum / (dn * (dn - 1.0)));
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(u_obs - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace drc
