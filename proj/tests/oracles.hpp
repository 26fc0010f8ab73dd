#pragma once

// Slow, obviously-correct reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

// Indices sorted by (-score, index), first k.
inline std::vector<std::size_t> top_k_by_sort(const std::vector<double>& s, std::size_t k) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return s[a] != s[b] ? s[a] > s[b] : a < b;
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Double loop over (negative, positive) pairs, strict inequality.
inline std::pair<std::uint64_t, std::uint64_t> auc_pairs(const std::vector<int>& y, const std::vector<double>& s) {
  std::uint64_t good = 0;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] != 1) continue;
      ++total;
      if (s[j] > s[i]) ++good;
    }
  }
  return {good, total};
}

// Sup distance between the empirical CDF of `sample` and `cdf`.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// Sup distance for an integer-valued sample against a discrete CDF, checked at
// every support point in range.
inline double ks_discrete(const std::vector<double>& sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  std::vector<double> sorted(sample);
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (double v = std::floor(*lo) - 1; v <= *hi; v += 1.0) {
    const double emp = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin()) / n;
    d = std::max(d, std::abs(emp - cdf(v)));
  }
  return d;
}

// O(n^2) Kendall tau-a.
inline double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  long long s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double x = (a[i] - a[j]) * (b[i] - b[j]);
      s += x > 0 ? 1 : (x < 0 ? -1 : 0);
    }
  }
  return 2.0 * static_cast<double>(s) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

// Calls fn(subset) for every k-subset of {0..n-1} (ascending indices).
inline void for_each_subset(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> c(k);
  std::iota(c.begin(), c.end(), 0);
  if (k > n) return;
  for (;;) {
    fn(c);
    std::size_t i = k;
    while (i > 0 && c[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++c[i - 1];
    for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
  }
}

}  // namespace oracle
