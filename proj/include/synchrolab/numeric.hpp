#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "synchrolab/error.hpp"

namespace synchrolab {

using Series = std::vector<double>;
using SeriesView = std::span<const double>;

// Pairwise (cascade) summation; the reduction tree depends only on the length,
// so results are reproducible regardless of who calls it.
inline double pairwise_sum(SeriesView v) {
  constexpr std::size_t kLeaf = 16;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double mean(SeriesView v) {
  if (v.empty()) throw Error("numeric", Errc::EmptyInput, "mean of empty sequence");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Sample variance with (n - 1) denominator.
inline double sample_variance(SeriesView v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  Series sq(v.size());
  std::transform(v.begin(), v.end(), sq.begin(), [m](double x) { return (x - m) * (x - m); });
  return pairwise_sum(sq) / static_cast<double>(v.size() - 1);
}

inline double population_variance(SeriesView v) {
  if (v.empty()) return 0.0;
  const double m = mean(v);
  Series sq(v.size());
  std::transform(v.begin(), v.end(), sq.begin(), [m](double x) { return (x - m) * (x - m); });
  return pairwise_sum(sq) / static_cast<double>(v.size());
}

// Quantile by linear interpolation between order statistics (Hyndman-Fan type 7).
inline double quantile_sorted(SeriesView sorted, double p) {
  if (sorted.empty()) throw Error("numeric", Errc::EmptyInput, "quantile of empty sequence");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(SeriesView v, double p) {
  Series s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, p);
}

inline double total_variation(SeriesView v) {
  double tv = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
  return tv;
}

inline bool all_finite(SeriesView v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace synchrolab
