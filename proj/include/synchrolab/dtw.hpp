#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "synchrolab/error.hpp"
#include "synchrolab/numeric.hpp"

namespace synchrolab {

enum class LocalCost { AbsDiff, SquaredDiff };
enum class StepPattern { Symmetric };  // unit-weight steps (1,0), (0,1), (1,1)

constexpr std::string_view local_cost_name(LocalCost c) {
  return c == LocalCost::AbsDiff ? "abs_diff" : "squared_diff";
}

inline LocalCost parse_local_cost(std::string_view s) {
  if (s == "abs_diff") return LocalCost::AbsDiff;
  if (s == "squared_diff") return LocalCost::SquaredDiff;
  throw Error("synchrony", Errc::InvalidArgument, "unknown DTW local cost '" + std::string(s) + "'");
}

struct DtwConfig {
  LocalCost local_cost = LocalCost::AbsDiff;
  StepPattern step = StepPattern::Symmetric;
  // Sakoe-Chiba radius: cell (i, j) is admissible iff |i - j| <= radius.
  std::optional<std::size_t> band_radius;
  bool normalize_by_path = true;
};

struct DtwResult {
  double raw = 0.0;
  double normalized = 0.0;  // raw / path_length when normalize_by_path, else raw
  std::size_t path_length = 0;
};

struct DtwAlignment {
  DtwResult result;
  std::vector<std::pair<std::size_t, std::size_t>> path;  // zero-based (i, j), start to end
};

namespace detail {

struct AbsCost {
  double operator()(double a, double b) const { return std::abs(a - b); }
};
struct SquaredCost {
  double operator()(double a, double b) const {
    const double d = a - b;
    return d * d;
  }
};

inline void check_dtw_inputs(SeriesView x, SeriesView y, const DtwConfig& cfg) {
  if (x.empty() || y.empty()) throw Error("synchrony", Errc::EmptyInput, "DTW input is empty");
  if (cfg.band_radius) {
    const std::size_t diff = x.size() > y.size() ? x.size() - y.size() : y.size() - x.size();
    if (*cfg.band_radius < diff)
      throw Error("synchrony", Errc::InfeasibleBand,
                  "band radius " + std::to_string(*cfg.band_radius) + " is smaller than the length difference " +
                      std::to_string(diff));
  }
}

// Admissible column range [lo, hi] (1-based) for row i.
inline std::pair<std::size_t, std::size_t> band_columns(std::size_t i, std::size_t m,
                                                        const std::optional<std::size_t>& radius) {
  if (!radius) return {1, m};
  const std::size_t r = *radius;
  const std::size_t lo = i > r ? i - r : 1;
  const std::size_t hi = std::min(m, i + r);
  return {std::max<std::size_t>(lo, 1), hi};
}

// Two-row dynamic program. Alongside the cumulative cost each cell carries the
// length of the path that backtracking would recover from it (predecessor
// preference: diagonal, then (i, j-1), then (i-1, j)), so path_length matches
// dtw_align without storing the matrix.
template <class Cost>
DtwResult dtw_two_row(SeriesView x, SeriesView y, const std::optional<std::size_t>& radius, Cost cost) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  std::vector<double> prev(m + 2, kInf), cur(m + 2, kInf);
  std::vector<std::uint32_t> prev_len(m + 2, 0), cur_len(m + 2, 0);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const auto [lo, hi] = band_columns(i, m, radius);
    cur[lo - 1] = kInf;
    cur[hi + 1] = kInf;
    const double xi = x[i - 1];
    for (std::size_t j = lo; j <= hi; ++j) {
      double best = prev[j - 1];
      std::uint32_t len = prev_len[j - 1];
      if (cur[j - 1] < best) {
        best = cur[j - 1];
        len = cur_len[j - 1];
      }
      if (prev[j] < best) {
        best = prev[j];
        len = prev_len[j];
      }
      cur[j] = cost(xi, y[j - 1]) + best;
      cur_len[j] = len + 1;
    }
    std::swap(prev, cur);
    std::swap(prev_len, cur_len);
  }
  DtwResult r;
  r.raw = prev[m];
  r.path_length = prev_len[m];
  return r;
}

template <class Cost>
DtwAlignment dtw_full(SeriesView x, SeriesView y, const std::optional<std::size_t>& radius, Cost cost) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  const std::size_t w = m + 1;
  std::vector<double> d((n + 1) * w, kInf);
  d[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const auto [lo, hi] = band_columns(i, m, radius);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double best = std::min({d[(i - 1) * w + j - 1], d[i * w + j - 1], d[(i - 1) * w + j]});
      d[i * w + j] = cost(x[i - 1], y[j - 1]) + best;
    }
  }
  DtwAlignment out;
  out.result.raw = d[n * w + m];
  std::size_t i = n, j = m;
  while (true) {
    out.path.emplace_back(i - 1, j - 1);
    if (i == 1 && j == 1) break;
    double best = d[(i - 1) * w + j - 1];
    std::size_t ni = i - 1, nj = j - 1;
    if (d[i * w + j - 1] < best) {
      best = d[i * w + j - 1];
      ni = i;
      nj = j - 1;
    }
    if (d[(i - 1) * w + j] < best) {
      ni = i - 1;
      nj = j;
    }
    i = ni;
    j = nj;
  }
  std::reverse(out.path.begin(), out.path.end());
  out.result.path_length = out.path.size();
  return out;
}

inline void finish(DtwResult& r, const DtwConfig& cfg) {
  r.normalized = cfg.normalize_by_path ? r.raw / static_cast<double>(r.path_length) : r.raw;
}

}  // namespace detail

/// Dynamic time warping distance: the minimal cumulative local cost over
/// monotone, continuous warping paths from the first to the last sample pair.
/// Uses O(len(y)) memory.
inline DtwResult dtw_distance(SeriesView x, SeriesView y, const DtwConfig& cfg = {}) {
  detail::check_dtw_inputs(x, y, cfg);
  DtwResult r = cfg.local_cost == LocalCost::AbsDiff
                    ? detail::dtw_two_row(x, y, cfg.band_radius, detail::AbsCost{})
                    : detail::dtw_two_row(x, y, cfg.band_radius, detail::SquaredCost{});
  detail::finish(r, cfg);
  return r;
}

/// As dtw_distance, but keeps the full cost matrix and recovers the warping
/// path. Ties prefer the diagonal step, then (0, 1), then (1, 0).
inline DtwAlignment dtw_align(SeriesView x, SeriesView y, const DtwConfig& cfg = {}) {
  detail::check_dtw_inputs(x, y, cfg);
  DtwAlignment a = cfg.local_cost == LocalCost::AbsDiff
                       ? detail::dtw_full(x, y, cfg.band_radius, detail::AbsCost{})
                       : detail::dtw_full(x, y, cfg.band_radius, detail::SquaredCost{});
  detail::finish(a.result, cfg);
  return a;
}

}  // namespace synchrolab
