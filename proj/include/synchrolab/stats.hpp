#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synchrolab/distributions.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/numeric.hpp"

namespace synchrolab::stats {

/// Long-format observations. For repeated-measures designs `subject_id` is
/// the within-subject key and `group_label` the condition.
struct LongRow {
  std::string subject_id;
  std::string group_label;
  double value = 0.0;

  friend bool operator==(const LongRow&, const LongRow&) = default;
};

struct LongTable {
  std::vector<LongRow> rows;
};

// Group label -> values in row order. std::map keeps labels sorted.
inline std::map<std::string, Series> split_groups(const LongTable& t) {
  std::map<std::string, Series> groups;
  for (const auto& r : t.rows) {
    if (!std::isfinite(r.value))
      throw Error("stats", Errc::InvalidArgument, "non-finite value for subject '" + r.subject_id + "'");
    groups[r.group_label].push_back(r.value);
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Normality

struct ShapiroResult {
  double W = 1.0;
  double p = 1.0;
};

/// Shapiro-Wilk W with Royston's approximation for the coefficients and the
/// p-value (algorithm AS R94), valid for 3 <= n <= 5000.
inline ShapiroResult shapiro_wilk(SeriesView sample) {
  const std::size_t n = sample.size();
  if (n < 3) throw Error("stats", Errc::SampleTooSmall, "Shapiro-Wilk needs at least 3 observations");
  if (n > 5000) throw Error("stats", Errc::SampleTooLarge, "Shapiro-Wilk supports at most 5000 observations");
  Series x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19)) throw Error("stats", Errc::ConstantInput, "Shapiro-Wilk input is constant");

  auto poly = [](std::initializer_list<double> c, double v) {
    double r = 0.0;
    for (auto it = std::rbegin(c); it != std::rend(c); ++it) r = r * v + *it;
    return r;
  };

  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half + 1, 0.0);  // a[1..half], positive, for the upper order statistics
  if (n == 3) {
    a[1] = std::numbers::sqrt2 / 2.0;
  } else {
    std::vector<double> m(half + 1);
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= half; ++i) {
      m[i] = dist::normal_quantile((static_cast<double>(i) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly({0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056}, rsn) - m[1] / ssumm2;
    std::size_t first_scaled = 2;
    double fac = 0.0;
    if (n > 5) {
      first_scaled = 3;
      const double a2 = -m[2] / ssumm2 + poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1] - 2.0 * m[2] * m[2]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[2] = a2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1));
    }
    a[1] = a1;
    for (std::size_t i = first_scaled; i <= half; ++i) a[i] = -m[i] / fac;
  }

  // Antisymmetric coefficient for sorted position i (0-based).
  auto coef = [&](std::size_t i) {
    const std::size_t j = n - 1 - i;
    if (i == j) return 0.0;
    return i < j ? -a[i + 1] : a[j + 1];
  };
  double sa = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += coef(i);
    sx += x[i] / range;
  }
  sa /= an;
  sx /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef(i) - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);  // 1 - W without cancellation
  ShapiroResult res;
  res.W = 1.0 - w1;

  if (n == 3) {
    constexpr double kSixOverPi = 1.90985931710274;
    constexpr double kPiOverThree = 1.04719755119660;
    res.p = std::max(0.0, kSixOverPi * (std::asin(std::sqrt(res.W)) - kPiOverThree));
    return res;
  }
  double y = std::log(w1);
  const double lxx = std::log(an);
  double mu = 0.0, sigma = 1.0;
  if (n <= 11) {
    const double gamma = poly({-2.273, 0.459}, an);
    if (y >= gamma) {
      res.p = 1e-99;
      return res;
    }
    y = -std::log(gamma - y);
    mu = poly({0.5440, -0.39978, 0.025054, -6.714e-4}, an);
    sigma = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, an));
  } else {
    mu = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, lxx);
    sigma = std::exp(poly({-0.4803, -0.082676, 0.0030302}, lxx));
  }
  res.p = dist::normal_sf((y - mu) / sigma);
  return res;
}

// ---------------------------------------------------------------------------
// Ranks and the aligned rank transform

/// Ranks 1..n with ties receiving the mean of the ranks they span.
inline Series midranks(SeriesView v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Series ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// One-factor aligned rank transform. A response is aligned for the group
/// effect by keeping its residual from the cell mean plus the estimated group
/// effect: (y - cell) + (cell - grand). With a single factor the cell terms
/// cancel to y - grand, which is computed directly so ties survive rounding.
/// The aligned values are then midranked over the whole table; row order is kept.
inline LongTable art_transform(const LongTable& table) {
  const auto groups = split_groups(table);
  if (groups.size() < 2) throw Error("stats", Errc::DegenerateDesign, "ART needs at least two groups");
  for (const auto& [label, vals] : groups)
    if (vals.size() < 2) throw Error("stats", Errc::DegenerateDesign, "group '" + label + "' has fewer than 2 rows");

  Series values(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) values[i] = table.rows[i].value;
  const double grand = mean(values);
  Series aligned(values.size());
  std::transform(values.begin(), values.end(), aligned.begin(), [grand](double v) { return v - grand; });

  const Series ranks = midranks(aligned);
  LongTable out = table;
  for (std::size_t i = 0; i < out.rows.size(); ++i) out.rows[i].value = ranks[i];
  return out;
}

// ---------------------------------------------------------------------------
// ANOVA

struct AnovaResult {
  double F = 0.0;
  int df_between = 0;
  int df_within = 0;
  double p = 1.0;
  double partial_eta_sq = 0.0;
  std::pair<double, double> eta_ci_90{0.0, 0.0};
  double ss_between = 0.0;
  double ss_within = 0.0;
};

/// Confidence interval for partial eta squared by inverting the noncentral F
/// CDF in its noncentrality parameter (bisection to 1e-8), then mapping
/// lambda -> lambda / (lambda + df1 + df2 + 1).
inline std::pair<double, double> eta_squared_ci(double f, int df1, int df2, double level = 0.90) {
  if (!(f > 0.0) || !std::isfinite(f)) return {0.0, f > 0.0 ? 1.0 : 0.0};
  const double tail = (1.0 - level) / 2.0;
  auto solve = [&](double target) {
    auto cdf = [&](double lam) { return dist::noncentral_f_cdf(f, df1, df2, lam); };
    if (cdf(0.0) < target) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (cdf(hi) > target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e9) break;
    }
    while (hi - lo > 1e-8 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double total = static_cast<double>(df1 + df2 + 1);
  const double lam_lo = solve(1.0 - tail);
  const double lam_hi = solve(tail);
  return {lam_lo / (lam_lo + total), lam_hi / (lam_hi + total)};
}

/// One-way between-groups ANOVA.
inline AnovaResult oneway_anova(const LongTable& table) {
  const auto groups = split_groups(table);
  if (groups.size() < 2) throw Error("stats", Errc::DegenerateDesign, "ANOVA needs at least two groups");
  Series all;
  for (const auto& [label, vals] : groups) {
    if (vals.size() < 2) throw Error("stats", Errc::DegenerateDesign, "group '" + label + "' has fewer than 2 rows");
    all.insert(all.end(), vals.begin(), vals.end());
  }
  const double grand = mean(all);
  Series between, within;
  for (const auto& [label, vals] : groups) {
    const double m = mean(vals);
    between.push_back(static_cast<double>(vals.size()) * (m - grand) * (m - grand));
    for (double v : vals) within.push_back((v - m) * (v - m));
  }
  AnovaResult res;
  res.ss_between = pairwise_sum(between);
  res.ss_within = pairwise_sum(within);
  res.df_between = static_cast<int>(groups.size()) - 1;
  res.df_within = static_cast<int>(all.size() - groups.size());
  if (!(res.ss_within > 0.0)) throw Error("stats", Errc::ZeroVariance, "no within-group variance");
  res.F = (res.ss_between / res.df_between) / (res.ss_within / res.df_within);
  res.p = dist::f_sf(res.F, res.df_between, res.df_within);
  res.partial_eta_sq = res.ss_between / (res.ss_between + res.ss_within);
  res.eta_ci_90 = eta_squared_ci(res.F, res.df_between, res.df_within);
  return res;
}

/// One-way repeated-measures ANOVA: subject_id is the within-subject key,
/// group_label the condition. Every subject needs exactly one value per
/// condition. ss_within holds the error (condition x subject) sum of squares.
inline AnovaResult rm_anova(const LongTable& table) {
  std::set<std::string> conditions;
  std::map<std::string, std::map<std::string, double>> cells;  // subject -> condition -> value
  for (const auto& r : table.rows) {
    if (!std::isfinite(r.value)) throw Error("stats", Errc::InvalidArgument, "non-finite value");
    conditions.insert(r.group_label);
    if (!cells[r.subject_id].emplace(r.group_label, r.value).second)
      throw Error("stats", Errc::IncompleteDesign,
                  "subject '" + r.subject_id + "' has repeated condition '" + r.group_label + "'");
  }
  if (conditions.size() < 2) throw Error("stats", Errc::DegenerateDesign, "need at least two conditions");
  if (cells.size() < 2) throw Error("stats", Errc::DegenerateDesign, "need at least two subjects");
  for (const auto& [subject, row] : cells)
    if (row.size() != conditions.size())
      throw Error("stats", Errc::IncompleteDesign, "subject '" + subject + "' is missing a condition");

  const auto n = static_cast<double>(cells.size());
  const auto k = static_cast<double>(conditions.size());
  Series all;
  for (const auto& [subject, row] : cells)
    for (const auto& [cond, v] : row) all.push_back(v);
  const double grand = mean(all);

  std::map<std::string, Series> by_cond;
  Series subj_terms, total_terms;
  for (const auto& [subject, row] : cells) {
    Series vals;
    for (const auto& [cond, v] : row) {
      vals.push_back(v);
      by_cond[cond].push_back(v);
      total_terms.push_back((v - grand) * (v - grand));
    }
    const double m = mean(vals);
    subj_terms.push_back(k * (m - grand) * (m - grand));
  }
  Series cond_terms;
  for (const auto& [cond, vals] : by_cond) {
    const double m = mean(vals);
    cond_terms.push_back(n * (m - grand) * (m - grand));
  }
  const double ss_total = pairwise_sum(total_terms);
  const double ss_cond = pairwise_sum(cond_terms);
  const double ss_subj = pairwise_sum(subj_terms);
  const double ss_err = std::max(0.0, ss_total - ss_cond - ss_subj);

  AnovaResult res;
  res.df_between = static_cast<int>(k) - 1;
  res.df_within = (static_cast<int>(k) - 1) * (static_cast<int>(n) - 1);
  res.ss_between = ss_cond;
  res.ss_within = ss_err;
  const double eps = 1e-12 * std::max(ss_total, 1e-300);
  if (ss_cond <= eps) {
    res.ss_between = 0.0;
    res.F = 0.0;
    res.p = 1.0;
    res.partial_eta_sq = 0.0;
    res.eta_ci_90 = {0.0, 0.0};
    if (ss_err > eps) res.eta_ci_90 = eta_squared_ci(0.0, res.df_between, res.df_within);
    return res;
  }
  if (ss_err <= eps) throw Error("stats", Errc::ZeroVariance, "no residual variance in repeated-measures design");
  res.F = (ss_cond / res.df_between) / (ss_err / res.df_within);
  res.p = dist::f_sf(res.F, res.df_between, res.df_within);
  res.partial_eta_sq = ss_cond / (ss_cond + ss_err);
  res.eta_ci_90 = eta_squared_ci(res.F, res.df_between, res.df_within);
  return res;
}

// ---------------------------------------------------------------------------
// Multiple comparisons

enum class PAdjust { Holm, FdrBh };

constexpr std::string_view p_adjust_name(PAdjust m) { return m == PAdjust::Holm ? "holm" : "fdr_bh"; }

inline PAdjust parse_p_adjust(std::string_view s) {
  if (s == "holm") return PAdjust::Holm;
  if (s == "fdr_bh" || s == "fdr") return PAdjust::FdrBh;
  throw Error("stats", Errc::InvalidArgument, "unknown p-value adjustment '" + std::string(s) + "'");
}

/// Holm step-down or Benjamini-Hochberg step-up adjustment; input order kept.
inline Series p_adjust(SeriesView p, PAdjust method) {
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw Error("stats", Errc::OutOfRangeP, "p-value outside [0, 1]");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  Series out(m);
  const auto dm = static_cast<double>(m);
  if (method == PAdjust::Holm) {
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      running = std::max(running, std::min(1.0, (dm - static_cast<double>(i)) * p[order[i]]));
      out[order[i]] = running;
    }
  } else {
    double running = 1.0;
    for (std::size_t i = m; i-- > 0;) {
      running = std::min(running, std::min(1.0, dm / static_cast<double>(i + 1) * p[order[i]]));
      out[order[i]] = running;
    }
  }
  return out;
}

/// Standardized mean difference with the (n - 1)-weighted pooled SD.
inline double cohens_d(SeriesView a, SeriesView b) {
  if (a.size() < 2 || b.size() < 2) throw Error("stats", Errc::SampleTooSmall, "Cohen's d needs n >= 2 per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled =
      std::sqrt(((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0));
  if (!(pooled > 0.0)) throw Error("stats", Errc::ZeroPooledSD, "pooled standard deviation is zero");
  return (mean(a) - mean(b)) / pooled;
}

struct PosthocPair {
  std::string group_a;
  std::string group_b;
  double mean_diff = 0.0;  // mean(a) - mean(b)
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  double cohens_d = 0.0;
};

struct PosthocResult {
  PAdjust method = PAdjust::Holm;
  std::vector<PosthocPair> pairs;
};

/// Tukey HSD (Tukey-Kramer for unequal sizes) over all group pairs in label
/// order. p_raw comes from the studentized range distribution; p_adjusted
/// applies `method` across the family.
inline PosthocResult tukey_hsd(const LongTable& table, PAdjust method = PAdjust::Holm) {
  const auto groups = split_groups(table);
  if (groups.size() < 2) throw Error("stats", Errc::DegenerateDesign, "post-hoc tests need at least two groups");
  std::size_t total = 0;
  Series within;
  for (const auto& [label, vals] : groups) {
    if (vals.size() < 2) throw Error("stats", Errc::DegenerateDesign, "group '" + label + "' has fewer than 2 rows");
    const double m = mean(vals);
    for (double v : vals) within.push_back((v - m) * (v - m));
    total += vals.size();
  }
  const auto k = static_cast<int>(groups.size());
  const double df = static_cast<double>(total) - k;
  const double mse = pairwise_sum(within) / df;

  PosthocResult res;
  res.method = method;
  Series raw;
  for (auto a = groups.begin(); a != groups.end(); ++a) {
    for (auto b = std::next(a); b != groups.end(); ++b) {
      PosthocPair pair;
      pair.group_a = a->first;
      pair.group_b = b->first;
      pair.mean_diff = mean(a->second) - mean(b->second);
      if (mse > 0.0) {
        const double se = std::sqrt(mse / 2.0 * (1.0 / a->second.size() + 1.0 / b->second.size()));
        const double q = std::abs(pair.mean_diff) / se;
        pair.p_raw = std::clamp(1.0 - dist::studentized_range_cdf(q, k, df), 0.0, 1.0);
        pair.cohens_d = cohens_d(a->second, b->second);
      } else {
        pair.p_raw = pair.mean_diff == 0.0 ? 1.0 : 0.0;
      }
      raw.push_back(pair.p_raw);
      res.pairs.push_back(std::move(pair));
    }
  }
  const Series adj = p_adjust(raw, method);
  for (std::size_t i = 0; i < adj.size(); ++i) res.pairs[i].p_adjusted = std::max(adj[i], res.pairs[i].p_raw);
  return res;
}

}  // namespace synchrolab::stats
