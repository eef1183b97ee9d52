#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "synchrolab/dataset.hpp"
#include "synchrolab/distributions.hpp"
#include "synchrolab/dtw.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/numeric.hpp"
#include "synchrolab/parallel.hpp"
#include "synchrolab/processing.hpp"

namespace synchrolab {

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;
  int df = 0;
};

/// Product-moment correlation with a two-sided p-value from the t
/// distribution on n - 2 degrees of freedom.
inline PearsonResult pearson(SeriesView x, SeriesView y) {
  if (x.size() != y.size())
    throw Error("synchrony", Errc::LengthMismatch, "pearson inputs differ in length (" + std::to_string(x.size()) +
                                                       " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 3) throw Error("synchrony", Errc::LengthMismatch, "pearson needs at least 3 samples");
  const double mx = mean(x);
  const double my = mean(y);
  const std::size_t n = x.size();
  Series sxy(n), sxx(n), syy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy[i] = dx * dy;
    sxx[i] = dx * dx;
    syy[i] = dy * dy;
  }
  const double vx = pairwise_sum(sxx);
  const double vy = pairwise_sum(syy);
  if (!(vx > 0.0) || !(vy > 0.0)) throw Error("synchrony", Errc::ConstantInput, "pearson input is constant");
  PearsonResult res;
  res.r = std::clamp(pairwise_sum(sxy) / std::sqrt(vx * vy), -1.0, 1.0);
  res.df = static_cast<int>(n) - 2;
  const double one_minus = 1.0 - res.r * res.r;
  res.p = one_minus <= 0.0 ? 0.0 : dist::t_two_sided_p(res.r * std::sqrt(res.df / one_minus), res.df);
  return res;
}

struct SynchronyResult {
  std::string segment_label;
  double r = 0.0;
  double p = 1.0;
  int df = 0;
  double dtw_raw = 0.0;
  double dtw_normalized = 0.0;
  std::size_t n_x = 0;
  std::size_t n_y = 0;

  friend bool operator==(const SynchronyResult&, const SynchronyResult&) = default;
};

/// Pointwise mean over the cohort's subjects for one component.
inline Series group_average(const ProcessedCohort& cohort, Component component) {
  if (cohort.subjects.empty())
    throw Error("synchrony", Errc::EmptyCohort, "cohort '" + cohort.label + "' has no subjects");
  const std::size_t len = cohort.subjects.front().component(component).size();
  for (const auto& s : cohort.subjects)
    if (s.component(component).size() != len)
      throw Error("synchrony", Errc::LengthMismatch, "subject '" + s.subject_id + "' has a different length");
  Series out(len);
  Series column(cohort.subjects.size());
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t k = 0; k < cohort.subjects.size(); ++k) column[k] = cohort.subjects[k].component(component)[t];
    out[t] = pairwise_sum(column) / static_cast<double>(column.size());
  }
  return out;
}

/// Block means over windows of `factor` samples; a trailing partial block is dropped.
inline Series mean_decimate(SeriesView x, std::size_t factor) {
  if (factor == 0) throw Error("synchrony", Errc::InvalidArgument, "decimation factor must be positive");
  Series out(x.size() / factor);
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = mean(x.subspan(b * factor, factor));
  return out;
}

struct GroupSynchronyOptions {
  DtwConfig dtw;
  double correlation_hz = 1.0;  // correlation runs on mean-decimated series
};

/// Correlation and DTW between two group-average traces for every segment and
/// the whole timeline ("overall", last). Correlation uses the series
/// mean-decimated to options.correlation_hz; DTW uses the input rate.
inline std::vector<SynchronyResult> group_synchrony(SeriesView reference_avg, SeriesView probe_avg,
                                                    const SegmentSpec& segments, double rate_hz,
                                                    const GroupSynchronyOptions& options = {}) {
  if (reference_avg.size() != probe_avg.size())
    throw Error("synchrony", Errc::LengthMismatch, "group averages differ in length");
  const double duration = static_cast<double>(reference_avg.size()) / rate_hz;
  segments.check_within(duration);
  const double ratio = rate_hz / options.correlation_hz;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (factor == 0 || std::abs(ratio - static_cast<double>(factor)) > 1e-9)
    throw Error("synchrony", Errc::InvalidArgument, "analysis rate must be an integer multiple of the correlation rate");

  std::vector<SynchronyResult> out;
  for (const auto& seg : segments.with_overall(duration)) {
    const SeriesView ref = slice_view(reference_avg, rate_hz, seg);
    const SeriesView probe = slice_view(probe_avg, rate_hz, seg);
    const PearsonResult pr = pearson(mean_decimate(ref, factor), mean_decimate(probe, factor));
    const DtwResult d = dtw_distance(ref, probe, options.dtw);
    out.push_back({seg.label, pr.r, pr.p, pr.df, d.raw, d.normalized, ref.size(), probe.size()});
  }
  return out;
}

struct PairRow {
  std::string probe_id;
  std::string reference_id;
  std::string condition;
  std::string segment;
  double dtw_raw = 0.0;
  double dtw_norm = 0.0;

  friend bool operator==(const PairRow&, const PairRow&) = default;
};

struct PairTable {
  std::vector<PairRow> rows;

  friend bool operator==(const PairTable&, const PairTable&) = default;
};

/// Every probe subject against every reference subject, for each segment and
/// the overall window. Rows are ordered probe-major, then reference, then
/// segment, independent of the worker count.
inline PairTable pairwise_dtw(const ProcessedCohort& reference, const ProcessedCohort& probe, Component component,
                              const SegmentSpec& segments, const DtwConfig& cfg, unsigned threads = 1) {
  if (reference.subjects.empty() || probe.subjects.empty())
    throw Error("synchrony", Errc::EmptyCohort, "pairwise DTW needs non-empty cohorts");
  if (reference.rate_hz != probe.rate_hz)
    throw Error("synchrony", Errc::LengthMismatch, "cohorts have different sample rates");
  const double rate = reference.rate_hz;
  const std::size_t len = reference.subjects.front().component(component).size();
  auto check_len = [&](const ProcessedCohort& c) {
    for (const auto& s : c.subjects)
      if (s.component(component).size() != len)
        throw Error("synchrony", Errc::LengthMismatch, "subject '" + s.subject_id + "' has a different length");
  };
  check_len(reference);
  check_len(probe);
  const double duration = static_cast<double>(len) / rate;
  segments.check_within(duration);
  const auto windows = segments.with_overall(duration);

  const std::size_t n_ref = reference.subjects.size();
  const std::size_t n_seg = windows.size();
  const std::size_t total = probe.subjects.size() * n_ref * n_seg;
  PairTable table;
  table.rows.resize(total);
  parallel_for(total, threads, [&](std::size_t idx) {
    const std::size_t s = idx % n_seg;
    const std::size_t r = (idx / n_seg) % n_ref;
    const std::size_t p = idx / (n_seg * n_ref);
    const auto& ps = probe.subjects[p];
    const auto& rs = reference.subjects[r];
    const DtwResult d = dtw_distance(slice_view(ps.component(component), rate, windows[s]),
                                     slice_view(rs.component(component), rate, windows[s]), cfg);
    table.rows[idx] = {ps.subject_id, rs.subject_id, probe.label, windows[s].label, d.raw, d.normalized};
  });
  return table;
}

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline constexpr std::string_view kPairTableHeader = "probe_id,reference_id,condition,segment,dtw_raw,dtw_norm";

/// CSV with shortest round-trip formatting, so reading it back is exact.
inline std::string format_pair_table_csv(const PairTable& t) {
  std::string out(kPairTableHeader);
  out.push_back('\n');
  for (const auto& r : t.rows) {
    out += r.probe_id;
    out.push_back(',');
    out += r.reference_id;
    out.push_back(',');
    out += r.condition;
    out.push_back(',');
    out += r.segment;
    out.push_back(',');
    detail::append_double(out, r.dtw_raw);
    out.push_back(',');
    detail::append_double(out, r.dtw_norm);
    out.push_back('\n');
  }
  return out;
}

inline PairTable parse_pair_table_csv(std::string_view text) {
  PairTable t;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = detail::trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    if (line_no++ == 0) {
      if (line != kPairTableHeader) throw Error("synchrony", Errc::MalformedRow, "unexpected pair table header");
      continue;
    }
    const auto f = detail::split_csv_line(line);
    PairRow row;
    if (f.size() != 6 || !detail::parse_double(f[4], row.dtw_raw) || !detail::parse_double(f[5], row.dtw_norm))
      throw MalformedRowError(line_no - 2, "malformed pair table row " + std::to_string(line_no - 2));
    row.probe_id = f[0];
    row.reference_id = f[1];
    row.condition = f[2];
    row.segment = f[3];
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace synchrolab
