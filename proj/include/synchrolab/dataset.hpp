#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "synchrolab/error.hpp"
#include "synchrolab/numeric.hpp"

namespace synchrolab {

enum class ChannelKind { EDA, BVP };

constexpr double nominal_rate_hz(ChannelKind c) { return c == ChannelKind::EDA ? 10.0 : 200.0; }

constexpr std::string_view channel_name(ChannelKind c) { return c == ChannelKind::EDA ? "EDA" : "BVP"; }

inline ChannelKind parse_channel(std::string_view s) {
  if (s == "EDA" || s == "eda") return ChannelKind::EDA;
  if (s == "BVP" || s == "bvp") return ChannelKind::BVP;
  throw Error("dataset", Errc::InvalidArgument, "unknown channel kind '" + std::string(s) + "'");
}

/// One subject's single-channel signal on a uniform grid.
///
/// Sample i sits at time i / sample_rate_hz relative to the recording start;
/// t0_offset_s places that start on the cohort clock.
struct Recording {
  std::string subject_id;
  ChannelKind channel = ChannelKind::EDA;
  double sample_rate_hz = 10.0;
  Series samples;
  double t0_offset_s = 0.0;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }

  friend bool operator==(const Recording&, const Recording&) = default;
};

struct Segment {
  std::string label;
  double start_s = 0.0;
  double end_s = 0.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Ordered, non-overlapping analysis windows on the cohort timeline.
class SegmentSpec {
 public:
  SegmentSpec() = default;
  explicit SegmentSpec(std::vector<Segment> segments) : segments_(std::move(segments)) {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      if (!(s.start_s >= 0.0) || !(s.end_s > s.start_s))
        throw Error("dataset", Errc::InvalidArgument, "segment '" + s.label + "' has an empty or negative range");
      if (i > 0 && s.start_s < segments_[i - 1].end_s)
        throw Error("dataset", Errc::InvalidArgument, "segments must be ascending and non-overlapping");
    }
  }

  // 0-100 s, 100-160 s (climax), 160-260 s.
  static SegmentSpec concert_default() {
    return SegmentSpec({{"0-100", 0.0, 100.0}, {"100-160", 100.0, 160.0}, {"160-260", 160.0, 260.0}});
  }

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }

  void check_within(double duration_s) const {
    constexpr double kTol = 1e-9;
    for (const auto& s : segments_)
      if (s.end_s > duration_s + kTol)
        throw Error("dataset", Errc::OutOfRange,
                    "segment '" + s.label + "' ends after the cohort duration");
  }

  // Listed segments followed by the implicit whole-timeline "overall" window.
  std::vector<Segment> with_overall(double duration_s) const {
    auto out = segments_;
    out.push_back({"overall", 0.0, duration_s});
    return out;
  }

  friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;

 private:
  std::vector<Segment> segments_;
};

struct Cohort {
  std::string label;
  std::vector<Recording> recordings;
  double duration_s = 260.0;
  SegmentSpec segments = SegmentSpec::concert_default();
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Parses the `timestamp_ms,value` CSV format into a Recording.
///
/// The header line is optional. Blank lines are skipped. Timestamps must be
/// strictly increasing; their median spacing has to match `expected_rate_hz`
/// within 5 %, otherwise RateMismatch is thrown. Bad rows raise
/// MalformedRowError carrying the zero-based data row index.
inline Recording parse_recording(std::string_view bytes, ChannelKind channel, double expected_rate_hz,
                                 std::string subject_id = {}) {
  if (!(expected_rate_hz > 0.0))
    throw Error("dataset", Errc::InvalidArgument, "expected sample rate must be positive");

  std::vector<double> stamps;
  Series values;
  std::size_t row = 0;
  bool first_line = true;
  std::size_t pos = 0;
  while (pos <= bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    const std::string_view line = detail::trim(bytes.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    if (first_line) {
      first_line = false;
      if (line == "timestamp_ms,value") continue;
    }
    const auto comma = line.find(',');
    double ts = 0.0;
    double v = 0.0;
    if (comma == std::string_view::npos || !detail::parse_double(line.substr(0, comma), ts) ||
        !detail::parse_double(line.substr(comma + 1), v))
      throw MalformedRowError(row, "malformed row " + std::to_string(row) + ": '" + std::string(line) + "'");
    if (!stamps.empty() && !(ts > stamps.back()))
      throw MalformedRowError(row, "non-increasing timestamp at row " + std::to_string(row));
    stamps.push_back(ts);
    values.push_back(v);
    ++row;
  }
  if (values.empty()) throw Error("dataset", Errc::EmptyFile, "recording has no data rows");

  if (stamps.size() >= 2) {
    std::vector<double> gaps(stamps.size() - 1);
    for (std::size_t i = 1; i < stamps.size(); ++i) gaps[i - 1] = (stamps[i] - stamps[i - 1]) / 1000.0;
    const double median_gap = quantile(gaps, 0.5);
    const double expected_gap = 1.0 / expected_rate_hz;
    if (std::abs(median_gap - expected_gap) > 0.05 * expected_gap) {
      std::ostringstream msg;
      msg << "median sample interval " << median_gap << " s does not match expected " << expected_gap
          << " s (" << expected_rate_hz << " Hz)";
      throw Error("dataset", Errc::RateMismatch, msg.str());
    }
  }

  Recording rec;
  rec.subject_id = std::move(subject_id);
  rec.channel = channel;
  rec.sample_rate_hz = expected_rate_hz;
  rec.samples = std::move(values);
  rec.t0_offset_s = stamps.front() / 1000.0;
  return rec;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("dataset", Errc::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Recording load_recording(const std::filesystem::path& path, ChannelKind channel, double expected_rate_hz,
                                std::string subject_id) {
  return parse_recording(read_file(path), channel, expected_rate_hz, std::move(subject_id));
}

/// Writes a recording in the ingestion CSV format. Timestamps are whole
/// milliseconds when the grid allows it.
inline std::string format_recording_csv(const Recording& rec) {
  std::string out = "timestamp_ms,value\n";
  char buf[64];
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const double ms = (rec.t0_offset_s + static_cast<double>(i) / rec.sample_rate_hz) * 1000.0;
    auto [p1, e1] = std::to_chars(buf, buf + sizeof buf, std::round(ms * 1e6) / 1e6);
    out.append(buf, p1);
    out.push_back(',');
    auto [p2, e2] = std::to_chars(buf, buf + sizeof buf, rec.samples[i]);
    out.append(buf, p2);
    out.push_back('\n');
  }
  return out;
}

/// Samples with time in [start_s, end_s), times relative to the recording start.
inline Recording slice_segment(const Recording& rec, double start_s, double end_s) {
  constexpr double kTol = 1e-9;
  if (!(start_s >= -kTol) || !(end_s > start_s) || end_s > rec.duration_s() + kTol)
    throw Error("dataset", Errc::OutOfRange, "segment [" + std::to_string(start_s) + ", " + std::to_string(end_s) +
                                                 ") outside recording of " + std::to_string(rec.duration_s()) + " s");
  const double rate = rec.sample_rate_hz;
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(start_s * rate - kTol)));
  auto count = static_cast<std::size_t>(std::floor((end_s - start_s) * rate + kTol));
  count = std::min(count, rec.samples.size() - std::min(first, rec.samples.size()));

  Recording out;
  out.subject_id = rec.subject_id;
  out.channel = rec.channel;
  out.sample_rate_hz = rate;
  out.t0_offset_s = rec.t0_offset_s + static_cast<double>(first) / rate;
  out.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(first),
                     rec.samples.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

inline SeriesView slice_view(SeriesView samples, double rate_hz, const Segment& seg) {
  constexpr double kTol = 1e-9;
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(seg.start_s * rate_hz - kTol)));
  auto count = static_cast<std::size_t>(std::floor((seg.end_s - seg.start_s) * rate_hz + kTol));
  if (first > samples.size() || seg.end_s * rate_hz > static_cast<double>(samples.size()) + 1e-6)
    throw Error("dataset", Errc::OutOfRange, "segment '" + seg.label + "' outside series");
  count = std::min(count, samples.size() - first);
  return samples.subspan(first, count);
}

struct RecordingFlags {
  std::string subject_id;
  bool length_mismatch = false;
  bool flat_line = false;
  bool non_finite = false;

  bool any() const { return length_mismatch || flat_line || non_finite; }
};

struct ValidationReport {
  std::vector<RecordingFlags> recordings;  // same order as the cohort

  std::size_t flagged_count() const {
    return static_cast<std::size_t>(
        std::count_if(recordings.begin(), recordings.end(), [](const auto& r) { return r.any(); }));
  }
};

inline constexpr double kFlatLineVariance = 1e-9;
inline constexpr double kLengthTolerance = 0.01;

/// Screens each recording for length mismatch (beyond 1 % of the cohort
/// duration), flat lines (variance below 1e-9) and non-finite samples.
inline ValidationReport validate_cohort(const Cohort& c) {
  ValidationReport report;
  report.recordings.reserve(c.recordings.size());
  for (const auto& rec : c.recordings) {
    RecordingFlags f;
    f.subject_id = rec.subject_id;
    f.non_finite = !all_finite(rec.samples);
    f.length_mismatch = rec.samples.empty() ||
                        std::abs(rec.duration_s() - c.duration_s) > kLengthTolerance * c.duration_s;
    if (!f.non_finite && !rec.samples.empty()) f.flat_line = population_variance(rec.samples) < kFlatLineVariance;
    report.recordings.push_back(std::move(f));
  }
  return report;
}

}  // namespace synchrolab
