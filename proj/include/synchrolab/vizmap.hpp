#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "synchrolab/dataset.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/numeric.hpp"
#include "synchrolab/preprocess.hpp"

namespace synchrolab {

// Animation parameter driven by a track: BVP pulses the flower's scale, EDA
// raises the grass height.
enum class TrackChannel { Scale, Height };

constexpr std::string_view track_channel_name(TrackChannel c) { return c == TrackChannel::Scale ? "scale" : "height"; }

struct Bounds {
  double min_out = 0.0;
  double max_out = 1.0;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct KeyframeTrack {
  std::string subject_id;
  TrackChannel channel = TrackChannel::Height;
  int fps = 30;
  Bounds bounds;
  Series values;

  friend bool operator==(const KeyframeTrack&, const KeyframeTrack&) = default;
};

namespace detail {

inline void check_bounds(const Bounds& b, int fps) {
  if (!(b.max_out >= b.min_out)) throw Error("vizmap", Errc::InvalidArgument, "track bounds are inverted");
  if (fps <= 0) throw Error("vizmap", Errc::InvalidArgument, "fps must be positive");
}

// u in [0, 1] -> [lo, hi]; endpoints map exactly and the result never leaves the bounds.
inline double map_unit(double u, const Bounds& b) {
  if (u <= 0.0) return b.min_out;
  if (u >= 1.0) return b.max_out;
  return std::clamp(b.min_out + u * (b.max_out - b.min_out), b.min_out, b.max_out);
}

inline Series map_to_bounds(SeriesView unit, const Bounds& b) {
  Series out(unit.size());
  std::transform(unit.begin(), unit.end(), out.begin(), [&](double u) { return map_unit(u, b); });
  return out;
}

}  // namespace detail

/// Normalised EDA (values in [0, 1]) -> height keyframes at `fps`.
inline KeyframeTrack eda_to_height(SeriesView eda_normalized, double rate_hz, Bounds bounds, int fps = 30,
                                   std::string subject_id = {}) {
  detail::check_bounds(bounds, fps);
  for (double v : eda_normalized)
    if (!(v >= 0.0 && v <= 1.0))
      throw Error("vizmap", Errc::InputOutOfUnitRange, "EDA input must be normalised to [0, 1]");
  if (eda_normalized.empty()) throw Error("vizmap", Errc::EmptyInput, "EDA input is empty");
  KeyframeTrack t;
  t.subject_id = std::move(subject_id);
  t.channel = TrackChannel::Height;
  t.fps = fps;
  t.bounds = bounds;
  t.values = detail::map_to_bounds(resample(eda_normalized, rate_hz, fps), bounds);
  return t;
}

/// Raw BVP -> scale keyframes: min-max normalised, resampled to `fps`, mapped
/// into `bounds`. The waveform itself is encoded; no beat detection.
inline KeyframeTrack bvp_to_scale(SeriesView bvp, double rate_hz, Bounds bounds, int fps = 30,
                                  std::string subject_id = {}) {
  detail::check_bounds(bounds, fps);
  if (bvp.empty()) throw Error("vizmap", Errc::EmptyInput, "BVP input is empty");
  Series unit;
  try {
    unit = minmax_normalize(bvp);
  } catch (const Error& e) {
    throw Error("vizmap", e.code(), e.what());
  }
  KeyframeTrack t;
  t.subject_id = std::move(subject_id);
  t.channel = TrackChannel::Scale;
  t.fps = fps;
  t.bounds = bounds;
  t.values = detail::map_to_bounds(resample(unit, rate_hz, fps), bounds);
  return t;
}

struct KeyframeConfig {
  int fps = 30;
  Bounds height_bounds{0.0, 1.0};
  Bounds scale_bounds{0.8, 1.2};
};

/// One track per recording, in cohort order: EDA recordings go through the
/// cleaning pipeline and drive height, BVP recordings drive scale.
inline std::vector<KeyframeTrack> build_tracks(const Cohort& cohort, const KeyframeConfig& cfg,
                                               const PreprocessConfig& pre = {}) {
  if (cohort.recordings.empty())
    throw Error("vizmap", Errc::EmptyCohort, "cohort '" + cohort.label + "' has no recordings");
  std::vector<KeyframeTrack> tracks;
  tracks.reserve(cohort.recordings.size());
  for (const auto& rec : cohort.recordings) {
    if (rec.channel == ChannelKind::EDA) {
      const Recording clean = preprocess_pipeline(rec, pre);
      tracks.push_back(eda_to_height(clean.samples, clean.sample_rate_hz, cfg.height_bounds, cfg.fps, rec.subject_id));
    } else {
      tracks.push_back(bvp_to_scale(rec.samples, rec.sample_rate_hz, cfg.scale_bounds, cfg.fps, rec.subject_id));
    }
  }
  return tracks;
}

inline nlohmann::ordered_json track_to_json(const KeyframeTrack& t) {
  nlohmann::ordered_json j;
  j["subject"] = t.subject_id;
  j["channel"] = track_channel_name(t.channel);
  j["fps"] = t.fps;
  j["bounds"] = {t.bounds.min_out, t.bounds.max_out};
  j["values"] = t.values;
  return j;
}

/// Line-delimited JSON, one object per track:
/// {"subject", "channel", "fps", "bounds": [min, max], "values": [...]}.
inline void export_tracks(const std::vector<KeyframeTrack>& tracks, std::ostream& out) {
  if (tracks.empty()) throw Error("vizmap", Errc::EmptyCohort, "no tracks to export");
  for (const auto& t : tracks) out << track_to_json(t).dump() << '\n';
  if (!out) throw Error("vizmap", Errc::Io, "failed to write keyframe stream");
}

inline std::vector<KeyframeTrack> parse_tracks(std::string_view ndjson) {
  std::vector<KeyframeTrack> tracks;
  std::size_t pos = 0;
  while (pos < ndjson.size()) {
    std::size_t eol = ndjson.find('\n', pos);
    if (eol == std::string_view::npos) eol = ndjson.size();
    const auto line = ndjson.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    KeyframeTrack t;
    t.subject_id = j.at("subject").get<std::string>();
    t.channel = j.at("channel").get<std::string>() == "scale" ? TrackChannel::Scale : TrackChannel::Height;
    t.fps = j.at("fps").get<int>();
    t.bounds = {j.at("bounds").at(0).get<double>(), j.at("bounds").at(1).get<double>()};
    t.values = j.at("values").get<Series>();
    tracks.push_back(std::move(t));
  }
  return tracks;
}

}  // namespace synchrolab
