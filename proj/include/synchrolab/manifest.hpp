#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synchrolab/dataset.hpp"
#include "synchrolab/decompose.hpp"
#include "synchrolab/dtw.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/parallel.hpp"
#include "synchrolab/preprocess.hpp"
#include "synchrolab/processing.hpp"
#include "synchrolab/stats.hpp"
#include "synchrolab/vizmap.hpp"

namespace synchrolab {

inline constexpr int kManifestSchemaVersion = 1;

struct RecordingRef {
  std::string subject;
  std::string path;  // as written in the manifest, relative to its directory

  friend bool operator==(const RecordingRef&, const RecordingRef&) = default;
};

struct CohortDescriptor {
  std::string label;
  ChannelKind channel = ChannelKind::EDA;
  double rate_hz = 10.0;
  double duration_s = 260.0;
  std::vector<RecordingRef> recordings;
};

struct ScoreTableRef {
  std::string label;
  std::string path;  // CSV subject,condition,value
};

enum class PairMeasure { DtwNorm, DtwRaw };

struct StatsConfig {
  stats::PAdjust p_adjust = stats::PAdjust::Holm;
  double correlation_hz = 1.0;
  PairMeasure measure = PairMeasure::DtwNorm;
  std::vector<ScoreTableRef> scores;
};

struct StudyManifest {
  int schema_version = kManifestSchemaVersion;
  std::filesystem::path base_dir;
  CohortDescriptor reference;
  std::vector<CohortDescriptor> probes;
  SegmentSpec segments = SegmentSpec::concert_default();
  PreprocessConfig preprocess;
  DecomposeConfig decompose;
  bool keep_flagged = false;
  DtwConfig dtw;
  Component component = Component::Tonic;
  StatsConfig stats;
  KeyframeConfig keyframes;
  std::vector<CohortDescriptor> keyframe_cohorts;  // extra cohorts (e.g. BVP) exported as tracks only

  std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }

  // reference first, then probes in manifest order
  std::vector<const CohortDescriptor*> analysis_cohorts() const {
    std::vector<const CohortDescriptor*> out{&reference};
    for (const auto& p : probes) out.push_back(&p);
    return out;
  }
};

namespace detail {

[[noreturn]] inline void manifest_error(const std::string& where, const std::string& what) {
  throw Error("manifest", Errc::Manifest, where.empty() ? what : where + ": " + what);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    manifest_error(where + "." + key, "has the wrong type");
  }
}

inline bool safe_label(std::string_view s) {
  if (s.empty() || s == "overall") return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

inline CohortDescriptor parse_cohort_descriptor(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) manifest_error(where, "must be an object");
  CohortDescriptor c;
  c.label = get_or<std::string>(j, "label", "", where);
  if (!safe_label(c.label)) manifest_error(where + ".label", "must be a non-empty name of [A-Za-z0-9_.-] other than 'overall'");
  try {
    c.channel = parse_channel(get_or<std::string>(j, "channel", "EDA", where));
  } catch (const Error& e) {
    manifest_error(where + ".channel", e.what());
  }
  c.rate_hz = get_or<double>(j, "rate_hz", nominal_rate_hz(c.channel), where);
  c.duration_s = get_or<double>(j, "duration_s", 260.0, where);
  if (!(c.rate_hz > 0.0)) manifest_error(where + ".rate_hz", "must be positive");
  if (!(c.duration_s > 0.0)) manifest_error(where + ".duration_s", "must be positive");
  if (!j.contains("recordings") || !j.at("recordings").is_array() || j.at("recordings").empty())
    manifest_error(where + ".recordings", "must be a non-empty array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.at("recordings").size(); ++i) {
    const auto& r = j.at("recordings").at(i);
    const std::string rw = where + ".recordings[" + std::to_string(i) + "]";
    if (!r.is_object()) manifest_error(rw, "must be an object");
    RecordingRef ref{get_or<std::string>(r, "subject", "", rw), get_or<std::string>(r, "path", "", rw)};
    if (ref.subject.empty()) manifest_error(rw + ".subject", "is required");
    if (ref.path.empty()) manifest_error(rw + ".path", "is required");
    if (!seen.insert(ref.subject).second) manifest_error(rw + ".subject", "duplicate subject '" + ref.subject + "'");
    c.recordings.push_back(std::move(ref));
  }
  return c;
}

inline nlohmann::ordered_json cohort_descriptor_to_json(const CohortDescriptor& c) {
  nlohmann::ordered_json j;
  j["label"] = c.label;
  j["channel"] = channel_name(c.channel);
  j["rate_hz"] = c.rate_hz;
  j["duration_s"] = c.duration_s;
  j["recordings"] = nlohmann::ordered_json::array();
  for (const auto& r : c.recordings) j["recordings"].push_back({{"subject", r.subject}, {"path", r.path}});
  return j;
}

inline Bounds parse_bounds(const nlohmann::json& j, const char* key, Bounds fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& b = j.at(key);
  if (!b.is_array() || b.size() != 2 || !b.at(0).is_number() || !b.at(1).is_number())
    manifest_error(where + "." + key, "must be [min, max]");
  Bounds out{b.at(0).get<double>(), b.at(1).get<double>()};
  if (!(out.max_out >= out.min_out)) manifest_error(where + "." + key, "is inverted");
  return out;
}

inline PairMeasure parse_pair_measure(std::string_view s) {
  if (s == "dtw_norm") return PairMeasure::DtwNorm;
  if (s == "dtw_raw") return PairMeasure::DtwRaw;
  manifest_error("stats.measure", "must be dtw_norm or dtw_raw");
}

}  // namespace detail

constexpr std::string_view pair_measure_name(PairMeasure m) { return m == PairMeasure::DtwNorm ? "dtw_norm" : "dtw_raw"; }

/// Builds a manifest from its JSON form. Recording paths are kept as written
/// and resolved against `base_dir`. All configuration sections are optional.
inline StudyManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::get_or;
  using detail::manifest_error;
  if (!j.is_object()) manifest_error("", "manifest must be a JSON object");
  StudyManifest m;
  m.base_dir = base_dir;
  m.schema_version = get_or<int>(j, "schema_version", kManifestSchemaVersion, "");
  if (m.schema_version != kManifestSchemaVersion)
    manifest_error("schema_version", "unsupported version " + std::to_string(m.schema_version));

  if (!j.contains("reference")) manifest_error("reference", "is required");
  m.reference = detail::parse_cohort_descriptor(j.at("reference"), "reference");
  if (!j.contains("probes") || !j.at("probes").is_array() || j.at("probes").empty())
    manifest_error("probes", "must be a non-empty array");
  std::set<std::string> labels{m.reference.label};
  for (std::size_t i = 0; i < j.at("probes").size(); ++i) {
    auto c = detail::parse_cohort_descriptor(j.at("probes").at(i), "probes[" + std::to_string(i) + "]");
    if (!labels.insert(c.label).second) manifest_error("probes[" + std::to_string(i) + "].label", "duplicate label");
    m.probes.push_back(std::move(c));
  }
  for (const auto* c : m.analysis_cohorts()) {
    if (c->channel != m.reference.channel) manifest_error("probes", "all analysis cohorts must share one channel");
    if (c->duration_s != m.reference.duration_s) manifest_error("probes", "all analysis cohorts must share duration_s");
  }

  if (j.contains("segments")) {
    const auto& s = j.at("segments");
    if (!s.is_array()) manifest_error("segments", "must be an array");
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string w = "segments[" + std::to_string(i) + "]";
      Segment seg{get_or<std::string>(s.at(i), "label", "", w), get_or<double>(s.at(i), "start_s", -1.0, w),
                  get_or<double>(s.at(i), "end_s", -1.0, w)};
      if (!detail::safe_label(seg.label)) manifest_error(w + ".label", "must be a non-empty name other than 'overall'");
      segs.push_back(std::move(seg));
    }
    try {
      m.segments = SegmentSpec(std::move(segs));
      m.segments.check_within(m.reference.duration_s);
    } catch (const Error& e) {
      manifest_error("segments", e.what());
    }
  }

  const auto pj = j.value("preprocess", nlohmann::json::object());
  auto& pre = m.preprocess;
  pre.cutoff_hz = get_or<double>(pj, "cutoff_hz", pre.cutoff_hz, "preprocess");
  pre.filter_order = get_or<int>(pj, "filter_order", pre.filter_order, "preprocess");
  pre.zero_phase = get_or<bool>(pj, "zero_phase", pre.zero_phase, "preprocess");
  pre.iqr_multiplier = get_or<double>(pj, "iqr_multiplier", pre.iqr_multiplier, "preprocess");
  pre.ma_window_s = get_or<double>(pj, "ma_window_s", pre.ma_window_s, "preprocess");
  if (pj.contains("target_rates")) {
    pre.analysis_hz = get_or<double>(pj.at("target_rates"), "analysis_hz", pre.analysis_hz, "preprocess.target_rates");
    pre.animation_hz = get_or<double>(pj.at("target_rates"), "animation_hz", pre.animation_hz, "preprocess.target_rates");
  }
  m.keep_flagged = get_or<bool>(pj, "keep_flagged", false, "preprocess");
  if (!(pre.cutoff_hz > 0.0)) manifest_error("preprocess.cutoff_hz", "must be positive");
  if (pre.filter_order < 1) manifest_error("preprocess.filter_order", "must be at least 1");
  if (!(pre.iqr_multiplier >= 0.0)) manifest_error("preprocess.iqr_multiplier", "must be non-negative");
  if (!(pre.ma_window_s > 0.0)) manifest_error("preprocess.ma_window_s", "must be positive");
  if (!(pre.analysis_hz > 0.0) || !(pre.animation_hz > 0.0)) manifest_error("preprocess.target_rates", "must be positive");
  const double nyquist = m.reference.rate_hz / 2.0;
  if (pre.cutoff_hz >= nyquist) manifest_error("preprocess.cutoff_hz", "must be below Nyquist");
  if (pj.contains("decompose")) {
    const auto& dj = pj.at("decompose");
    try {
      m.decompose.method = parse_decompose_method(get_or<std::string>(dj, "method", "complementary_lowpass", "preprocess.decompose"));
    } catch (const Error& e) {
      manifest_error("preprocess.decompose.method", e.what());
    }
    m.decompose.tonic_cutoff_hz = get_or<double>(dj, "tonic_cutoff_hz", m.decompose.tonic_cutoff_hz, "preprocess.decompose");
    m.decompose.filter_order = get_or<int>(dj, "filter_order", m.decompose.filter_order, "preprocess.decompose");
    m.decompose.median_window_s = get_or<double>(dj, "median_window_s", m.decompose.median_window_s, "preprocess.decompose");
    if (!(m.decompose.tonic_cutoff_hz > 0.0) || m.decompose.tonic_cutoff_hz >= pre.analysis_hz / 2.0)
      manifest_error("preprocess.decompose.tonic_cutoff_hz", "must be positive and below Nyquist");
  }

  const auto dj = j.value("dtw", nlohmann::json::object());
  try {
    m.dtw.local_cost = parse_local_cost(get_or<std::string>(dj, "local_cost", "abs_diff", "dtw"));
    m.component = parse_component(get_or<std::string>(dj, "component", "tonic", "dtw"));
  } catch (const Error& e) {
    manifest_error("dtw", e.what());
  }
  if (get_or<std::string>(dj, "step", "symmetric", "dtw") != "symmetric") manifest_error("dtw.step", "only 'symmetric' is supported");
  if (dj.contains("band_radius") && !dj.at("band_radius").is_null()) {
    const auto r = get_or<long long>(dj, "band_radius", -1, "dtw");
    if (r < 0) manifest_error("dtw.band_radius", "must be a non-negative integer or null");
    m.dtw.band_radius = static_cast<std::size_t>(r);
  }
  m.dtw.normalize_by_path = get_or<bool>(dj, "normalize_by_path", true, "dtw");

  const auto sj = j.value("stats", nlohmann::json::object());
  try {
    m.stats.p_adjust = stats::parse_p_adjust(get_or<std::string>(sj, "p_adjust", "holm", "stats"));
  } catch (const Error& e) {
    manifest_error("stats.p_adjust", e.what());
  }
  m.stats.correlation_hz = get_or<double>(sj, "correlation_hz", 1.0, "stats");
  if (!(m.stats.correlation_hz > 0.0)) manifest_error("stats.correlation_hz", "must be positive");
  m.stats.measure = detail::parse_pair_measure(get_or<std::string>(sj, "measure", "dtw_norm", "stats"));
  if (sj.contains("scores")) {
    if (!sj.at("scores").is_array()) manifest_error("stats.scores", "must be an array");
    for (std::size_t i = 0; i < sj.at("scores").size(); ++i) {
      const std::string w = "stats.scores[" + std::to_string(i) + "]";
      ScoreTableRef ref{get_or<std::string>(sj.at("scores").at(i), "label", "", w),
                        get_or<std::string>(sj.at("scores").at(i), "path", "", w)};
      if (ref.label.empty() || ref.path.empty()) manifest_error(w, "needs label and path");
      m.stats.scores.push_back(std::move(ref));
    }
  }

  const auto kj = j.value("keyframes", nlohmann::json::object());
  m.keyframes.fps = get_or<int>(kj, "fps", static_cast<int>(pre.animation_hz), "keyframes");
  if (m.keyframes.fps <= 0) manifest_error("keyframes.fps", "must be positive");
  m.keyframes.height_bounds = detail::parse_bounds(kj, "height_bounds", m.keyframes.height_bounds, "keyframes");
  m.keyframes.scale_bounds = detail::parse_bounds(kj, "scale_bounds", m.keyframes.scale_bounds, "keyframes");
  if (kj.contains("cohorts")) {
    if (!kj.at("cohorts").is_array()) manifest_error("keyframes.cohorts", "must be an array");
    for (std::size_t i = 0; i < kj.at("cohorts").size(); ++i)
      m.keyframe_cohorts.push_back(
          detail::parse_cohort_descriptor(kj.at("cohorts").at(i), "keyframes.cohorts[" + std::to_string(i) + "]"));
  }
  return m;
}

/// Effective manifest with every default filled in, in a fixed key order.
inline nlohmann::ordered_json manifest_to_json(const StudyManifest& m) {
  nlohmann::ordered_json j;
  j["schema_version"] = m.schema_version;
  j["reference"] = detail::cohort_descriptor_to_json(m.reference);
  j["probes"] = nlohmann::ordered_json::array();
  for (const auto& p : m.probes) j["probes"].push_back(detail::cohort_descriptor_to_json(p));
  j["segments"] = nlohmann::ordered_json::array();
  for (const auto& s : m.segments.segments())
    j["segments"].push_back({{"label", s.label}, {"start_s", s.start_s}, {"end_s", s.end_s}});

  nlohmann::ordered_json pre;
  pre["cutoff_hz"] = m.preprocess.cutoff_hz;
  pre["filter_order"] = m.preprocess.filter_order;
  pre["zero_phase"] = m.preprocess.zero_phase;
  pre["iqr_multiplier"] = m.preprocess.iqr_multiplier;
  pre["ma_window_s"] = m.preprocess.ma_window_s;
  pre["target_rates"] = {{"analysis_hz", m.preprocess.analysis_hz}, {"animation_hz", m.preprocess.animation_hz}};
  pre["keep_flagged"] = m.keep_flagged;
  pre["decompose"] = {{"method", method_name(m.decompose.method)},
                      {"tonic_cutoff_hz", m.decompose.tonic_cutoff_hz},
                      {"filter_order", m.decompose.filter_order},
                      {"median_window_s", m.decompose.median_window_s}};
  j["preprocess"] = pre;

  nlohmann::ordered_json dtw;
  dtw["local_cost"] = local_cost_name(m.dtw.local_cost);
  dtw["step"] = "symmetric";
  dtw["band_radius"] = m.dtw.band_radius ? nlohmann::ordered_json(*m.dtw.band_radius) : nlohmann::ordered_json(nullptr);
  dtw["normalize_by_path"] = m.dtw.normalize_by_path;
  dtw["component"] = component_name(m.component);
  j["dtw"] = dtw;

  nlohmann::ordered_json st;
  st["p_adjust"] = stats::p_adjust_name(m.stats.p_adjust);
  st["correlation_hz"] = m.stats.correlation_hz;
  st["measure"] = pair_measure_name(m.stats.measure);
  st["scores"] = nlohmann::ordered_json::array();
  for (const auto& s : m.stats.scores) st["scores"].push_back({{"label", s.label}, {"path", s.path}});
  j["stats"] = st;

  nlohmann::ordered_json kf;
  kf["fps"] = m.keyframes.fps;
  kf["height_bounds"] = {m.keyframes.height_bounds.min_out, m.keyframes.height_bounds.max_out};
  kf["scale_bounds"] = {m.keyframes.scale_bounds.min_out, m.keyframes.scale_bounds.max_out};
  kf["cohorts"] = nlohmann::ordered_json::array();
  for (const auto& c : m.keyframe_cohorts) kf["cohorts"].push_back(detail::cohort_descriptor_to_json(c));
  j["keyframes"] = kf;
  return j;
}

/// Every input file the manifest points at, in a fixed order.
inline std::vector<std::string> manifest_inputs(const StudyManifest& m) {
  std::vector<std::string> out;
  for (const auto* c : m.analysis_cohorts())
    for (const auto& r : c->recordings) out.push_back(r.path);
  for (const auto& c : m.keyframe_cohorts)
    for (const auto& r : c.recordings) out.push_back(r.path);
  for (const auto& s : m.stats.scores) out.push_back(s.path);
  return out;
}

/// Reads, parses and validates a manifest file and checks that every
/// referenced input exists. All failures are manifest errors.
inline StudyManifest load_manifest(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    detail::manifest_error("", "cannot read manifest '" + path.string() + "'");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::manifest_error("", "manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  StudyManifest m = parse_manifest(j, path.parent_path());
  for (const auto& rel : manifest_inputs(m)) {
    const auto full = m.resolve(rel);
    if (!std::filesystem::is_regular_file(full)) detail::manifest_error("", "input file not found: '" + full.string() + "'");
  }
  return m;
}

/// Loads every recording of a cohort. Files are parsed independently, so
/// the result does not depend on `threads`.
inline Cohort load_cohort(const StudyManifest& m, const CohortDescriptor& d, unsigned threads = 1) {
  Cohort c;
  c.label = d.label;
  c.duration_s = d.duration_s;
  c.segments = m.segments;
  c.recordings.resize(d.recordings.size());
  parallel_for(d.recordings.size(), threads, [&](std::size_t i) {
    const auto& ref = d.recordings[i];
    const auto path = m.resolve(ref.path);
    try {
      c.recordings[i] = load_recording(path, d.channel, d.rate_hz, ref.subject);
    } catch (const MalformedRowError& e) {
      throw MalformedRowError(e.row(), path.string() + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.module(), e.code(), path.string() + ": " + e.what());
    }
  });
  return c;
}

/// 64-bit FNV-1a, as 16 lowercase hex digits.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char ch : bytes) {
      h_ ^= ch;
      h_ *= 0x100000001b3ull;
    }
  }
  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[15 - i] = digits[(h_ >> (4 * i)) & 0xf];
    return out;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

/// Hash of the effective configuration and the bytes of every input file.
inline std::string config_hash(const StudyManifest& m) {
  Fnv1a h;
  h.update(manifest_to_json(m).dump());
  for (const auto& rel : manifest_inputs(m)) {
    h.update(rel);
    h.update(std::string_view("\0", 1));
    h.update(read_file(m.resolve(rel)));
  }
  return h.hex();
}

}  // namespace synchrolab
