#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synchrolab/dataset.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/manifest.hpp"
#include "synchrolab/numeric.hpp"
#include "synchrolab/processing.hpp"
#include "synchrolab/stats.hpp"
#include "synchrolab/synchrony.hpp"
#include "synchrolab/synthgen.hpp"
#include "synchrolab/vizmap.hpp"

#ifndef SYNCHROLAB_VERSION
#define SYNCHROLAB_VERSION "0.0.0"
#endif

namespace synchrolab {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = SYNCHROLAB_VERSION;

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Files

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("pipeline", Errc::Io, "cannot write '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("pipeline", Errc::Io, "cannot write '" + path.string() + "': " + ec.message());
}

inline void write_json(const std::filesystem::path& path, const ojson& j) { write_text(path, j.dump(2) + "\n"); }

inline std::optional<ojson> read_json_artifact(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  try {
    return ojson::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("pipeline", Errc::Io, "corrupt artifact '" + path.string() + "': " + e.what());
  }
}

/// Long-format score table: header `subject,condition,value`.
inline stats::LongTable parse_score_csv(std::string_view text) {
  stats::LongTable t;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = detail::trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    if (line_no++ == 0 && line == "subject,condition,value") continue;
    const auto f = detail::split_csv_line(line);
    stats::LongRow row;
    if (f.size() != 3 || f[0].empty() || f[1].empty() || !detail::parse_double(f[2], row.value))
      throw MalformedRowError(t.rows.size(), "malformed score row " + std::to_string(t.rows.size()));
    row.subject_id = f[0];
    row.group_label = f[1];
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw Error("dataset", Errc::EmptyFile, "score table is empty");
  return t;
}

// ---------------------------------------------------------------------------
// Stage documents

inline ojson validation_to_json(const std::vector<Cohort>& cohorts) {
  ojson out = ojson::array();
  for (const auto& c : cohorts) {
    const auto report = validate_cohort(c);
    ojson recs = ojson::array();
    for (std::size_t i = 0; i < c.recordings.size(); ++i) {
      const auto& f = report.recordings[i];
      recs.push_back({{"subject", f.subject_id},
                      {"samples", c.recordings[i].samples.size()},
                      {"length_mismatch", f.length_mismatch},
                      {"flat_line", f.flat_line},
                      {"non_finite", f.non_finite}});
    }
    out.push_back({{"label", c.label},
                   {"n_recordings", c.recordings.size()},
                   {"n_flagged", report.flagged_count()},
                   {"recordings", recs}});
  }
  return out;
}

inline ojson processed_to_json(const std::vector<ProcessedCohort>& cohorts) {
  ojson out = ojson::array();
  for (const auto& c : cohorts) {
    ojson subjects = ojson::array();
    for (const auto& s : c.subjects)
      subjects.push_back({{"subject", s.subject_id}, {"normalized", s.normalized}, {"tonic", s.tonic}, {"phasic", s.phasic}});
    out.push_back({{"label", c.label}, {"rate_hz", c.rate_hz}, {"duration_s", c.duration_s}, {"subjects", subjects}});
  }
  return out;
}

inline std::vector<ProcessedCohort> processed_from_json(const ojson& j, const SegmentSpec& segments) {
  std::vector<ProcessedCohort> out;
  try {
    for (const auto& cj : j) {
      ProcessedCohort c;
      c.label = cj.at("label").get<std::string>();
      c.rate_hz = cj.at("rate_hz").get<double>();
      c.duration_s = cj.at("duration_s").get<double>();
      c.segments = segments;
      for (const auto& sj : cj.at("subjects"))
        c.subjects.push_back({sj.at("subject").get<std::string>(), sj.at("normalized").get<Series>(),
                              sj.at("tonic").get<Series>(), sj.at("phasic").get<Series>()});
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("pipeline", Errc::Io, std::string("malformed preprocessed artifact: ") + e.what());
  }
  return out;
}

struct ConditionSynchrony {
  std::string condition;
  std::string reference;
  std::size_t n_reference = 0;
  std::size_t n_probe = 0;
  std::vector<SynchronyResult> results;
};

/// Group-average synchrony of every probe cohort against the reference
/// (the first cohort).
inline std::vector<ConditionSynchrony> compute_group_synchrony(const std::vector<ProcessedCohort>& cohorts,
                                                               Component component, const SegmentSpec& segments,
                                                               const GroupSynchronyOptions& options) {
  const auto& ref = cohorts.front();
  const Series ref_avg = group_average(ref, component);
  std::vector<ConditionSynchrony> out;
  for (std::size_t i = 1; i < cohorts.size(); ++i) {
    const Series probe_avg = group_average(cohorts[i], component);
    out.push_back({cohorts[i].label, ref.label, ref.subjects.size(), cohorts[i].subjects.size(),
                   group_synchrony(ref_avg, probe_avg, segments, ref.rate_hz, options)});
  }
  return out;
}

inline ojson synchrony_to_json(const std::vector<ConditionSynchrony>& conds) {
  ojson out = ojson::array();
  for (const auto& c : conds) {
    ojson rows = ojson::array();
    for (const auto& r : c.results)
      rows.push_back({{"segment", r.segment_label},
                      {"r", r.r},
                      {"p", r.p},
                      {"df", r.df},
                      {"dtw_raw", r.dtw_raw},
                      {"dtw_normalized", r.dtw_normalized},
                      {"n_x", r.n_x},
                      {"n_y", r.n_y}});
    out.push_back({{"condition", c.condition},
                   {"reference", c.reference},
                   {"n_reference", c.n_reference},
                   {"n_probe", c.n_probe},
                   {"results", rows}});
  }
  return out;
}

namespace detail {

inline ojson describe(Series v) {
  std::sort(v.begin(), v.end());
  return {{"mean", mean(v)},
          {"sd", v.size() > 1 ? std::sqrt(sample_variance(v)) : 0.0},
          {"median", quantile_sorted(v, 0.5)},
          {"min", v.front()},
          {"max", v.back()}};
}

inline std::vector<std::string> segment_labels(const PairTable& t) {
  std::vector<std::string> labels;
  for (const auto& r : t.rows)
    if (std::find(labels.begin(), labels.end(), r.segment) == labels.end()) labels.push_back(r.segment);
  return labels;
}

inline ojson anova_to_json(const stats::AnovaResult& a) {
  return {{"F", a.F},
          {"df_between", a.df_between},
          {"df_within", a.df_within},
          {"p", a.p},
          {"partial_eta_sq", a.partial_eta_sq},
          {"eta_ci_90", {a.eta_ci_90.first, a.eta_ci_90.second}}};
}

}  // namespace detail

/// Per-condition, per-segment summaries of the pair tables.
inline ojson pair_summary_to_json(const std::vector<PairTable>& tables) {
  ojson out = ojson::array();
  for (const auto& t : tables) {
    for (const auto& seg : detail::segment_labels(t)) {
      Series raw, norm;
      std::string condition, reference_n;
      std::set<std::string> refs, probes;
      for (const auto& r : t.rows) {
        if (r.segment != seg) continue;
        condition = r.condition;
        raw.push_back(r.dtw_raw);
        norm.push_back(r.dtw_norm);
        refs.insert(r.reference_id);
        probes.insert(r.probe_id);
      }
      out.push_back({{"condition", condition},
                     {"segment", seg},
                     {"rows", raw.size()},
                     {"n_probe", probes.size()},
                     {"n_reference", refs.size()},
                     {"dtw_raw", detail::describe(raw)},
                     {"dtw_norm", detail::describe(norm)}});
    }
  }
  return out;
}

/// Between-condition tests on pair-level DTW for every segment: Shapiro-Wilk
/// per condition, ART one-way ANOVA and Tukey HSD on the aligned ranks.
/// Repeated-measures ANOVA runs on any score tables.
inline ojson compute_statistics(const std::vector<PairTable>& tables, const StudyManifest& m) {
  ojson normality = ojson::array(), anova = ojson::array(), posthoc = ojson::array(), rm = ojson::array();
  const bool use_norm = m.stats.measure == PairMeasure::DtwNorm;
  const auto labels = tables.empty() ? std::vector<std::string>{} : detail::segment_labels(tables.front());
  for (const auto& seg : labels) {
    stats::LongTable table;
    for (const auto& t : tables)
      for (const auto& r : t.rows)
        if (r.segment == seg)
          table.rows.push_back({r.probe_id + "|" + r.reference_id, r.condition, use_norm ? r.dtw_norm : r.dtw_raw});
    for (const auto& t : tables) {
      Series vals;
      std::string cond;
      for (const auto& r : t.rows)
        if (r.segment == seg) {
          vals.push_back(use_norm ? r.dtw_norm : r.dtw_raw);
          cond = r.condition;
        }
      ojson entry{{"segment", seg}, {"condition", cond}, {"n", vals.size()}};
      try {
        const auto sw = stats::shapiro_wilk(vals);
        entry["W"] = sw.W;
        entry["p"] = sw.p;
      } catch (const Error& e) {
        entry["W"] = nullptr;
        entry["p"] = nullptr;
        entry["error"] = e.qualified_code();
      }
      normality.push_back(entry);
    }
    if (tables.size() < 2) continue;

    const auto ranked = stats::art_transform(table);
    ojson a = detail::anova_to_json(stats::oneway_anova(ranked));
    ojson means = ojson::object(), rank_means = ojson::object();
    for (const auto& [label, vals] : stats::split_groups(table)) means[label] = mean(vals);
    for (const auto& [label, vals] : stats::split_groups(ranked)) rank_means[label] = mean(vals);
    ojson entry{{"segment", seg}, {"transform", "art"}, {"measure", pair_measure_name(m.stats.measure)}};
    entry.update(a);
    entry["group_means"] = means;
    entry["rank_means"] = rank_means;
    anova.push_back(entry);

    const auto tk = stats::tukey_hsd(ranked, m.stats.p_adjust);
    for (const auto& p : tk.pairs)
      posthoc.push_back({{"segment", seg},
                         {"method", "tukey_hsd"},
                         {"p_adjust", stats::p_adjust_name(tk.method)},
                         {"group_a", p.group_a},
                         {"group_b", p.group_b},
                         {"mean_diff", p.mean_diff},
                         {"p_raw", p.p_raw},
                         {"p_adjusted", p.p_adjusted},
                         {"cohens_d", p.cohens_d}});
  }
  for (const auto& s : m.stats.scores) {
    const auto path = m.resolve(s.path);
    stats::LongTable t;
    try {
      t = parse_score_csv(read_file(path));
    } catch (const Error& e) {
      throw Error(e.module(), e.code(), path.string() + ": " + e.what());
    }
    ojson entry{{"label", s.label}};
    entry.update(detail::anova_to_json(stats::rm_anova(t)));
    rm.push_back(entry);
  }
  return {{"normality", normality}, {"anova", anova}, {"posthoc", posthoc}, {"rm_anova", rm}};
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Staged analysis

inline std::string pairs_file_name(const std::string& condition) { return "pairs_" + condition + ".csv"; }

/// One analysis of a manifest. Stage results are computed on first use and
/// written to `out_dir`. With `reuse_artifacts`, an upstream stage is read
/// back from `out_dir` instead when its artifact carries the same config hash.
class Analysis {
 public:
  Analysis(StudyManifest manifest, std::filesystem::path out_dir, unsigned threads, bool reuse_artifacts)
      : m_(std::move(manifest)), out_(std::move(out_dir)), threads_(std::max(1u, threads)), reuse_(reuse_artifacts) {
    hash_ = config_hash(m_);
  }

  const StudyManifest& manifest() const { return m_; }
  const std::string& hash() const { return hash_; }
  const std::filesystem::path& out_dir() const { return out_; }

  // ingest
  const std::vector<Cohort>& cohorts() {
    if (!cohorts_) {
      std::vector<Cohort> cs;
      for (const auto* d : m_.analysis_cohorts()) cs.push_back(load_cohort(m_, *d, threads_));
      cohorts_ = std::move(cs);
    }
    return *cohorts_;
  }

  const ojson& validation(bool force = false) {
    if (!validation_ && !force) validation_ = cached("validation.json");
    if (!validation_) {
      validation_ = validation_to_json(cohorts());
      write_json(out_ / "validation.json", stamped(*validation_));
    }
    return *validation_;
  }

  // preprocess + decompose
  const std::vector<ProcessedCohort>& processed(bool force = false) {
    if (!processed_ && !force) {
      if (auto j = cached("preprocessed.json")) processed_ = processed_from_json(*j, m_.segments);
    }
    if (!processed_) {
      validation(false);
      std::vector<ProcessedCohort> pcs;
      for (const auto& c : cohorts()) pcs.push_back(process_cohort(c, m_.preprocess, m_.decompose, m_.keep_flagged, threads_));
      processed_ = std::move(pcs);
      write_json(out_ / "preprocessed.json", stamped(processed_to_json(*processed_)));
    }
    return *processed_;
  }

  const ojson& synchrony(bool force = false) {
    if (!synchrony_ && !force) synchrony_ = cached("group_synchrony.json");
    if (!synchrony_) {
      GroupSynchronyOptions opt;
      opt.dtw = m_.dtw;
      opt.correlation_hz = m_.stats.correlation_hz;
      ojson j{{"component", component_name(m_.component)},
              {"conditions", synchrony_to_json(compute_group_synchrony(processed(), m_.component, m_.segments, opt))}};
      synchrony_ = j;
      write_json(out_ / "group_synchrony.json", stamped(j));
    }
    return *synchrony_;
  }

  const std::vector<PairTable>& pairs(bool force = false) {
    if (!pairs_ && !force) {
      if (auto idx = cached("pairs_index.json")) {
        std::vector<PairTable> ts;
        for (const auto& p : m_.probes) {
          const auto path = out_ / pairs_file_name(p.label);
          if (!std::filesystem::is_regular_file(path)) break;
          ts.push_back(parse_pair_table_csv(read_file(path)));
        }
        if (ts.size() == m_.probes.size()) pairs_ = std::move(ts);
      }
    }
    if (!pairs_) {
      const auto& pcs = processed();
      std::vector<PairTable> ts;
      ojson files = ojson::array();
      for (std::size_t i = 1; i < pcs.size(); ++i) {
        ts.push_back(pairwise_dtw(pcs.front(), pcs[i], m_.component, m_.segments, m_.dtw, threads_));
        write_text(out_ / pairs_file_name(pcs[i].label), format_pair_table_csv(ts.back()));
        files.push_back({{"condition", pcs[i].label}, {"file", pairs_file_name(pcs[i].label)}, {"rows", ts.back().rows.size()}});
      }
      pairs_ = std::move(ts);
      write_json(out_ / "pairs_index.json", stamped(ojson{{"component", component_name(m_.component)}, {"tables", files}}));
    }
    return *pairs_;
  }

  const ojson& statistics(bool force = false) {
    if (!stats_ && !force) stats_ = cached("stats.json");
    if (!stats_) {
      stats_ = compute_statistics(pairs(), m_);
      write_json(out_ / "stats.json", stamped(*stats_));
    }
    return *stats_;
  }

  /// Every analysis cohort plus any keyframe-only cohorts, as tracks.
  std::vector<KeyframeTrack> keyframes() {
    std::vector<KeyframeTrack> tracks;
    auto append = [&](const Cohort& c) {
      auto t = build_tracks(c, m_.keyframes, m_.preprocess);
      tracks.insert(tracks.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
    };
    for (const auto& c : cohorts()) append(c);
    for (const auto& d : m_.keyframe_cohorts) append(load_cohort(m_, d, threads_));
    return tracks;
  }

  void export_keyframes() {
    std::ostringstream ss;
    export_tracks(keyframes(), ss);
    write_text(out_ / "keyframes.ndjson", ss.str());
  }

  /// Assembles the report from the stage results. Only `generated_at`
  /// depends on the wall clock.
  ojson report(const std::string& generated_at) {
    ojson r;
    r["schema_version"] = kReportSchemaVersion;
    r["tool"] = {{"name", "synchrolab"}, {"version", kToolVersion}};
    r["manifest"] = manifest_to_json(m_);
    r["validation"] = validation();
    r["synchrony"] = synchrony();
    r["pairs"] = pair_summary_to_json(pairs());
    const auto& st = statistics();
    for (const char* key : {"normality", "anova", "posthoc", "rm_anova"}) r[key] = st.at(key);
    r["provenance"] = {{"config_hash", hash_}, {"tool_version", kToolVersion}, {"generated_at", generated_at}};
    return r;
  }

  ojson write_report(const std::string& generated_at) {
    ojson r = report(generated_at);
    write_json(out_ / "report.json", r);
    return r;
  }

 private:
  ojson stamped(const ojson& body) const {
    ojson j{{"config_hash", hash_}};
    if (body.is_object())
      j.update(body);
    else
      j["data"] = body;
    return j;
  }

  std::optional<ojson> cached(const char* name) const {
    if (!reuse_) return std::nullopt;
    auto j = read_json_artifact(out_ / name);
    if (!j || !j->is_object() || j->value("config_hash", std::string{}) != hash_) return std::nullopt;
    if (j->contains("data")) return j->at("data");
    j->erase("config_hash");
    return j;
  }

  StudyManifest m_;
  std::filesystem::path out_;
  unsigned threads_;
  bool reuse_;
  std::string hash_;
  std::optional<std::vector<Cohort>> cohorts_;
  std::optional<ojson> validation_;
  std::optional<std::vector<ProcessedCohort>> processed_;
  std::optional<ojson> synchrony_;
  std::optional<std::vector<PairTable>> pairs_;
  std::optional<ojson> stats_;
};

/// Fresh end-to-end run: every stage recomputed, all artifacts and the
/// report written to `out_dir`.
inline ojson run_full_analysis(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir,
                               unsigned threads = 1, const std::string& generated_at = utc_timestamp()) {
  Analysis a(load_manifest(manifest_path), out_dir, threads, false);
  a.validation();
  a.processed();
  a.synchrony();
  a.pairs();
  a.statistics();
  a.export_keyframes();
  return a.write_report(generated_at);
}

// ---------------------------------------------------------------------------
// Synthetic studies

struct SynthCohortSpec {
  std::string label;
  int n_subjects = 10;
  double noise_sigma = 0.1;
  double lag_max_s = 0.0;
  double gain_lo = 1.0;
  double gain_hi = 1.0;
};

struct SynthStudyConfig {
  std::uint64_t seed = 1;
  double duration_s = 260.0;
  double rate_hz = 10.0;
  BaseProfile base_profile = BaseProfile::ConcertLike;
  Series custom_profile;
  SegmentSpec segments = SegmentSpec::concert_default();
  SynthCohortSpec reference;
  std::vector<SynthCohortSpec> probes;
};

/// 40 reference subjects against three probe cohorts of 21, 20 and 21 at
/// increasing noise.
inline SynthStudyConfig reference_study_design(std::uint64_t seed = 1) {
  SynthStudyConfig cfg;
  cfg.seed = seed;
  cfg.reference = {"reference", 40, 0.1, 1.0, 0.8, 1.2};
  cfg.probes = {{"low", 21, 0.1, 1.0, 0.8, 1.2}, {"med", 20, 0.25, 1.0, 0.8, 1.2}, {"high", 21, 0.5, 1.0, 0.8, 1.2}};
  return cfg;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline SynthConfig synth_cohort_config(const SynthStudyConfig& study, const SynthCohortSpec& spec, std::size_t index) {
  SynthConfig c;
  c.label = spec.label;
  c.id_prefix = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(spec.label.front()))));
  c.n_subjects = spec.n_subjects;
  c.duration_s = study.duration_s;
  c.rate_hz = study.rate_hz;
  c.base_profile = study.base_profile;
  c.custom_profile = study.custom_profile;
  c.noise_sigma = spec.noise_sigma;
  c.lag_max_s = spec.lag_max_s;
  c.gain_lo = spec.gain_lo;
  c.gain_hi = spec.gain_hi;
  c.seed = splitmix64(study.seed ^ splitmix64(index));
  return c;
}

/// Reference cohort first, then probes.
inline std::vector<Cohort> gen_study(const SynthStudyConfig& study, unsigned threads = 1) {
  std::vector<Cohort> out;
  out.push_back(gen_cohort(synth_cohort_config(study, study.reference, 0), threads));
  for (std::size_t i = 0; i < study.probes.size(); ++i)
    out.push_back(gen_cohort(synth_cohort_config(study, study.probes[i], i + 1), threads));
  for (auto& c : out) c.segments = study.segments;
  return out;
}

inline SynthStudyConfig parse_synth_config(const nlohmann::json& j) {
  using detail::get_or;
  SynthStudyConfig cfg = reference_study_design();
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "synth");
  cfg.duration_s = get_or<double>(j, "duration_s", cfg.duration_s, "synth");
  cfg.rate_hz = get_or<double>(j, "rate_hz", cfg.rate_hz, "synth");
  try {
    cfg.base_profile = parse_base_profile(get_or<std::string>(j, "base_profile", "concert_like", "synth"));
  } catch (const Error& e) {
    detail::manifest_error("synth.base_profile", e.what());
  }
  cfg.custom_profile = get_or<Series>(j, "custom_profile", {}, "synth");
  auto parse_spec = [](const nlohmann::json& s, const std::string& where) {
    SynthCohortSpec spec;
    spec.label = get_or<std::string>(s, "label", "", where);
    if (!detail::safe_label(spec.label)) detail::manifest_error(where + ".label", "invalid label");
    spec.n_subjects = get_or<int>(s, "n_subjects", spec.n_subjects, where);
    spec.noise_sigma = get_or<double>(s, "noise_sigma", spec.noise_sigma, where);
    spec.lag_max_s = get_or<double>(s, "lag_max_s", spec.lag_max_s, where);
    const auto gain = get_or<std::vector<double>>(s, "subject_gain_range", {1.0, 1.0}, where);
    if (gain.size() != 2) detail::manifest_error(where + ".subject_gain_range", "must be [lo, hi]");
    spec.gain_lo = gain[0];
    spec.gain_hi = gain[1];
    if (spec.n_subjects < 1) detail::manifest_error(where + ".n_subjects", "must be positive");
    return spec;
  };
  if (j.contains("reference")) cfg.reference = parse_spec(j.at("reference"), "synth.reference");
  if (j.contains("probes")) {
    cfg.probes.clear();
    for (std::size_t i = 0; i < j.at("probes").size(); ++i)
      cfg.probes.push_back(parse_spec(j.at("probes").at(i), "synth.probes[" + std::to_string(i) + "]"));
  }
  if (j.contains("segments")) {
    nlohmann::json probe{{"reference", {{"label", "x"}, {"duration_s", cfg.duration_s}, {"recordings", {{{"subject", "s"}, {"path", "p"}}}}}},
                         {"probes", {{{"label", "y"}, {"duration_s", cfg.duration_s}, {"recordings", {{{"subject", "s"}, {"path", "p"}}}}}}},
                         {"segments", j.at("segments")}};
    cfg.segments = parse_manifest(probe, {}).segments;
  }
  return cfg;
}

/// Writes every synthetic cohort as Recording CSVs under `out_dir/<label>/`
/// and a manifest referencing them; returns the manifest path.
inline std::filesystem::path write_synth_study(const SynthStudyConfig& study, const std::filesystem::path& out_dir,
                                               unsigned threads = 1, const nlohmann::json& analysis = {}) {
  const auto cohorts = gen_study(study, threads);
  auto descriptor = [&](const Cohort& c) {
    ojson d{{"label", c.label}, {"channel", "EDA"}, {"rate_hz", study.rate_hz}, {"duration_s", study.duration_s}};
    d["recordings"] = ojson::array();
    for (const auto& r : c.recordings) {
      const std::string rel = c.label + "/" + r.subject_id + ".csv";
      write_text(out_dir / rel, format_recording_csv(r));
      d["recordings"].push_back({{"subject", r.subject_id}, {"path", rel}});
    }
    return d;
  };
  ojson m;
  m["schema_version"] = kManifestSchemaVersion;
  m["reference"] = descriptor(cohorts.front());
  m["probes"] = ojson::array();
  for (std::size_t i = 1; i < cohorts.size(); ++i) m["probes"].push_back(descriptor(cohorts[i]));
  m["segments"] = ojson::array();
  for (const auto& s : study.segments.segments())
    m["segments"].push_back({{"label", s.label}, {"start_s", s.start_s}, {"end_s", s.end_s}});
  for (const char* key : {"preprocess", "dtw", "stats", "keyframes"})
    if (analysis.is_object() && analysis.contains(key)) m[key] = analysis.at(key);
  const auto path = out_dir / "manifest.json";
  write_json(path, m);
  return path;
}

}  // namespace synchrolab
