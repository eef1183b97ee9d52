#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "synchrolab/dataset.hpp"
#include "synchrolab/decompose.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/parallel.hpp"
#include "synchrolab/preprocess.hpp"

namespace synchrolab {

enum class Component { Tonic, Phasic, Raw };

constexpr std::string_view component_name(Component c) {
  switch (c) {
    case Component::Tonic: return "tonic";
    case Component::Phasic: return "phasic";
    case Component::Raw: return "raw";
  }
  return "tonic";
}

inline Component parse_component(std::string_view s) {
  if (s == "tonic") return Component::Tonic;
  if (s == "phasic") return Component::Phasic;
  if (s == "raw") return Component::Raw;
  throw Error("synchrony", Errc::InvalidArgument, "unknown component '" + std::string(s) + "'");
}

// One subject after cleaning and decomposition; `normalized` is the pipeline
// output, `tonic` and `phasic` its components.
struct ProcessedSubject {
  std::string subject_id;
  Series normalized;
  Series tonic;
  Series phasic;

  const Series& component(Component c) const {
    switch (c) {
      case Component::Tonic: return tonic;
      case Component::Phasic: return phasic;
      case Component::Raw: return normalized;
    }
    return tonic;
  }

  friend bool operator==(const ProcessedSubject&, const ProcessedSubject&) = default;
};

struct ProcessedCohort {
  std::string label;
  double rate_hz = 10.0;
  double duration_s = 260.0;
  SegmentSpec segments = SegmentSpec::concert_default();
  std::vector<ProcessedSubject> subjects;  // unflagged recordings, cohort order
  ValidationReport validation;

  friend bool operator==(const ProcessedCohort& a, const ProcessedCohort& b) {
    return a.label == b.label && a.rate_hz == b.rate_hz && a.duration_s == b.duration_s &&
           a.segments == b.segments && a.subjects == b.subjects;
  }
};

/// Validates, cleans, moves onto the analysis rate and decomposes every
/// recording of a cohort. Flagged
/// recordings are dropped unless keep_flagged is set. Recordings are processed
/// independently, so the result does not depend on `threads`.
inline ProcessedCohort process_cohort(const Cohort& cohort, const PreprocessConfig& pre, const DecomposeConfig& dec,
                                      bool keep_flagged = false, unsigned threads = 1) {
  ProcessedCohort out;
  out.label = cohort.label;
  out.duration_s = cohort.duration_s;
  out.segments = cohort.segments;
  out.validation = validate_cohort(cohort);

  std::vector<const Recording*> selected;
  for (std::size_t i = 0; i < cohort.recordings.size(); ++i)
    if (keep_flagged || !out.validation.recordings[i].any()) selected.push_back(&cohort.recordings[i]);
  if (selected.empty())
    throw Error("dataset", Errc::EmptyCohort, "cohort '" + cohort.label + "' has no usable recordings");
  const double native = selected.front()->sample_rate_hz;
  for (const auto* r : selected)
    if (r->sample_rate_hz != native)
      throw Error("dataset", Errc::InvalidArgument, "cohort '" + cohort.label + "' mixes sample rates");
  out.rate_hz = pre.analysis_hz > 0.0 ? pre.analysis_hz : native;

  out.subjects.resize(selected.size());
  parallel_for(selected.size(), threads, [&](std::size_t i) {
    const Recording clean = preprocess_pipeline(*selected[i], pre);
    Series samples = clean.samples;
    if (out.rate_hz != native) {
      // onto the analysis grid, n / native seconds long
      samples = resample(samples, native, out.rate_hz);
      const auto len = static_cast<std::size_t>(std::llround(clean.duration_s() * out.rate_hz));
      samples.resize(len, samples.back());
    }
    EdaComponents parts = tonic_phasic_split(samples, out.rate_hz, dec);
    out.subjects[i] = {clean.subject_id, std::move(samples), std::move(parts.tonic), std::move(parts.phasic)};
  });
  return out;
}

}  // namespace synchrolab
