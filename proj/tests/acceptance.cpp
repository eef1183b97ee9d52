// One PASS/FAIL line per acceptance criterion; exits 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "synchrolab/synchrolab.hpp"
#include "test_support.hpp"

using namespace synchrolab;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail.clear();
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) {
    if (pass) detail += (detail.empty() ? "" : "; ") + s;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

double memo_dtw(SeriesView x, SeriesView y) {
  const std::size_t n = x.size(), m = y.size();
  std::vector<double> memo(n * m, -1.0);
  std::function<double(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) -> double {
    double& slot = memo[i * m + j];
    if (slot >= 0.0) return slot;
    const double c = std::abs(x[i] - y[j]);
    if (i == 0 && j == 0) return slot = c;
    double best = std::numeric_limits<double>::infinity();
    if (i > 0 && j > 0) best = std::min(best, rec(i - 1, j - 1));
    if (j > 0) best = std::min(best, rec(i, j - 1));
    if (i > 0) best = std::min(best, rec(i - 1, j));
    return slot = c + best;
  };
  return rec(n - 1, m - 1);
}

stats::LongTable table_from_groups(const std::vector<std::string>& labels, const std::vector<Series>& groups) {
  stats::LongTable t;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t i = 0; i < groups[g].size(); ++i)
      t.rows.push_back({labels[g] + std::to_string(i), labels[g], groups[g][i]});
  return t;
}

Outcome dtw_oracle() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  const auto t0 = Clock::now();
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = testing::uniform_series(rng, len(rng));
    const auto y = testing::uniform_series(rng, len(rng));
    if (dtw_distance(x, y).raw != memo_dtw(x, y)) ++mismatches;
  }
  const double dt = seconds_since(t0);
  o.require(mismatches == 0, std::to_string(mismatches) + " of 1000 pairs differ");
  o.require(dt < 10.0, "runtime " + fmt(dt) + " s");
  o.note("1000 pairs exact, " + fmt(dt) + " s");
  return o;
}

Outcome dtw_properties() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> len(2, 30);
  for (int trial = 0; trial < 300; ++trial) {
    const auto x = testing::uniform_series(rng, len(rng));
    const auto y = testing::uniform_series(rng, len(rng));
    o.require(dtw_distance(x, x).raw == 0.0, "identity");
    o.require(dtw_distance(x, y).raw == dtw_distance(y, x).raw, "symmetry");
    const std::size_t diff = x.size() > y.size() ? x.size() - y.size() : y.size() - x.size();
    const double full = dtw_distance(x, y).raw;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t r = diff; r <= std::max(x.size(), y.size()); ++r) {
      DtwConfig cfg;
      cfg.band_radius = r;
      const double d = dtw_distance(x, y, cfg).raw;
      o.require(d <= previous && d >= full, "band monotonicity");
      previous = d;
    }
    o.require(previous == full, "wide band equals full DTW");
  }
  o.require(dtw_distance(Series{1, 2, 3}, Series{1, 2, 2, 3}).raw == 0.0, "warp example");
  o.note("identity, symmetry, band monotonicity over 300 pairs; [1,2,3] vs [1,2,2,3] = 0");
  return o;
}

Outcome pearson_checks() {
  Outcome o;
  o.require(close(pearson(Series{1, 2, 3}, Series{2, 4, 6}).r, 1.0, 1e-12), "r = 1 example");
  o.require(close(pearson(Series{1, 2, 3}, Series{3, 2, 1}).r, -1.0, 1e-12), "r = -1 example");
  o.require(close(pearson(Series{1, 2, 3, 4}, Series{1, 3, 2, 4}).r, 0.8, 1e-12), "r = 0.8 example");
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = testing::uniform_series(rng, 50);
    const auto y = testing::uniform_series(rng, 50);
    const double a = scale(rng), b = shift(rng);
    Series xa(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xa[i] = a * x[i] + b;
    o.require(close(pearson(xa, y).r, pearson(x, y).r, 1e-12), "affine invariance");
  }
  const auto base = testing::sine(2600, 10.0, 0.01);
  const auto other = testing::sine(2600, 10.0, 0.013);
  const auto res = group_synchrony(base, other, SegmentSpec{}, 10.0);
  o.require(res.back().df == 258, "overall df " + std::to_string(res.back().df));
  o.note("examples and affine invariance to 1e-12; 260 s at 1 Hz gives df 258");
  return o;
}

Outcome filter_response() {
  Outcome o;
  const double rate = 10.0;
  const PreprocessConfig cfg;
  auto analytic = [&](double f) {
    const double ratio = std::tan(std::numbers::pi * f / rate) / std::tan(std::numbers::pi * cfg.cutoff_hz / rate);
    return 1.0 / (1.0 + std::pow(ratio, 2 * cfg.filter_order));
  };
  auto steady_amplitude = [&](double f) {
    const auto y = butterworth_lowpass(testing::sine(6000, rate, f), rate, cfg);
    double peak = 0.0;
    for (std::size_t i = 1500; i + 1500 < y.size(); ++i) peak = std::max(peak, std::abs(y[i]));
    return peak;
  };
  const double pass = steady_amplitude(0.05);
  const double stop = steady_amplitude(2.0);
  o.require(pass >= 0.99, "0.05 Hz amplitude " + fmt(pass, 6));
  o.require(stop <= 0.01 * 1.1, "2 Hz amplitude " + fmt(stop, 6));
  o.require(std::abs(stop - analytic(2.0)) <= 0.1 * analytic(2.0), "2 Hz off the analytic response " + fmt(analytic(2.0), 6));
  o.require(std::abs(pass - analytic(0.05)) <= 1e-3, "0.05 Hz off the analytic response " + fmt(analytic(0.05), 6));
  o.note("0.05 Hz keeps " + fmt(pass, 6) + ", 2 Hz keeps " + fmt(stop, 4) + " (analytic " + fmt(analytic(2.0), 4) + ")");
  return o;
}

Outcome preprocess_invariants() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Recording rec;
    rec.sample_rate_hz = 10.0;
    rec.samples.resize(400 + trial * 10);
    double walk = 0.0;
    for (auto& v : rec.samples) v = (walk += g(rng) * 0.1);
    rec.samples[rec.samples.size() / 2] += 30.0;
    const auto out = preprocess_pipeline(rec, PreprocessConfig{});
    o.require(out.samples.size() == rec.samples.size(), "pipeline length");
    o.require(all_finite(out.samples), "NaN in output");
    o.require(*std::min_element(out.samples.begin(), out.samples.end()) == 0.0, "min not exactly 0");
    o.require(*std::max_element(out.samples.begin(), out.samples.end()) == 1.0, "max not exactly 1");
    o.require(butterworth_lowpass(rec.samples, 10.0, PreprocessConfig{}).size() == rec.samples.size(), "filter length");
    o.require(moving_average(rec.samples, 10.0, 1.0).size() == rec.samples.size(), "moving average length");
    const auto up = resample(rec.samples, 10.0, 30.0);
    o.require(up.size() == resampled_length(rec.samples.size(), 10.0, 30.0) &&
                  up.size() == 3 * (rec.samples.size() - 1) + 1,
              "resample length");
  }
  const Series spike{1, 2, 3, 100};
  const auto mask = detect_outliers(spike, 1.5);
  o.require(mask.flags() == std::vector<bool>{false, false, false, true}, "[1,2,3,100] mask");
  const auto repaired = interpolate_outliers(spike, mask);
  o.require(repaired == Series{1, 2, 3, 3}, "[1,2,3,100] repair");
  o.note("50 random recordings in [0,1] exactly; [1,2,3,100] flags index 3 and repairs it to 3");
  return o;
}

Outcome decomposition() {
  Outcome o;
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = testing::uniform_series(rng, 200 + 7 * trial);
    const auto c = tonic_phasic_split(x, 10.0);
    o.require(c.tonic.size() == x.size() && c.phasic.size() == x.size(), "component lengths");
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(c.tonic[i] + c.phasic[i] - x[i]));
    o.require(total_variation(c.tonic) <= total_variation(x), "tonic total variation exceeds input");
  }
  o.require(worst <= 1e-9, "reconstruction error " + fmt(worst));
  o.note("100 inputs, max reconstruction error " + fmt(worst) + ", TV(tonic) <= TV(x)");
  return o;
}

Outcome statistics_fixtures() {
  using namespace stats;
  Outcome o;
  const auto hand = oneway_anova(table_from_groups({"a", "b"}, {{1, 2}, {2, 3}}));
  o.require(close(hand.F, 2.0, 1e-9) && close(hand.partial_eta_sq, 0.5, 1e-9), "hand ANOVA");
  const auto h1 = p_adjust(Series{0.01, 0.04}, PAdjust::Holm);
  const auto h2 = p_adjust(Series{0.03, 0.04}, PAdjust::Holm);
  o.require(close(h1[0], 0.02, 1e-9) && close(h1[1], 0.04, 1e-9), "Holm example 1");
  o.require(close(h2[0], 0.06, 1e-9) && close(h2[1], 0.06, 1e-9), "Holm example 2");
  o.require(close(cohens_d(Series{1, 2, 3}, Series{2, 3, 4}), -1.0, 1e-9), "Cohen's d example");

  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> size(3, 25);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = testing::uniform_series(rng, size(rng));
    const auto b = testing::uniform_series(rng, size(rng), 0.1, 1.2);
    const double na = a.size(), nb = b.size();
    const double sp2 = ((na - 1) * sample_variance(a) + (nb - 1) * sample_variance(b)) / (na + nb - 2);
    const double t = (mean(a) - mean(b)) / std::sqrt(sp2 * (1 / na + 1 / nb));
    const auto res = tukey_hsd(table_from_groups({"a", "b"}, {a, b}));
    o.require(close(res.pairs.at(0).p_raw, dist::t_two_sided_p(t, na + nb - 2), 1e-9), "Tukey vs t-test");
  }

  for (const auto& c : testing::load_fixture("shapiro.json").at("cases")) {
    const auto r = shapiro_wilk(c.at("sample").get<Series>());
    o.require(close(r.W, c.at("W").get<double>(), 1e-6) && close(r.p, c.at("p").get<double>(), 1e-6),
              "Shapiro-Wilk fixture " + c.at("label").get<std::string>());
  }
  const auto tk = testing::load_fixture("tukey.json");
  const auto res = tukey_hsd(table_from_groups(tk.at("labels").get<std::vector<std::string>>(),
                                               tk.at("groups").get<std::vector<Series>>()));
  o.require(res.pairs.size() == tk.at("pairs").size(), "Tukey pair count");
  for (const auto& e : tk.at("pairs")) {
    const auto it = std::find_if(res.pairs.begin(), res.pairs.end(), [&](const PosthocPair& p) {
      return p.group_a == e.at("a").get<std::string>() && p.group_b == e.at("b").get<std::string>();
    });
    o.require(it != res.pairs.end() && close(it->p_raw, e.at("p").get<double>(), 1e-6), "Tukey fixture");
  }
  const auto rm = testing::load_fixture("rm_anova.json");
  for (const char* name : {"shifted", "small"}) {
    LongTable t;
    for (const auto& r : rm.at(name).at("rows"))
      t.rows.push_back({r.at("subject").get<std::string>(), r.at("condition").get<std::string>(), r.at("value").get<double>()});
    const auto r = rm_anova(t);
    o.require(close(r.F, rm.at(name).at("F").get<double>(), 1e-6 * std::max(1.0, r.F)) &&
                  close(r.p, rm.at(name).at("p").get<double>(), 1e-6),
              std::string("RM-ANOVA fixture ") + name);
  }
  o.note("hand ANOVA, Holm, Cohen's d, Tukey/t identity to 1e-9; Shapiro, Tukey, RM-ANOVA fixtures to 1e-6");
  return o;
}

Outcome art_reduction() {
  Outcome o;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> groups(2, 5), size(2, 12);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> labels;
    std::vector<Series> data;
    const int k = groups(rng);
    for (int g = 0; g < k; ++g) {
      labels.push_back("g" + std::to_string(g));
      // every third table has ties
      data.push_back(trial % 3 == 0 ? Series(size(rng), 0.0) : testing::uniform_series(rng, size(rng)));
      if (trial % 3 == 0)
        for (auto& v : data.back()) v = coarse(rng);
    }
    const auto t = table_from_groups(labels, data);
    const auto art = stats::art_transform(t);
    Series raw;
    for (const auto& r : t.rows) raw.push_back(r.value);
    const auto ranks = stats::midranks(raw);
    for (std::size_t i = 0; i < ranks.size(); ++i) o.require(art.rows[i].value == ranks[i], "ART rank differs");
  }
  o.note("100 tables, ranks identical");
  return o;
}

struct StudyRun {
  std::vector<ProcessedCohort> processed;
  std::vector<ConditionSynchrony> synchrony;
};

StudyRun run_study(std::uint64_t seed) {
  const auto design = reference_study_design(seed);
  StudyRun run;
  for (const auto& c : gen_study(design, 1)) run.processed.push_back(process_cohort(c, PreprocessConfig{}, DecomposeConfig{}));
  run.synchrony = compute_group_synchrony(run.processed, Component::Tonic, design.segments, GroupSynchronyOptions{});
  return run;
}

Outcome end_to_end(StudyRun& first) {
  Outcome o;
  const auto t0 = Clock::now();
  int dtw_ordered = 0, r_ordered = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto run = run_study(seed);
    const auto& s = run.synchrony;
    if (s.size() != 3 || s[0].condition != "low" || s[1].condition != "med" || s[2].condition != "high") {
      o.require(false, "unexpected conditions");
      break;
    }
    const auto& lo = s[0].results.back();
    const auto& md = s[1].results.back();
    const auto& hi = s[2].results.back();
    if (lo.dtw_normalized < md.dtw_normalized && md.dtw_normalized < hi.dtw_normalized) ++dtw_ordered;
    if (lo.r > md.r && md.r > hi.r) ++r_ordered;
    if (seed == 1) first = std::move(run);
  }
  const double dt = seconds_since(t0);
  o.require(dtw_ordered >= 95, "DTW low < med < high in " + std::to_string(dtw_ordered) + "/100");
  o.require(r_ordered >= 95, "r low > med > high in " + std::to_string(r_ordered) + "/100");
  o.require(dt < 300.0, "runtime " + fmt(dt) + " s");
  o.note("DTW ordered in " + std::to_string(dtw_ordered) + "/100, r ordered in " + std::to_string(r_ordered) +
         "/100, " + fmt(dt) + " s");
  return o;
}

Outcome pair_counts(const StudyRun& run) {
  Outcome o;
  const auto& ref = run.processed.at(0);
  DtwConfig cfg;
  cfg.band_radius = 10;
  for (std::size_t i = 1; i < run.processed.size(); ++i) {
    const auto& probe = run.processed[i];
    const auto table = pairwise_dtw(ref, probe, Component::Tonic, ref.segments, cfg, 1);
    std::map<std::string, std::size_t> per_segment;
    for (const auto& r : table.rows) ++per_segment[r.segment];
    const std::size_t expected = ref.subjects.size() * probe.subjects.size();
    o.require(per_segment.size() == 4, "segment count");
    for (const auto& [seg, n] : per_segment)
      o.require(n == expected, probe.label + " " + seg + " has " + std::to_string(n) + " rows");
    o.note(probe.label + " " + std::to_string(probe.subjects.size()) + "x" + std::to_string(ref.subjects.size()) +
           " -> " + std::to_string(per_segment.begin()->second) + " per segment");
  }
  return o;
}

Outcome performance(const StudyRun& run) {
  Outcome o;
  const auto& ref = run.processed.at(0);
  const auto& probe = run.processed.at(1);
  const SegmentSpec none;
  auto t0 = Clock::now();
  const auto one = pairwise_dtw(ref, probe, Component::Tonic, none, DtwConfig{}, 1);
  const double dt1 = seconds_since(t0);
  t0 = Clock::now();
  const auto eight = pairwise_dtw(ref, probe, Component::Tonic, none, DtwConfig{}, 8);
  const double dt8 = seconds_since(t0);
  o.require(one.rows.size() == 840, "pair count " + std::to_string(one.rows.size()));
  o.require(ref.subjects.front().tonic.size() == 2600, "series length");
  bool identical = one.rows.size() == eight.rows.size();
  for (std::size_t i = 0; identical && i < one.rows.size(); ++i)
    identical = one.rows[i] == eight.rows[i] &&
                std::memcmp(&one.rows[i].dtw_raw, &eight.rows[i].dtw_raw, sizeof(double)) == 0 &&
                std::memcmp(&one.rows[i].dtw_norm, &eight.rows[i].dtw_norm, sizeof(double)) == 0;
  o.require(identical, "1 vs 8 threads differ");
  o.require(dt8 < 120.0, "8 threads took " + fmt(dt8) + " s");
  o.note("840 full-band pairs of 2600: " + fmt(dt1) + " s at 1 thread, " + fmt(dt8) + " s at 8 threads on " +
         std::to_string(std::thread::hardware_concurrency()) + " core(s); bitwise identical");
  return o;
}

Outcome keyframe_export() {
  Outcome o;
  // a 260 s span at 10 Hz: samples at 0, 100, ..., 260000 ms
  std::string csv = "timestamp_ms,value\n";
  for (int i = 0; i <= 2600; ++i)
    csv += std::to_string(i * 100) + "," + std::to_string(2.0 + std::sin(i / 90.0) + 0.2 * std::sin(i / 7.0)) + "\n";
  Cohort c;
  c.label = "kf";
  c.recordings.push_back(parse_recording(csv, ChannelKind::EDA, 10.0, "S01"));
  c.recordings.back().subject_id = "S01";
  c.recordings.push_back(c.recordings.back());
  c.recordings.back().subject_id = "S02";
  KeyframeConfig cfg;
  cfg.height_bounds = {0.5, 2.5};
  const auto tracks = build_tracks(c, cfg);
  for (const auto& t : tracks) {
    o.require(t.values.size() == 7801, "track has " + std::to_string(t.values.size()) + " frames");
    for (double v : t.values) o.require(v >= 0.5 && v <= 2.5, "value out of bounds");
  }
  std::ostringstream first, second;
  export_tracks(tracks, first);
  export_tracks(build_tracks(c, cfg), second);
  std::ostringstream again;
  export_tracks(parse_tracks(first.str()), again);
  o.require(first.str() == second.str(), "re-export differs");
  o.require(first.str() == again.str(), "parse and export round-trip differs");
  o.note("2 tracks x 7801 frames within [0.5, 2.5]; re-export byte-identical");
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s  %-26s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  StudyRun first;
  report("dtw-oracle", dtw_oracle);
  report("dtw-properties", dtw_properties);
  report("pearson", pearson_checks);
  report("filter-response", filter_response);
  report("preprocess-invariants", preprocess_invariants);
  report("decomposition", decomposition);
  report("statistics-fixtures", statistics_fixtures);
  report("art-reduction", art_reduction);
  report("end-to-end-ordering", [&] { return end_to_end(first); });
  report("pair-counts", [&] { return pair_counts(first); });
  report("performance", [&] { return performance(first); });
  report("keyframe-export", keyframe_export);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
