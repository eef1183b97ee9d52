#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "synchrolab/synchrolab.hpp"
#include "test_support.hpp"

using namespace synchrolab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("synchrolab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SynthStudyConfig small_study(std::uint64_t seed) {
  SynthStudyConfig cfg;
  cfg.seed = seed;
  cfg.duration_s = 40.0;
  cfg.segments = SegmentSpec({{"early", 0.0, 20.0}, {"late", 20.0, 40.0}});
  cfg.reference = {"reference", 4, 0.1, 0.5, 0.9, 1.1};
  cfg.probes = {{"calm", 3, 0.05, 0.5, 0.9, 1.1}, {"noisy", 3, 0.4, 0.5, 0.9, 1.1}};
  return cfg;
}

nlohmann::json minimal_manifest() {
  return nlohmann::json::parse(R"({
    "reference": {"label": "ref", "recordings": [{"subject": "a", "path": "a.csv"}]},
    "probes": [{"label": "vr", "recordings": [{"subject": "b", "path": "b.csv"}]}]
  })");
}

}  // namespace

TEST_CASE("manifest defaults and echo", "[manifest]") {
  const auto m = parse_manifest(minimal_manifest(), "/data");
  CHECK(m.reference.rate_hz == 10.0);
  CHECK(m.reference.duration_s == 260.0);
  CHECK(m.segments == SegmentSpec::concert_default());
  CHECK(m.component == Component::Tonic);
  CHECK(m.stats.p_adjust == stats::PAdjust::Holm);
  CHECK_FALSE(m.dtw.band_radius.has_value());
  CHECK(m.resolve("a.csv") == fs::path("/data/a.csv"));

  const auto echo = manifest_to_json(m);
  CHECK(echo.at("schema_version") == 1);
  const auto again = parse_manifest(nlohmann::json::parse(echo.dump()), "/data");
  CHECK(manifest_to_json(again).dump() == echo.dump());
}

TEST_CASE("manifest overrides", "[manifest]") {
  auto j = minimal_manifest();
  j["segments"] = {{{"label", "a"}, {"start_s", 0}, {"end_s", 30}}};
  j["preprocess"] = {{"cutoff_hz", 0.4}, {"decompose", {{"method", "median_baseline"}}}};
  j["dtw"] = {{"band_radius", 12}, {"local_cost", "squared_diff"}, {"component", "phasic"}};
  j["stats"] = {{"p_adjust", "fdr_bh"}};
  const auto m = parse_manifest(j, ".");
  CHECK(m.segments.size() == 1);
  CHECK(m.preprocess.cutoff_hz == 0.4);
  CHECK(m.decompose.method == DecomposeMethod::MedianBaseline);
  CHECK(m.dtw.band_radius == std::optional<std::size_t>(12));
  CHECK(m.dtw.local_cost == LocalCost::SquaredDiff);
  CHECK(m.component == Component::Phasic);
  CHECK(m.stats.p_adjust == stats::PAdjust::FdrBh);
}

TEST_CASE("manifest errors are manifest-coded", "[manifest]") {
  auto expect_manifest_error = [](nlohmann::json j) {
    try {
      parse_manifest(j, ".");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::Manifest);
      CHECK(exit_code(e.code()) == 2);
    }
  };
  auto j = minimal_manifest();
  j.erase("probes");
  expect_manifest_error(j);
  j = minimal_manifest();
  j["probes"][0]["label"] = "ref";
  expect_manifest_error(j);
  j = minimal_manifest();
  j["schema_version"] = 99;
  expect_manifest_error(j);
  j = minimal_manifest();
  j["preprocess"] = {{"cutoff_hz", 7.0}};
  expect_manifest_error(j);
  j = minimal_manifest();
  j["segments"] = {{{"label", "late"}, {"start_s", 200}, {"end_s", 300}}};
  expect_manifest_error(j);
  j = minimal_manifest();
  j["dtw"] = {{"step", "asymmetric"}};
  expect_manifest_error(j);
  j = minimal_manifest();
  j["reference"]["recordings"].push_back({{"subject", "a"}, {"path", "c.csv"}});
  expect_manifest_error(j);

  const auto dir = scratch("missing");
  write_text(dir / "manifest.json", minimal_manifest().dump());
  try {
    load_manifest(dir / "manifest.json");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Manifest);
    CHECK(std::string(e.what()).find("a.csv") != std::string::npos);
  }
}

TEST_CASE("process_cohort moves recordings onto the analysis rate", "[pipeline]") {
  Cohort c;
  c.label = "x";
  c.duration_s = 20.0;
  c.segments = SegmentSpec({{"all", 0.0, 20.0}});
  Recording r;
  r.subject_id = "s1";
  r.sample_rate_hz = 4.0;
  r.samples = testing::sine(80, 4.0, 0.05, 1.0, 2.0);
  c.recordings.push_back(r);
  const auto p = process_cohort(c, PreprocessConfig{}, DecomposeConfig{}, false, 1);
  CHECK(p.rate_hz == 10.0);
  REQUIRE(p.subjects.size() == 1);
  CHECK(p.subjects[0].normalized.size() == 200);
  CHECK(p.subjects[0].tonic.size() == 200);
}

TEST_CASE("flagged recordings are excluded unless kept", "[pipeline]") {
  auto cohorts = gen_study(small_study(1));
  auto& ref = cohorts.front();
  ref.recordings[1].samples.assign(ref.recordings[1].samples.size(), 0.3);
  const auto p = process_cohort(ref, PreprocessConfig{}, DecomposeConfig{}, false, 1);
  CHECK(p.subjects.size() == 3);
  CHECK(p.validation.flagged_count() == 1);
  CHECK_THROWS_AS(process_cohort(ref, PreprocessConfig{}, DecomposeConfig{}, true, 1), Error);
}

TEST_CASE("synthetic studies are reproducible", "[pipeline]") {
  const auto a = gen_study(small_study(5), 1);
  const auto b = gen_study(small_study(5), 3);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].recordings == b[i].recordings);
  CHECK(a[0].recordings[0].subject_id == "R01");
  CHECK(a[1].recordings[0].subject_id == "C01");
  CHECK(gen_study(small_study(6))[0].recordings != a[0].recordings);
}

TEST_CASE("score tables", "[pipeline]") {
  const auto t = parse_score_csv("subject,condition,value\ns1,a,1\ns1,b,2\ns2,a,1.5\ns2,b,2.5\n");
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[3].group_label == "b");
  CHECK(t.rows[3].value == 2.5);
  CHECK_THROWS_AS(parse_score_csv("subject,condition,value\ns1,a\n"), MalformedRowError);
  CHECK_THROWS_AS(parse_score_csv(""), Error);
}

TEST_CASE("staged analysis equals a fresh run", "[pipeline]") {
  const auto dir = scratch("staged");
  auto study = small_study(9);
  const auto manifest_path = write_synth_study(study, dir / "study", 1);
  write_text(dir / "study" / "scores.csv",
             "subject,condition,value\ns1,a,1\ns1,b,2.5\ns1,c,2\ns2,a,2\ns2,b,2.2\ns2,c,3.1\ns3,a,0.5\ns3,b,1.9\ns3,c,1\n");
  auto j = nlohmann::json::parse(read_file(manifest_path));
  j["stats"] = {{"scores", {{{"label", "change"}, {"path", "scores.csv"}}}}};
  write_text(manifest_path, j.dump());

  const auto fresh = run_full_analysis(manifest_path, dir / "fresh", 2, "T");
  {
    Analysis staged(load_manifest(manifest_path), dir / "staged", 1, true);
    staged.validation(true);
    staged.processed(true);
    staged.synchrony(true);
    staged.pairs(true);
    staged.statistics(true);
  }
  Analysis from_cache(load_manifest(manifest_path), dir / "staged", 1, true);
  CHECK(from_cache.report("T").dump() == fresh.dump());

  CHECK(fresh.at("schema_version") == kReportSchemaVersion);
  CHECK(fresh.at("provenance").at("generated_at") == "T");
  CHECK(fresh.at("pairs").size() == 2 * 3);
  CHECK(fresh.at("pairs").at(0).at("rows") == 3 * 4);
  CHECK(fresh.at("anova").size() == 3);
  CHECK(fresh.at("posthoc").size() == 3);
  CHECK(fresh.at("normality").size() == 6);
  REQUIRE(fresh.at("rm_anova").size() == 1);
  CHECK(fresh.at("rm_anova").at(0).at("df_between") == 2);
  CHECK(fresh.at("rm_anova").at(0).at("df_within") == 4);
  const auto& conds = fresh.at("synchrony").at("conditions");
  REQUIRE(conds.size() == 2);
  CHECK(conds.at(0).at("results").back().at("df") == 38);
  CHECK(conds.at(0).at("results").back().at("dtw_normalized").get<double>() <
        conds.at(1).at("results").back().at("dtw_normalized").get<double>());

  // the config hash tracks input bytes
  const std::string before = fresh.at("provenance").at("config_hash");
  write_text(dir / "study" / "scores.csv", "subject,condition,value\ns1,a,1\ns1,b,2\ns2,a,2\ns2,b,2.2\n");
  CHECK(config_hash(load_manifest(manifest_path)) != before);
}

TEST_CASE("stale artifacts are not reused", "[pipeline]") {
  const auto dir = scratch("stale");
  const auto manifest_path = write_synth_study(small_study(2), dir / "study", 1);
  run_full_analysis(manifest_path, dir / "out", 1, "T");
  auto m = load_manifest(manifest_path);
  m.dtw.band_radius = 5;
  Analysis a(m, dir / "out", 1, true);
  const auto fresh = Analysis(m, dir / "other", 1, false).report("T");
  CHECK(a.report("T").dump() == fresh.dump());
}
