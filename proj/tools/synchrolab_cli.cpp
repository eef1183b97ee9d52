#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synchrolab/synchrolab.hpp"

namespace fs = std::filesystem;
using namespace synchrolab;

namespace {

struct Options {
  std::string manifest;
  std::string out = "synchrolab_out";
  unsigned threads = 0;
  bool keep_flagged = false;
  std::optional<std::size_t> band;
  std::string synth_config;
  std::optional<std::uint64_t> seed;
};

int fail(const std::string& module, const std::string& code, const std::string& message, int exit_code) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", module + "." + code}, {"module", module}, {"message", message}, {"exit_code", exit_code}};
  std::cerr << j.dump() << '\n';
  return exit_code;
}

Analysis open_analysis(const Options& o, bool reuse) {
  if (o.manifest.empty()) throw Error("manifest", Errc::Manifest, "--manifest is required");
  StudyManifest m = load_manifest(o.manifest);
  if (o.keep_flagged) m.keep_flagged = true;
  if (o.band) m.dtw.band_radius = *o.band;
  return Analysis(std::move(m), o.out, resolve_thread_count(o.threads), reuse);
}

void print_written(const fs::path& out, std::initializer_list<std::string> names) {
  for (const auto& n : names) std::cout << (out / n).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synchrolab: physiological synchrony between a reference cohort and probe cohorts"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--manifest", o.manifest, "study manifest (JSON)");
    sub->add_option("--out", o.out, "output directory for stage artifacts")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker threads (default: SYNCHROLAB_THREADS or logical cores)");
    sub->add_flag("--keep-flagged", o.keep_flagged, "keep recordings flagged by validation");
    sub->add_option("--band", o.band, "Sakoe-Chiba band radius in samples");
  };

  auto* ingest = app.add_subcommand("ingest", "load and validate recordings -> validation.json");
  auto* preprocess = app.add_subcommand("preprocess", "clean and decompose -> preprocessed.json");
  auto* synchrony = app.add_subcommand("synchrony", "group-average synchrony -> group_synchrony.json");
  auto* pairs = app.add_subcommand("pairs", "pairwise DTW tables -> pairs_<condition>.csv");
  auto* stats_cmd = app.add_subcommand("stats", "between-condition statistics -> stats.json");
  auto* keyframes = app.add_subcommand("export-keyframes", "animation keyframes -> keyframes.ndjson");
  auto* report = app.add_subcommand("report", "assemble report.json from stage artifacts");
  auto* run = app.add_subcommand("run", "full analysis: every stage, then report.json");
  for (auto* sub : {ingest, preprocess, synchrony, pairs, stats_cmd, keyframes, report, run}) add_common(sub);

  auto* synth = app.add_subcommand("synth", "write a synthetic study (recordings + manifest.json)");
  synth->add_option("--config", o.synth_config, "synthetic study description (JSON); default: 40 vs 21/20/21");
  synth->add_option("--out", o.out, "output directory")->capture_default_str();
  synth->add_option("--seed", o.seed, "override the study seed");
  synth->add_option("--threads", o.threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("cli", "Usage", e.what(), 2);
  }

  try {
    const fs::path out = o.out;
    if (synth->parsed()) {
      SynthStudyConfig cfg = reference_study_design();
      nlohmann::json raw = nlohmann::json::object();
      if (!o.synth_config.empty()) {
        try {
          raw = nlohmann::json::parse(read_file(o.synth_config));
        } catch (const nlohmann::json::exception& e) {
          throw Error("manifest", Errc::Manifest, "synth config '" + o.synth_config + "': " + e.what());
        } catch (const Error& e) {
          throw Error("manifest", Errc::Manifest, e.what());
        }
        cfg = parse_synth_config(raw);
      }
      if (o.seed) cfg.seed = *o.seed;
      std::cout << write_synth_study(cfg, out, resolve_thread_count(o.threads), raw.value("analysis", nlohmann::json::object())).string()
                << '\n';
      return 0;
    }
    if (run->parsed()) {
      Analysis a = open_analysis(o, false);
      a.validation(true);
      a.processed(true);
      a.synchrony(true);
      a.pairs(true);
      a.statistics(true);
      a.export_keyframes();
      a.write_report(utc_timestamp());
      print_written(out, {"report.json"});
      return 0;
    }
    Analysis a = open_analysis(o, true);
    if (ingest->parsed()) {
      a.validation(true);
      print_written(out, {"validation.json"});
    } else if (preprocess->parsed()) {
      a.processed(true);
      print_written(out, {"preprocessed.json"});
    } else if (synchrony->parsed()) {
      a.synchrony(true);
      print_written(out, {"group_synchrony.json"});
    } else if (pairs->parsed()) {
      a.pairs(true);
      for (const auto& p : a.manifest().probes) print_written(out, {pairs_file_name(p.label)});
    } else if (stats_cmd->parsed()) {
      a.statistics(true);
      print_written(out, {"stats.json"});
    } else if (keyframes->parsed()) {
      a.export_keyframes();
      print_written(out, {"keyframes.ndjson"});
    } else if (report->parsed()) {
      a.write_report(utc_timestamp());
      print_written(out, {"report.json"});
    }
    return 0;
  } catch (const Error& e) {
    return fail(e.module(), std::string(errc_name(e.code())), e.what(), exit_code(e.code()));
  } catch (const nlohmann::json::exception& e) {
    return fail("pipeline", "Io", e.what(), 3);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("pipeline", "Io", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("pipeline", "Internal", e.what(), 4);
  }
}
