#include <catch2/catch_amalgamated.hpp>

#include "synchrolab/synchrony.hpp"
#include "test_support.hpp"

using namespace synchrolab;
using Catch::Approx;

namespace {

ProcessedCohort make_cohort(const std::string& label, const std::string& prefix, std::size_t n_subjects,
                            std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ProcessedCohort c;
  c.label = label;
  c.rate_hz = 10.0;
  c.duration_s = static_cast<double>(len) / 10.0;
  c.segments = SegmentSpec({{"a", 0.0, 2.0}, {"b", 2.0, 4.0}});
  for (std::size_t k = 0; k < n_subjects; ++k) {
    ProcessedSubject s;
    s.subject_id = prefix + std::to_string(k);
    s.normalized = testing::uniform_series(rng, len);
    s.tonic = testing::uniform_series(rng, len);
    s.phasic = testing::uniform_series(rng, len, -0.1, 0.1);
    c.subjects.push_back(std::move(s));
  }
  return c;
}

}  // namespace

TEST_CASE("pearson hand examples", "[synchrony]") {
  CHECK(pearson(Series{1, 2, 3, 4}, Series{2, 4, 6, 8}).r == Approx(1.0).margin(1e-12));
  CHECK(pearson(Series{1, 2, 3, 4}, Series{8, 6, 4, 2}).r == Approx(-1.0).margin(1e-12));
  const auto r = pearson(Series{1, 2, 3, 4, 5}, Series{2, 1, 4, 3, 5});
  CHECK(r.r == Approx(0.8).margin(1e-12));
  CHECK(r.df == 3);
  CHECK(pearson(Series{1, 2, 3}, Series{3, 1, 2}).df == 1);
  CHECK(pearson(Series{1, 2, 3}, Series{2, 4, 6}).r == Approx(1.0).margin(1e-12));
  CHECK(pearson(Series{1, 2, 3}, Series{3, 2, 1}).r == Approx(-1.0).margin(1e-12));
  CHECK(pearson(Series{1, 2, 3, 4}, Series{1, 3, 2, 4}).r == Approx(0.8).margin(1e-12));
}

TEST_CASE("pearson agrees with scipy", "[synchrony][oracle]") {
  for (const auto& c : testing::load_fixture("pearson.json").at("cases")) {
    const auto x = c.at("x").get<Series>();
    const auto y = c.at("y").get<Series>();
    const auto r = pearson(x, y);
    CHECK(r.r == Approx(c.at("r").get<double>()).margin(1e-12));
    CHECK(r.p == Approx(c.at("p").get<double>()).epsilon(1e-9).margin(1e-300));
    CHECK(r.df == static_cast<int>(x.size()) - 2);
  }
}

TEST_CASE("pearson is invariant to positive affine maps", "[synchrony][property]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> coef(0.1, 10.0), shift(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = testing::uniform_series(rng, 10 + trial);
    const auto y = testing::uniform_series(rng, 10 + trial);
    const double a = coef(rng), b = shift(rng), c = coef(rng), d = shift(rng);
    Series xt(x.size()), yt(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      xt[i] = a * x[i] + b;
      yt[i] = c * y[i] + d;
    }
    const auto base = pearson(x, y);
    REQUIRE(std::abs(base.r) <= 1.0);
    REQUIRE(pearson(xt, yt).r == Approx(base.r).margin(1e-9));
    REQUIRE(pearson(y, x).r == Approx(base.r).margin(1e-12));
  }
}

TEST_CASE("pearson errors", "[synchrony]") {
  try {
    pearson(Series{1, 2, 3}, Series{1, 2});
    FAIL();
  } catch (const Error& e) {
    CHECK(e.code() == Errc::LengthMismatch);
  }
  try {
    pearson(Series{1, 1, 1}, Series{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConstantInput);
  }
}

TEST_CASE("group average and decimation", "[synchrony]") {
  ProcessedCohort c;
  c.label = "x";
  c.subjects.push_back({"a", {0, 2, 4}, {1, 1, 1}, {0, 0, 0}});
  c.subjects.push_back({"b", {2, 2, 0}, {3, 3, 3}, {0, 0, 0}});
  CHECK(group_average(c, Component::Raw) == Series{1, 2, 2});
  CHECK(group_average(c, Component::Tonic) == Series{2, 2, 2});
  CHECK(mean_decimate(Series{1, 3, 5, 7, 9}, 2) == Series{2, 6});
  ProcessedCohort halves;
  halves.subjects.push_back({"a", {0, 0, 0}, {}, {}});
  halves.subjects.push_back({"b", {1, 1, 1}, {}, {}});
  CHECK(group_average(halves, Component::Raw) == Series{0.5, 0.5, 0.5});
  c.subjects.back().normalized.pop_back();
  CHECK_THROWS_AS(group_average(c, Component::Raw), Error);
  c.subjects.clear();
  CHECK_THROWS_AS(group_average(c, Component::Raw), Error);
}

TEST_CASE("group synchrony of identical traces", "[synchrony]") {
  std::mt19937_64 rng(3);
  const auto avg = testing::uniform_series(rng, 2600);
  const auto res = group_synchrony(avg, avg, SegmentSpec::concert_default(), 10.0);
  REQUIRE(res.size() == 4);
  CHECK(res[0].segment_label == "0-100");
  CHECK(res[3].segment_label == "overall");
  for (const auto& r : res) {
    CHECK(r.r == Approx(1.0).margin(1e-12));
    CHECK(r.dtw_raw == 0.0);
  }
  CHECK(res[3].df == 258);
  CHECK(res[3].n_x == 2600);
  CHECK(res[0].n_x == 1000);
  CHECK(res[0].df == 98);
}

TEST_CASE("group synchrony separates related from unrelated traces", "[synchrony]") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.05);
  const auto base = testing::sine(2600, 10.0, 0.01, 0.5, 0.5);
  Series related(base.size()), unrelated = testing::uniform_series(rng, base.size());
  for (std::size_t i = 0; i < base.size(); ++i) related[i] = base[i] + g(rng);
  const auto a = group_synchrony(base, related, SegmentSpec::concert_default(), 10.0);
  const auto b = group_synchrony(base, unrelated, SegmentSpec::concert_default(), 10.0);
  CHECK(a.back().r > 0.9);
  CHECK(a.back().dtw_normalized < b.back().dtw_normalized);
  CHECK_THROWS_AS(group_synchrony(base, Series(10, 0.0), SegmentSpec::concert_default(), 10.0), Error);
}

TEST_CASE("pairwise DTW table shape and ordering", "[synchrony]") {
  const auto ref = make_cohort("reference", "R", 4, 40, 1);
  const auto probe = make_cohort("probe", "P", 3, 40, 2);
  const auto t = pairwise_dtw(ref, probe, Component::Raw, ref.segments, DtwConfig{}, 1);
  REQUIRE(t.rows.size() == 3 * 4 * 3);
  CHECK(t.rows[0].probe_id == "P0");
  CHECK(t.rows[0].reference_id == "R0");
  CHECK(t.rows[0].segment == "a");
  CHECK(t.rows[1].segment == "b");
  CHECK(t.rows[2].segment == "overall");
  CHECK(t.rows[3].reference_id == "R1");
  CHECK(t.rows.back().probe_id == "P2");
  CHECK(t.rows.back().condition == "probe");
  const auto direct = dtw_distance(slice_view(probe.subjects[1].normalized, 10.0, {"b", 2.0, 4.0}),
                                   slice_view(ref.subjects[2].normalized, 10.0, {"b", 2.0, 4.0}));
  const auto& row = t.rows[(1 * 4 + 2) * 3 + 1];
  CHECK(row.dtw_raw == direct.raw);
  CHECK(row.dtw_norm == direct.normalized);
}

TEST_CASE("pairwise DTW self comparison has a zero diagonal", "[synchrony]") {
  const auto ref = make_cohort("reference", "R", 3, 40, 1);
  const auto t = pairwise_dtw(ref, ref, Component::Tonic, ref.segments, DtwConfig{}, 2);
  for (const auto& r : t.rows)
    if (r.probe_id == r.reference_id) CHECK(r.dtw_raw == 0.0);
}

TEST_CASE("pairwise DTW is independent of thread count", "[synchrony][property]") {
  const auto ref = make_cohort("reference", "R", 5, 60, 11);
  const auto probe = make_cohort("probe", "P", 4, 60, 12);
  const auto one = pairwise_dtw(ref, probe, Component::Phasic, ref.segments, DtwConfig{}, 1);
  for (unsigned threads : {2u, 3u, 8u}) CHECK(pairwise_dtw(ref, probe, Component::Phasic, ref.segments, DtwConfig{}, threads) == one);
}

TEST_CASE("pair table CSV round trip", "[synchrony]") {
  const auto ref = make_cohort("reference", "R", 2, 40, 1);
  const auto probe = make_cohort("probe", "P", 2, 40, 2);
  const auto t = pairwise_dtw(ref, probe, Component::Raw, ref.segments, DtwConfig{}, 1);
  const auto csv = format_pair_table_csv(t);
  CHECK(csv.rfind("probe_id,reference_id,condition,segment,dtw_raw,dtw_norm\n", 0) == 0);
  CHECK(parse_pair_table_csv(csv) == t);
  CHECK(format_pair_table_csv(parse_pair_table_csv(csv)) == csv);
  CHECK_THROWS_AS(parse_pair_table_csv("a,b\n"), Error);
  CHECK_THROWS_AS(parse_pair_table_csv(std::string(kPairTableHeader) + "\nP,R,c,s,x,1\n"), MalformedRowError);
}
