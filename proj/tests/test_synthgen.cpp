#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "campusnet/formation.hpp"
#include "campusnet/synthgen.hpp"

using namespace campusnet;

namespace {

ScenarioConfig small(const std::string& preset, int cohort_size = 200, std::uint64_t seed = 5) {
  return parse_scenario(R"({"seed": )" + std::to_string(seed) + R"(, "entry_years": [2009, 2010],
    "schools": [{"preset": ")" + preset + R"(", "count": 2, "cohort_size": )" + std::to_string(cohort_size) +
                        R"(, "formation": {"mean_degree": 30}}]})");
}

std::string bundle_bytes(const SyntheticBundle& b) {
  auto dir = std::filesystem::temp_directory_path() /
             ("campusnet_synth_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
  std::filesystem::remove_all(dir);
  b.write(dir);
  std::string all;
  for (auto name : {"edges.csv", "attributes.csv", "cohorts.csv", "schools.csv", "closeness.csv"}) {
    std::ifstream in(dir / name);
    std::stringstream s;
    s << in.rdbuf();
    all += s.str();
  }
  return all;
}

}  // namespace

TEST(Synthgen, SameSeedSameBytesAcrossThreadCounts) {
  auto config = small("residential-private");
  auto one = bundle_bytes(generate(config, 1));
  EXPECT_EQ(one, bundle_bytes(generate(config, 1)));
  EXPECT_EQ(one, bundle_bytes(generate(config, 3)));
  auto other = small("residential-private", 200, 6);
  EXPECT_NE(one, bundle_bytes(generate(other, 1)));
}

TEST(Synthgen, BundleIsConsistent) {
  auto b = generate(small("commuter-public"));
  EXPECT_EQ(b.cohorts.size(), 4u);
  EXPECT_EQ(b.schools.size(), 2u);
  EXPECT_EQ(b.attributes.size(), 800u);
  EXPECT_TRUE(std::is_sorted(b.edges.begin(), b.edges.end(), [](const EdgeEvent& x, const EdgeEvent& y) {
    return std::tie(x.t, x.u, x.v) < std::tie(y.t, y.u, y.v);
  }));
  for (const auto& e : b.edges) {
    EXPECT_LT(e.u, e.v);
  }
  auto d = b.to_dataset();
  EXPECT_EQ(d.edges().size(), b.edges.size());  // no duplicates, no self loops
  auto closeness = b.closeness_table();
  EXPECT_GT(closeness.ego_count(), 0u);
}

TEST(Synthgen, BurstPeaksAtStart) {
  auto d = generate(small("residential-private", 300)).to_dataset();
  for (std::size_t c = 0; c < d.cohorts().size(); ++c) {
    auto s = edge_volume(d, c, d.grid(c, TimeUnit::Month));
    auto peak = std::max_element(s.points.begin(), s.points.end(),
                                 [](const auto& a, const auto& b) { return *a.value < *b.value; });
    EXPECT_EQ(peak->idx, 0) << d.cohorts()[c].key();
  }
}

TEST(Synthgen, ClosureRisesAfterStart) {
  auto d = generate(small("residential-private", 300)).to_dataset();
  auto g = d.grid(0, TimeUnit::Month);
  auto series = closure_series(d, 0, g);
  double before = 0, after = 0;
  int nb = 0, na = 0;
  for (const auto& s : series) {
    if (!s.share_closing) continue;
    if (s.idx < 0) before += *s.share_closing, ++nb;
    if (s.idx >= 12) after += *s.share_closing, ++na;
  }
  ASSERT_GT(nb, 0);
  ASSERT_GT(na, 0);
  EXPECT_GT(after / na, before / nb);
}

TEST(Synthgen, NullPresetHasNoBurst) {
  auto null = scenario_preset("null");
  EXPECT_EQ(null.schools[0].formation.burst_intensity, 1.0);
  EXPECT_EQ(null.schools[0].formation.closure, 0.0);
  for (double h : null.schools[0].formation.homophily) EXPECT_EQ(h, 0.0);
}

TEST(Synthgen, EveryPresetValidates) {
  for (const auto& name : scenario_preset_names()) EXPECT_NO_THROW(validate(scenario_preset(name))) << name;
  for (const auto& name : school_preset_names()) EXPECT_NO_THROW(school_preset(name)) << name;
  EXPECT_THROW(scenario_preset("nowhere"), std::invalid_argument);
}

TEST(Synthgen, InfeasibleConfigThrows) {
  EXPECT_THROW(parse_scenario(R"({"schools": [{"preset": "womens", "cohort_size": 20,
                                   "formation": {"mean_degree": 40, "degree_cap": 60}}]})"),
               std::invalid_argument);
  EXPECT_THROW(parse_scenario(R"({"schools": [{"preset": "womens", "formation": {"summer": -1}}]})"),
               std::invalid_argument);
  EXPECT_THROW(parse_scenario("{not json"), std::invalid_argument);
}

TEST(Synthgen, UnknownKeyIsNamed) {
  try {
    parse_scenario(R"({"schools": [{"preset": "womens", "formation": {"bursty": 2}}]})");
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("bursty"), std::string::npos);
  }
}

TEST(Synthgen, ScenarioJsonRoundTrips) {
  auto config = small("greek-heavy");
  auto again = parse_scenario(scenario_to_json(config));
  EXPECT_EQ(scenario_to_json(again), scenario_to_json(config));
  EXPECT_EQ(bundle_bytes(generate(again)), bundle_bytes(generate(config)));
}

TEST(Synthgen, WomensPresetIsMostlyFemale) {
  auto d = generate(small("womens", 100)).to_dataset();
  const auto& attrs = d.attributes();
  std::size_t female = 0;
  for (NodeId u = 0; u < d.node_count(); ++u) {
    female += attrs.feature_label(Dimension::Gender, attrs.feature(u, Dimension::Gender)) == "F";
  }
  EXPECT_GT(static_cast<double>(female) / static_cast<double>(d.node_count()), 0.9);
}
