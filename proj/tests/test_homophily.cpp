#include <gtest/gtest.h>

#include <random>

#include "campusnet/homophily.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace campusnet;
using campusnet::testing::BundleBuilder;

namespace {

constexpr int F = 0, M = 1;

}  // namespace

TEST(Homophily, WorkedFourIncidenceExample) {
  // one member per edge: (F,F), (F,M), (M,M), (F,F)
  HomophilyTally tally(2);
  tally.add_edge(F, true, F, false);
  tally.add_edge(F, true, M, false);
  tally.add_edge(M, true, M, false);
  tally.add_edge(F, true, F, false);
  auto t = tally.terms(Baseline::EitherEndpoint);
  EXPECT_EQ(t.e_sum, 0.75);
  EXPECT_EQ(t.expected, 0.6875);
  ASSERT_TRUE(t.h);
  EXPECT_EQ(*t.h, 0.2);
}

TEST(Homophily, AllSameFeatureIsOne) {
  HomophilyTally tally(3);
  tally.add_edge(0, true, 0, true);
  tally.add_edge(1, true, 1, false);
  tally.add_edge(2, false, 2, true);
  for (auto b : {Baseline::Counterpart, Baseline::EitherEndpoint}) EXPECT_DOUBLE_EQ(*tally.terms(b).h, 1.0);
}

TEST(Homophily, ObservedEqualsExpectedIsZero) {
  // members F, M; others split evenly: e = 1/2, a = b = (1/2, 1/2)
  HomophilyTally tally(2);
  tally.add_edge(F, true, F, false);
  tally.add_edge(F, true, M, false);
  tally.add_edge(M, true, F, false);
  tally.add_edge(M, true, M, false);
  EXPECT_EQ(*tally.terms(Baseline::Counterpart).h, 0.0);
}

TEST(Homophily, UnknownOrForeignEdgesAreSkipped) {
  HomophilyTally tally(2);
  EXPECT_FALSE(tally.add_edge(kUnknown, true, F, false));
  EXPECT_FALSE(tally.add_edge(F, false, F, false));
  EXPECT_EQ(tally.incidences(), 0u);
  auto t = tally.terms(Baseline::Counterpart);
  EXPECT_FALSE(t.h);
  EXPECT_EQ(t.n_incidences, 0u);
}

TEST(Homophily, MatchesTermByTermOracle) {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 100; ++rep) {
    const int categories = 2 + static_cast<int>(rng() % 5);
    const int edges = 1 + static_cast<int>(rng() % 400);
    std::uniform_int_distribution<int> cat(0, categories - 1);
    HomophilyTally tally(static_cast<std::size_t>(categories));
    std::vector<std::pair<int, int>> incidences, edge_features;
    for (int e = 0; e < edges; ++e) {
      const int fa = cat(rng), fb = cat(rng);
      const bool ma = rng() % 2 == 0;
      const bool mb = !ma || rng() % 3 == 0;
      tally.add_edge(fa, ma, fb, mb);
      edge_features.emplace_back(fa, fb);
      if (ma) incidences.emplace_back(fa, fb);
      if (mb) incidences.emplace_back(fb, fa);
    }
    for (bool either : {false, true}) {
      auto got = tally.terms(either ? Baseline::EitherEndpoint : Baseline::Counterpart);
      auto want = oracle::homophily(incidences, edge_features, categories, either);
      EXPECT_NEAR(got.e_sum, want.e_sum, 1e-12);
      EXPECT_NEAR(got.expected, want.expected, 1e-12);
      ASSERT_EQ(got.h.has_value(), want.h.has_value());
      if (got.h) {
        EXPECT_NEAR(*got.h, *want.h, 1e-12);
        EXPECT_LE(*got.h, 1.0);
      }
    }
  }
}

TEST(Homophily, LabelPermutationInvariance) {
  std::mt19937_64 rng(7);
  const int categories = 4;
  std::vector<int> perm{2, 0, 3, 1};
  HomophilyTally a(categories);
  for (int e = 0; e < 300; ++e) {
    const int fa = static_cast<int>(rng() % categories), fb = static_cast<int>(rng() % categories);
    const bool mb = rng() % 2 == 0;
    a.add_edge(fa, true, fb, mb);
  }
  HomophilyTally c(categories);
  std::mt19937_64 rng2(7);
  for (int e = 0; e < 300; ++e) {
    const int fa = static_cast<int>(rng2() % categories), fb = static_cast<int>(rng2() % categories);
    const bool mb = rng2() % 2 == 0;
    c.add_edge(perm[fa], true, perm[fb], mb);
  }
  EXPECT_NEAR(*a.terms(Baseline::Counterpart).h, *c.terms(Baseline::Counterpart).h, 1e-12);
  EXPECT_NEAR(*a.terms(Baseline::EitherEndpoint).h, *c.terms(Baseline::EitherEndpoint).h, 1e-12);
}

TEST(Homophily, IntraCohortEdgeGivesTwoIncidences) {
  HomophilyTally tally(2);
  tally.add_edge(F, true, M, true);
  EXPECT_EQ(tally.incidences(), 2u);
  EXPECT_EQ(tally.edges(), 1u);
}

TEST(HomophilySeries, SingleGenderCohortIsAbsent) {
  BundleBuilder b;
  for (int i = 0; i < 5; ++i) b.node("n" + std::to_string(i), "s", 2010, "F");
  b.edge("n0", "n1", "2010-09-02");
  b.edge("n2", "n3", "2010-10-02");
  b.cohort("s", 2010, "2010-09-01");
  auto d = b.build();
  auto g = d.grid(0, TimeUnit::Month);
  for (auto mode : {HomophilyMode::New, HomophilyMode::Cumulative}) {
    for (const auto& h : homophily_series(d, 0, Dimension::Gender, g, mode)) EXPECT_FALSE(h.terms.h);
  }
}

TEST(HomophilySeries, SameYearOnlyEntryYearUnderEitherBaseline) {
  BundleBuilder b;
  for (int i = 0; i < 4; ++i) b.node("n" + std::to_string(i), "s", 2010, i % 2 ? "F" : "M");
  b.edge("n0", "n1", "2010-09-02");
  b.edge("n2", "n3", "2010-10-02");
  b.cohort("s", 2010, "2010-09-01");
  auto d = b.build();
  auto g = d.grid(0, TimeUnit::Month);
  // one category only: expected share is 1 under both baselines, so H is undefined
  for (auto base : {Baseline::Counterpart, Baseline::EitherEndpoint}) {
    auto h = homophily_coefficient(d, 0, Dimension::EntryYear, g, 0, HomophilyMode::New, base);
    EXPECT_EQ(h.terms.e_sum, 1.0);
    EXPECT_EQ(h.terms.expected, 1.0);
    EXPECT_FALSE(h.terms.h);
  }
}

TEST(HomophilySeries, NewAndCumulativeWindows) {
  BundleBuilder b;
  b.node("a", "s", 2010, "F");
  b.node("b", "s", 2010, "F");
  b.node("c", "s", 2010, "M");
  b.node("x", "s", 2011, "M");
  b.edge("a", "b", "2010-09-05");
  b.edge("a", "c", "2010-10-05");
  b.edge("b", "x", "2010-10-06");
  b.cohort("s", 2010, "2010-09-01");
  b.cohort("s", 2011, "2011-09-01");
  auto d = b.build();
  const auto c = d.find_cohort("s:2010");
  auto g = d.grid(c, TimeUnit::Month);
  auto fresh = homophily_coefficient(d, c, Dimension::Gender, g, 1, HomophilyMode::New);
  auto total = homophily_coefficient(d, c, Dimension::Gender, g, 1, HomophilyMode::Cumulative);
  EXPECT_EQ(fresh.terms.n_incidences, 3u);  // (a,c) twice, (b,x) once
  EXPECT_EQ(total.terms.n_incidences, 5u);
  EXPECT_THROW(homophily_coefficient(d, c, Dimension::Gender, g, 60, HomophilyMode::New), std::out_of_range);
}
