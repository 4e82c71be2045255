#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "campusnet/structure.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace campusnet;
using Pairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

namespace {

SnapshotView view_of(std::size_t n, const Pairs& e) { return SnapshotView::from_edges(n, e); }

Pairs two_triangles() { return {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}}; }

}  // namespace

TEST(Components, LccFraction) {
  EXPECT_DOUBLE_EQ(lcc_fraction(view_of(4, {{0, 1}, {1, 2}, {2, 3}}), 4), 1.0);
  EXPECT_DOUBLE_EQ(lcc_fraction(view_of(5, {{0, 1}, {1, 2}, {3, 4}}), 5), 0.6);
  EXPECT_THROW(lcc_fraction(view_of(2, {{0, 1}}), 0), std::invalid_argument);
}

TEST(Components, MatchesBfsLabelling) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const std::uint32_t n = 50 + static_cast<std::uint32_t>(rng() % 900);
    auto e = campusnet::testing::random_edges(n, 1.2 / n, rng);
    auto adj = oracle::adjacency(n, e);
    EXPECT_DOUBLE_EQ(lcc_fraction(view_of(n, e), n), static_cast<double>(oracle::largest_component(adj)) / n);
  }
}

TEST(Clustering, TriangleAndStar) {
  EXPECT_DOUBLE_EQ(avg_clustering(view_of(3, {{0, 1}, {1, 2}, {0, 2}})), 1.0);
  EXPECT_DOUBLE_EQ(avg_clustering(view_of(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}})), 0.0);
}

TEST(Clustering, MatchesWedgeEnumeration) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 8; ++rep) {
    const std::uint32_t n = 20 + static_cast<std::uint32_t>(rng() % 480);
    const double p = 0.02 + 0.2 * static_cast<double>(rng() % 100) / 100.0;
    auto e = campusnet::testing::random_edges(n, p, rng);
    EXPECT_NEAR(avg_clustering(view_of(n, e)), oracle::avg_clustering(oracle::adjacency(n, e)), 1e-12);
  }
}

TEST(Modularity, TwoTrianglesWithBridge) {
  auto v = view_of(6, two_triangles());
  std::vector<std::uint32_t> part{0, 0, 0, 1, 1, 1};
  EXPECT_NEAR(modularity(v, part), 5.0 / 14.0, 1e-12);
  auto cnm = cnm_modularity(v);
  ASSERT_TRUE(cnm);
  EXPECT_NEAR(cnm->q, 5.0 / 14.0, 1e-12);
  EXPECT_EQ(cnm->community, part);
}

TEST(Modularity, SingleCliqueAndEdgeless) {
  Pairs clique;
  for (std::uint32_t i = 0; i < 5; ++i) {
    for (std::uint32_t j = i + 1; j < 5; ++j) clique.emplace_back(i, j);
  }
  auto v = view_of(5, clique);
  EXPECT_NEAR(modularity(v, std::vector<std::uint32_t>(5, 0)), 0.0, 1e-15);
  EXPECT_FALSE(cnm_modularity(view_of(4, {})));
}

TEST(Modularity, CnmNearExhaustiveOptimumOnPlantedCliques) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    auto e = campusnet::testing::planted_cliques(rng);
    std::uint32_t n = 0;
    for (auto [u, v] : e) n = std::max({n, u + 1, v + 1});
    auto cnm = cnm_modularity(view_of(n, e));
    const double best = oracle::best_modularity(n, e);
    EXPECT_GE(cnm->q, 0.95 * best - 1e-12) << "n=" << n << " rep=" << rep;
  }
}

TEST(Modularity, CnmFollowsGreedyOrderPastTheOptimum) {
  // pendant pair 0-1 bridged to a 5-clique: merging {0,1} first, then node 2
  // (gain 9 > 8) is what the greedy does, even though {0,1},{2..6} is better
  Pairs e{{0, 1}, {1, 2}};
  for (std::uint32_t i = 2; i < 7; ++i) {
    for (std::uint32_t j = i + 1; j < 7; ++j) e.emplace_back(i, j);
  }
  auto cnm = cnm_modularity(view_of(7, e));
  EXPECT_EQ(cnm->community, (std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1, 1}));
  EXPECT_NEAR(cnm->q, 1.0 / 9.0, 1e-12);
  EXPECT_NEAR(oracle::modularity(7, e, {0, 0, 1, 1, 1, 1, 1}), oracle::best_modularity(7, e), 1e-12);
}

TEST(Modularity, CnmRecoversPlantedCliques) {
  Pairs e;
  for (std::uint32_t c = 0; c < 3; ++c) {
    for (std::uint32_t i = 0; i < 3; ++i) {
      for (std::uint32_t j = i + 1; j < 3; ++j) e.emplace_back(3 * c + i, 3 * c + j);
    }
  }
  e.emplace_back(2, 3);
  e.emplace_back(5, 6);
  auto cnm = cnm_modularity(view_of(9, e));
  EXPECT_EQ(cnm->community, (std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1, 2, 2, 2}));
  EXPECT_NEAR(cnm->q, oracle::best_modularity(9, e), 1e-12);
}

TEST(Modularity, StoredQMatchesPartitionAndStorageAgrees) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 12; ++rep) {
    const std::uint32_t n = 30 + static_cast<std::uint32_t>(rng() % 300);
    auto e = campusnet::testing::random_edges(n, 3.0 / n + 0.05 * (rep % 4), rng);
    auto v = view_of(n, e);
    auto dense = cnm_modularity(v, CnmStorage::Dense);
    auto sparse = cnm_modularity(v, CnmStorage::Sparse);
    ASSERT_TRUE(dense && sparse);
    EXPECT_EQ(dense->community, sparse->community);
    EXPECT_EQ(dense->q, sparse->q);
    EXPECT_NEAR(modularity(v, dense->community), dense->q, 1e-9);
  }
}

TEST(Paths, PathGraphAndClique) {
  auto p = avg_shortest_path(view_of(3, {{0, 1}, {1, 2}}));
  EXPECT_NEAR(*p.mean, 4.0 / 3.0, 1e-15);
  EXPECT_FALSE(p.sampled);
  Pairs clique;
  for (std::uint32_t i = 0; i < 6; ++i) {
    for (std::uint32_t j = i + 1; j < 6; ++j) clique.emplace_back(i, j);
  }
  EXPECT_DOUBLE_EQ(*avg_shortest_path(view_of(6, clique)).mean, 1.0);
  EXPECT_FALSE(avg_shortest_path(view_of(3, {})).mean);
}

TEST(Paths, ExactMatchesAllPairsBfs) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 6; ++rep) {
    // more than 64 sources so the bit-parallel batches wrap
    const std::uint32_t n = 70 + static_cast<std::uint32_t>(rng() % 200);
    auto e = campusnet::testing::random_edges(n, 1.5 / n, rng);
    auto got = avg_shortest_path(view_of(n, e));
    auto want = oracle::avg_path(oracle::adjacency(n, e));
    ASSERT_EQ(got.mean.has_value(), want.has_value());
    if (want) EXPECT_NEAR(*got.mean, *want, 1e-12);
  }
}

TEST(Paths, SampledWithinTwoPercentOnLargeGraph) {
  std::mt19937_64 rng(6);
  const std::uint32_t n = 10000;
  Pairs e;
  std::uniform_int_distribution<std::uint32_t> pick(0, n - 1);
  for (std::uint32_t i = 0; i < 4 * n; ++i) e.emplace_back(pick(rng), pick(rng));
  auto v = view_of(n, e);
  PathOptions exact;
  exact.exact_threshold = n;
  auto truth = avg_shortest_path(v, exact);
  ASSERT_FALSE(truth.sampled);
  PathOptions sampled;
  sampled.seed = 99;
  auto est = avg_shortest_path(v, sampled);
  EXPECT_TRUE(est.sampled);
  EXPECT_EQ(est.sources, 256u);
  EXPECT_EQ(est.seed, 99u);
  EXPECT_LT(std::abs(*est.mean - *truth.mean) / *truth.mean, 0.02);
}

TEST(Paths, DistanceGroupsSplitTotals) {
  auto v = view_of(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  std::vector<std::uint32_t> groups{0, 0, 1, 1, 7};
  std::vector<std::uint32_t> sources{0};
  auto by = distance_totals_by_group(v, sources, groups, 2);
  EXPECT_EQ(by[0].sum, 1u);
  EXPECT_EQ(by[0].pairs, 1u);
  EXPECT_EQ(by[1].sum, 5u);
  EXPECT_EQ(by[1].pairs, 2u);
}

TEST(CrossCohortPath, SelfCounterpartMatchesWithinCohort) {
  campusnet::testing::BundleBuilder b;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) b.node("a" + std::to_string(i), "s", 2010);
  for (int i = 0; i < 30; ++i) b.node("b" + std::to_string(i), "s", 2011);
  for (int k = 0; k < 90; ++k) {
    b.edge("a" + std::to_string(rng() % 30), "a" + std::to_string(rng() % 30), "2010-09-10");
  }
  b.edge("a0", "b0", "2010-12-10");
  for (int k = 0; k < 60; ++k) {
    b.edge("b" + std::to_string(rng() % 30), "b" + std::to_string(rng() % 30), "2010-10-10");
  }
  b.cohort("s", 2010, "2010-09-01");
  b.cohort("s", 2011, "2011-09-01");
  auto d = b.build();
  const auto focal = d.find_cohort("s:2010");
  auto g = d.grid(focal, TimeUnit::Month);
  std::vector<std::size_t> counterparts{focal, d.find_cohort("s:2011")};
  auto family = cross_cohort_path_series(d, focal, counterparts, g);
  ASSERT_EQ(family.size(), 2u);
  EXPECT_EQ(family[1].series, "s:2011");
  // before the bridge the two cohorts are disconnected
  EXPECT_FALSE(family[1].at(1)->value);
  EXPECT_TRUE(family[1].at(3)->value);

  // self counterpart at month 1: within-school graph holds only cohort edges
  auto school_view = snapshot(d, focal, g, 1, Scope::School);
  auto adj = oracle::adjacency(school_view.node_count(), {});
  std::vector<oracle::Edge> edges;
  for (std::uint32_t u = 0; u < school_view.node_count(); ++u) {
    for (auto w : school_view.neighbors(u)) {
      if (u < w) edges.emplace_back(u, w);
    }
  }
  adj = oracle::adjacency(school_view.node_count(), edges);
  double sum = 0, pairs = 0;
  for (std::uint32_t s = 0; s < 30; ++s) {
    auto dist = oracle::bfs(adj, s);
    for (std::uint32_t t = 0; t < 30; ++t) {
      if (t != s && dist[t] > 0) {
        sum += dist[t];
        pairs += 1;
      }
    }
  }
  EXPECT_NEAR(*family[0].at(1)->value, sum / pairs, 1e-12);
  auto within = structure_series(d, focal, g);
  EXPECT_NEAR(*family[0].at(1)->value, *within[13].avg_path.mean, 1e-12);
}

TEST(StructureSeries, LccIsMonotone) {
  std::mt19937_64 rng(8);
  auto d = campusnet::testing::random_cohort(120, 600, rng);
  auto s = structure_series(d, 0, d.grid(0, TimeUnit::Month));
  ASSERT_EQ(s.size(), 72u);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GE(s[i].lcc_fraction, s[i - 1].lcc_fraction);
  for (const auto& x : s) {
    if (x.modularity) EXPECT_NEAR(modularity(snapshot(d, 0, d.grid(0, TimeUnit::Month), x.idx, Scope::Cohort),
                                             x.partition),
                                  *x.modularity, 1e-9);
  }
}
