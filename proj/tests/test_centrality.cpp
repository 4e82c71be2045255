#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "campusnet/centrality.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace campusnet;
using Pairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

TEST(Eigenvector, PathOfThree) {
  auto c = eigenvector_centrality(SnapshotView::from_edges(3, Pairs{{0, 1}, {1, 2}}));
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->scores(0), 0.5, 1e-9);
  EXPECT_NEAR(c->scores(1), std::sqrt(0.5), 1e-9);
  EXPECT_NEAR(c->scores(2), 0.5, 1e-9);
  EXPECT_TRUE(c->converged);
}

TEST(Eigenvector, StarCentreRanksFirst) {
  auto c = eigenvector_centrality(SnapshotView::from_edges(6, Pairs{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}));
  EXPECT_DOUBLE_EQ(c->ranks(0), 1.0);
  for (int i = 1; i < 6; ++i) EXPECT_DOUBLE_EQ(c->ranks(i), 0.4);  // ranks 1..5 averaged to 3
}

TEST(Eigenvector, EdgelessIsAbsent) { EXPECT_FALSE(eigenvector_centrality(SnapshotView::from_edges(3, Pairs{}))); }

TEST(Eigenvector, MatchesDenseSolver) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const std::uint32_t n = 10 + static_cast<std::uint32_t>(rng() % 490);
    auto e = campusnet::testing::random_edges(n, 2.5 / n + 0.01 * (rep % 3), rng);
    auto c = eigenvector_centrality(SnapshotView::from_edges(n, e));
    ASSERT_TRUE(c);
    auto want = oracle::principal_eigenvector(oracle::adjacency(n, e));
    const double cosine = c->scores.dot(want) / (c->scores.norm() * want.norm());
    EXPECT_GE(cosine, 1 - 1e-9) << "n=" << n;
    EXPECT_LT((c->scores - want).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Eigenvector, BipartiteLccConverges) {
  // even cycle: plain power iteration on A oscillates from some starts
  Pairs e;
  for (std::uint32_t i = 0; i < 8; ++i) e.emplace_back(i, (i + 1) % 8);
  e.emplace_back(0, 4);
  e.emplace_back(9, 10);
  auto c = eigenvector_centrality(SnapshotView::from_edges(11, e));
  EXPECT_TRUE(c->converged);
  EXPECT_EQ(c->scores(9), 0.0);
  EXPECT_EQ(c->scores(8), 0.0);
  EXPECT_NEAR(c->scores.norm(), 1.0, 1e-12);
}

TEST(Eigenvector, RelabelingPermutesScores) {
  std::mt19937_64 rng(13);
  const std::uint32_t n = 80;
  auto e = campusnet::testing::random_edges(n, 0.06, rng);
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), rng);
  Pairs relabeled;
  for (auto [u, v] : e) relabeled.emplace_back(perm[u], perm[v]);
  auto a = eigenvector_centrality(SnapshotView::from_edges(n, e));
  auto b = eigenvector_centrality(SnapshotView::from_edges(n, relabeled));
  for (std::uint32_t u = 0; u < n; ++u) EXPECT_NEAR(a->scores(u), b->scores(perm[u]), 1e-9);
}

TEST(Ranks, TiesAveragedAndScaleInvariant) {
  Eigen::VectorXd s(5);
  s << 0.3, 0.1, 0.3, 0.0, 0.9;
  auto r = normalized_ranks(s);
  Eigen::VectorXd want(5);
  want << 0.625, 0.25, 0.625, 0.0, 1.0;
  EXPECT_LT((r - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((normalized_ranks(s * 17.5) - r).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(normalized_ranks(Eigen::VectorXd::Ones(1))(0), 0.0);
}

namespace {

std::optional<CentralityVector> with_ranks(std::vector<double> r) {
  CentralityVector c;
  c.ranks = Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  c.scores = c.ranks;
  return c;
}

}  // namespace

TEST(RankCorrelation, SymmetricUnitDiagonalAndAbsentCells) {
  std::vector<std::optional<CentralityVector>> series{with_ranks({0, 0.5, 1, 0.25, 0.75}), std::nullopt,
                                                      with_ranks({1, 0.5, 0, 0.75, 0.25}),
                                                      with_ranks({0.2, 0.9, 0.1, 0.3, 0.6})};
  auto m = rank_correlation_matrix(series);
  ASSERT_EQ(m.rows(), 4);
  for (Eigen::Index i : {0, 2, 3}) EXPECT_NEAR(m(i, i), 1.0, 1e-12);
  EXPECT_NEAR(m(0, 2), -1.0, 1e-12);
  EXPECT_TRUE(std::isnan(m(0, 1)));
  EXPECT_TRUE(std::isnan(m(1, 1)));
  for (Eigen::Index i : {0, 2, 3}) {
    for (Eigen::Index j : {0, 2, 3}) EXPECT_NEAR(m(i, j), m(j, i), 1e-12);
  }
}

TEST(RankCorrelation, TooFewMembersIsAbsent) {
  std::vector<std::optional<CentralityVector>> series{with_ranks({0, 1}), with_ranks({1, 0})};
  auto m = rank_correlation_matrix(series);
  EXPECT_TRUE(std::isnan(m(0, 1)));
}

TEST(RankChurn, IdenticalAndSwap) {
  const int n = 5;
  std::vector<double> base{0, 0.25, 0.5, 0.75, 1};
  std::vector<double> swapped{0, 0.5, 0.25, 0.75, 1};
  std::vector<std::optional<CentralityVector>> series{with_ranks(base), with_ranks(base), with_ranks(swapped),
                                                      std::nullopt};
  auto g = TimeGrid::monthly(0, 0, 4);
  auto churn = rank_churn(series, g, "s:2010");
  EXPECT_FALSE(churn.points[0].value);
  EXPECT_EQ(*churn.points[1].value, 0.0);
  // two members move by one rank step 1/(n-1)
  EXPECT_NEAR(*churn.points[2].value, 2.0 / (n * (n - 1)), 1e-15);
  EXPECT_FALSE(churn.points[3].value);
}
