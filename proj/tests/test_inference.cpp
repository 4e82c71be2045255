#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "campusnet/inference.hpp"
#include "oracles.hpp"

using namespace campusnet;

namespace {

DesignMatrix with_intercept(const Eigen::MatrixXd& covs, std::vector<std::string> names) {
  DesignMatrix d;
  d.x.resize(covs.rows(), covs.cols() + 1);
  d.x.col(0).setOnes();
  d.x.rightCols(covs.cols()) = covs;
  d.names = {"intercept"};
  d.names.insert(d.names.end(), names.begin(), names.end());
  return d;
}

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  }
  return m;
}

}  // namespace

TEST(Ols, ExactLinearDataFitsPerfectly) {
  std::mt19937_64 rng(1);
  auto x = normal_matrix(50, 2, rng);
  auto d = with_intercept(x, {"a", "b"});
  Eigen::VectorXd y = 1.5 + 2.0 * x.col(0).array() - 0.25 * x.col(1).array();
  auto r = ols_fit(d, y);
  EXPECT_NEAR(r.coef(0), 1.5, 1e-12);
  EXPECT_NEAR(r.coef(1), 2.0, 1e-12);
  EXPECT_NEAR(r.coef(2), -0.25, 1e-12);
  EXPECT_NEAR(r.r2, 1.0, 1e-12);
  EXPECT_FALSE(r.clustered);
  EXPECT_EQ(r.term("b"), 2u);
  EXPECT_THROW(r.term("c"), LookupError);
}

TEST(Ols, ConstantOnInterceptHasUnitR2) {
  DesignMatrix d;
  d.x = Eigen::MatrixXd::Ones(5, 1);
  d.names = {"intercept"};
  auto r = ols_fit(d, Eigen::VectorXd::Ones(5));
  EXPECT_NEAR(r.coef(0), 1.0, 1e-15);
  EXPECT_EQ(r.r2, 1.0);
}

TEST(Ols, RecoversPlantedCoefficientsWithinThreeSe) {
  std::mt19937_64 rng(2);
  const Eigen::Index n = 10000;
  auto x = normal_matrix(n, 3, rng);
  Eigen::Vector4d beta(0.3, -1.0, 0.5, 0.0);
  auto d = with_intercept(x, {"a", "b", "c"});
  std::normal_distribution<double> noise(0, 2);
  Eigen::VectorXd y = d.x * beta;
  for (Eigen::Index i = 0; i < n; ++i) y(i) += noise(rng);
  for (Eigen::Index i = 0; i < n; ++i) d.clusters.push_back(i / 20);
  auto r = ols_fit(d, y);
  EXPECT_TRUE(r.clustered);
  EXPECT_EQ(r.n_clusters, 500u);
  for (Eigen::Index j = 0; j < 4; ++j) {
    EXPECT_LT(std::abs(r.coef(j) - beta(j)), 3 * r.se(j)) << d.names[static_cast<std::size_t>(j)];
    EXPECT_NEAR(r.ci_high(j) - r.ci_low(j), 2 * kCriticalValue95 * r.se(j), 1e-12);
  }
}

TEST(Ols, ClusterSeMatchesSandwichOracle) {
  std::mt19937_64 rng(3);
  const Eigen::Index n = 300;
  auto x = normal_matrix(n, 2, rng);
  auto d = with_intercept(x, {"a", "b"});
  std::normal_distribution<double> z;
  std::vector<double> shock(17);
  for (auto& s : shock) s = z(rng);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.clusters.push_back(static_cast<std::int64_t>(rng() % 17) * 7 - 40);
    y(i) = 0.5 * x(i, 0) + shock[static_cast<std::size_t>((d.clusters.back() + 40) / 7)] + z(rng);
  }
  for (auto correction : {ClusterCorrection::CR0, ClusterCorrection::CR1}) {
    auto r = ols_fit(d, y, correction);
    auto want = oracle::sandwich_se(d.x, r.residuals, d.clusters, correction == ClusterCorrection::CR1);
    EXPECT_LT((r.se - want).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Ols, ClassicalSeMatchesTextbookFormula) {
  std::mt19937_64 rng(4);
  auto x = normal_matrix(80, 2, rng);
  auto d = with_intercept(x, {"a", "b"});
  Eigen::VectorXd y = x.col(0) + normal_matrix(80, 1, rng);
  auto r = ols_fit(d, y);
  const double sigma2 = r.residuals.squaredNorm() / (80 - 3);
  Eigen::VectorXd want = (sigma2 * (d.x.transpose() * d.x).inverse().diagonal()).cwiseSqrt();
  EXPECT_LT((r.classical_se - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.se, r.classical_se);
}

TEST(Ols, DuplicatedRowsKeepCoefficients) {
  std::mt19937_64 rng(5);
  auto x = normal_matrix(40, 2, rng);
  auto d = with_intercept(x, {"a", "b"});
  Eigen::VectorXd y = x.col(1) * 3 + normal_matrix(40, 1, rng);
  DesignMatrix twice = d;
  twice.x.resize(80, 3);
  twice.x << d.x, d.x;
  Eigen::VectorXd y2(80);
  y2 << y, y;
  auto a = ols_fit(d, y);
  auto b = ols_fit(twice, y2);
  EXPECT_LT((a.coef - b.coef).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(a.r2, b.r2, 1e-12);
}

TEST(Ols, AffineRescalingOfCovariate) {
  std::mt19937_64 rng(6);
  auto x = normal_matrix(60, 1, rng);
  Eigen::VectorXd y = 2 * x.col(0) + normal_matrix(60, 1, rng);
  auto a = ols_fit(with_intercept(x, {"a"}), y);
  Eigen::MatrixXd scaled = (x.array() * 1000.0 + 7.0).matrix();
  auto b = ols_fit(with_intercept(scaled, {"a"}), y);
  EXPECT_NEAR(b.coef(1) * 1000.0, a.coef(1), 1e-9);
  EXPECT_NEAR(b.se(1) * 1000.0, a.se(1), 1e-9);
  EXPECT_NEAR(a.r2, b.r2, 1e-12);
}

TEST(Ols, NestedModelHasNoLargerR2) {
  std::mt19937_64 rng(7);
  auto x = normal_matrix(100, 3, rng);
  Eigen::VectorXd y = x.col(0) - x.col(2) + normal_matrix(100, 1, rng);
  auto small = ols_fit(with_intercept(x.leftCols(1), {"a"}), y);
  auto big = ols_fit(with_intercept(x, {"a", "b", "c"}), y);
  EXPECT_LE(small.r2, big.r2 + 1e-15);
}

TEST(Ols, CollinearColumnsAreNamed) {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd x = normal_matrix(30, 3, rng);
  x.col(2) = 2 * x.col(0) - x.col(1);
  try {
    ols_fit(with_intercept(x, {"a", "b", "c"}), Eigen::VectorXd::Ones(30));
    FAIL() << "expected CollinearityError";
  } catch (const CollinearityError& e) {
    ASSERT_EQ(e.columns().size(), 1u);
    EXPECT_NE(std::string(e.what()).find(e.columns()[0]), std::string::npos);
  }
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(30, 1);
  try {
    ols_fit(with_intercept(zero, {"z"}), Eigen::VectorXd::Ones(30));
    FAIL() << "expected CollinearityError";
  } catch (const CollinearityError& e) {
    EXPECT_EQ(e.columns(), std::vector<std::string>{"z"});
  }
}

TEST(Ols, InvalidShapesAndSingleCluster) {
  std::mt19937_64 rng(9);
  auto d = with_intercept(normal_matrix(3, 2, rng), {"a", "b"});
  EXPECT_THROW(ols_fit(d, Eigen::VectorXd::Ones(3)), std::invalid_argument);
  auto e = with_intercept(normal_matrix(20, 1, rng), {"a"});
  e.clusters.assign(20, 4);
  EXPECT_THROW(ols_fit(e, normal_matrix(20, 1, rng).col(0)), std::invalid_argument);
}

TEST(Designs, MonthInteractionDropsThinMonths) {
  std::vector<std::string> covs{"is_private"};
  std::vector<PanelRow> rows;
  for (int c = 0; c < 6; ++c) {
    rows.push_back({0, 0.1 * c, c, {static_cast<double>(c % 2)}});
    rows.push_back({1, 0.2 * c, c, {static_cast<double>(c % 2)}});
  }
  rows.push_back({2, 1.0, 0, {1.0}});  // a single row cannot support the month
  auto reg = month_interaction_design(rows, covs);
  EXPECT_EQ(reg.design.names,
            (std::vector<std::string>{"month[0]", "month[0]:is_private", "month[1]", "month[1]:is_private"}));
  EXPECT_EQ(reg.design.rows(), 12);
  EXPECT_EQ(reg.design.clusters.size(), 12u);
  auto fit = ols_fit(reg.design, reg.y);
  // cell means: month 0 public rows are c = 0, 2, 4
  EXPECT_NEAR(fit.coef(0), 0.2, 1e-12);
  EXPECT_NEAR(fit.coef(1), 0.3 - 0.2, 1e-12);
  EXPECT_EQ(month_interaction_design(rows, covs, 7).design.cols(), 0);
}

TEST(Designs, YearFixedEffectsUseEarliestYearAsReference) {
  std::vector<std::string> covs{"is_womens"};
  std::vector<ClassRow> rows{{0.5, 1, 2009, {0}}, {0.6, 2, 2010, {1}}, {0.7, 3, 2008, {0}}};
  auto reg = year_fixed_effects_design(rows, covs);
  EXPECT_EQ(reg.design.names, (std::vector<std::string>{"intercept", "is_womens", "year[2009]", "year[2010]"}));
  EXPECT_EQ(reg.design.x(2, 2), 0.0);
  EXPECT_EQ(reg.design.x(0, 2), 1.0);
  EXPECT_EQ(reg.design.x(1, 3), 1.0);
}

TEST(Covariates, NamesAndLogClassSize) {
  SchoolCovariates s;
  s.class_size = 1000;
  s.is_womens = true;
  EXPECT_NEAR(covariate_value(s, "log_class_size"), std::log(1000.0), 1e-12);
  EXPECT_EQ(covariate_value(s, "is_womens"), 1.0);
  EXPECT_THROW(covariate_value(s, "nope"), std::invalid_argument);
  EXPECT_GE(covariate_names().size(), 9u);
}
