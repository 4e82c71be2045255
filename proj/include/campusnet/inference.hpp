#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "campusnet/common.hpp"
#include "campusnet/temporal_graph.hpp"

namespace campusnet {

/// Rank-deficient design. columns() names the columns that are linear
/// combinations of earlier ones.
class CollinearityError : public Error {
 public:
  CollinearityError(std::vector<std::string> columns);
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
};

struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<std::string> names;
  std::vector<std::int64_t> clusters;  // one id per row; empty means no clustering

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
};

enum class ClusterCorrection {
  CR0,  // plain sandwich
  CR1,  // times G/(G-1) * (n-1)/(n-k)
};

struct RegressionResult {
  std::vector<std::string> terms;
  Eigen::VectorXd coef;
  Eigen::VectorXd se;            // clustered when clusters were supplied, classical otherwise
  Eigen::VectorXd classical_se;  // homoskedastic
  Eigen::VectorXd ci_low;        // coef - 1.96 se
  Eigen::VectorXd ci_high;
  Eigen::VectorXd residuals;
  double r2 = 0;  // centered
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
  bool clustered = false;

  /// Index of a term by name; throws LookupError.
  std::size_t term(std::string_view name) const;
};

inline constexpr double kCriticalValue95 = 1.96;

/// Least squares through column-pivoted Householder QR of the
/// column-equilibrated design. Throws CollinearityError on rank deficiency and
/// std::invalid_argument when n_obs <= n_columns.
RegressionResult ols_fit(const DesignMatrix& design, const Eigen::VectorXd& y,
                         ClusterCorrection correction = ClusterCorrection::CR1);

/// Liang-Zeger sandwich standard errors given (X'X)^-1. Requires at least two clusters.
Eigen::VectorXd cluster_robust_se(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xtx_inv,
                                  const Eigen::VectorXd& residuals, std::span<const std::int64_t> clusters,
                                  ClusterCorrection correction = ClusterCorrection::CR1);

/// Covariate names accepted by covariate_value: every numeric school column
/// plus log_class_size.
std::span<const std::string_view> covariate_names();
double covariate_value(const SchoolCovariates& school, std::string_view name);

/// One (cohort, bucket) observation of a month-interaction panel.
struct PanelRow {
  int idx = 0;
  double y = 0;
  std::int64_t cluster = 0;
  std::vector<double> covariates;
};

struct Regression {
  DesignMatrix design;
  Eigen::VectorXd y;
};

/// Cell-means month design: one indicator per bucket plus bucket x covariate
/// interactions, no intercept. Buckets with fewer than `min_rows` rows (and
/// never fewer than covariates + 2) are left out. Terms are "month[idx]" and
/// "month[idx]:name".
Regression month_interaction_design(std::span<const PanelRow> rows, std::span<const std::string> covariates,
                                    std::size_t min_rows = 0);

/// One entry-class observation for the fixed-effects design.
struct ClassRow {
  double y = 0;
  std::int64_t cluster = 0;
  int year = 0;
  std::vector<double> covariates;
};

/// Intercept, covariates and entry-year indicators with the smallest year as
/// reference. Terms are "intercept", the covariate names and "year[YYYY]".
Regression year_fixed_effects_design(std::span<const ClassRow> rows, std::span<const std::string> covariates);

}  // namespace campusnet
