#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "campusnet/metric_series.hpp"
#include "campusnet/temporal_graph.hpp"

namespace campusnet {

struct PowerIterationOptions {
  double tolerance = 1e-10;  // relative change of the iterate, L2
  int max_iterations = 1000;
};

struct CentralityVector {
  int idx = 0;
  Eigen::VectorXd scores;  // per view node; L2-normalized on the LCC, 0 elsewhere
  Eigen::VectorXd ranks;   // (fractional rank - 1) / (n - 1), ties averaged
  int iterations = 0;
  bool converged = false;
};

/// Fractional ranks mapped to [0,1]. Scores within 1e-9 of the largest
/// magnitude of each other share their average rank. A single entry gets 0.
Eigen::VectorXd normalized_ranks(const Eigen::VectorXd& scores);

/// Principal eigenvector of the LCC adjacency by power iteration on A + I
/// from a uniform start. The identity shift keeps bipartite components from
/// oscillating without changing the eigenvector. Absent for an edgeless view.
std::optional<CentralityVector> eigenvector_centrality(const SnapshotView& view,
                                                       const PowerIterationOptions& options = {});

/// One entry per grid bucket of the cohort network.
std::vector<std::optional<CentralityVector>> centrality_series(const Dataset& data, std::size_t cohort,
                                                               const TimeGrid& grid,
                                                               const PowerIterationOptions& options = {});

/// Pearson correlation of rank vectors, one row and column per series entry.
/// A cell is NaN when either vector is absent, has fewer than 3 entries or
/// has zero variance.
Eigen::MatrixXd rank_correlation_matrix(std::span<const std::optional<CentralityVector>> series);

/// Mean absolute rank change against the previous bucket; absent for the
/// first bucket and whenever either vector is missing.
MetricSeries rank_churn(std::span<const std::optional<CentralityVector>> series, const TimeGrid& grid,
                        std::string cohort_key);

}  // namespace campusnet
