#pragma once

#include <optional>
#include <span>
#include <vector>

#include "campusnet/metric_series.hpp"
#include "campusnet/temporal_graph.hpp"

namespace campusnet {

struct ClosureStats {
  int idx = 0;
  std::optional<double> share_closing;          // share of new edges with >= 1 common neighbor
  std::optional<double> mean_triangles_closed;  // mean common-neighbor count over new edges
  std::size_t new_edge_count = 0;
};

inline constexpr double kDefaultPercentiles[] = {25.0, 50.0, 75.0};

/// Number of in-scope events per bucket. sample_count is the member count.
MetricSeries edge_volume(const Dataset& data, std::size_t cohort, const TimeGrid& grid, Scope scope = Scope::Cohort);

/// Same-school events touching the cohort, one series per counterpart entry
/// year (ascending). Intra-cohort events count toward the cohort's own year.
std::vector<MetricSeries> cross_cohort_volume(const Dataset& data, std::size_t cohort, const TimeGrid& grid);

/// Nearest-rank percentile (p in [0,100]) of a non-empty sample.
double nearest_rank_percentile(std::span<const std::uint32_t> values, double p);

/// Percentiles of the degrees of `members` (local indices) in a view.
std::vector<double> degree_percentile_values(const SnapshotView& view, std::span<const std::uint32_t> members,
                                             std::span<const double> percentiles);

/// Degree percentiles over all cohort members, isolates included. One series
/// per percentile, named "p25" etc. Throws std::invalid_argument for an empty cohort.
std::vector<MetricSeries> degree_percentiles(const Dataset& data, std::size_t cohort, const TimeGrid& grid,
                                             std::span<const double> percentiles = kDefaultPercentiles,
                                             Scope scope = Scope::Cohort);

/// Aggregates per-edge common-neighbor counts of one bucket.
ClosureStats closure_stats(int idx, std::span<const std::uint32_t> common_neighbors);

/// Closure statistics of bucket idx: each new edge is evaluated against the
/// snapshot at the end of the previous bucket, never against its bucket peers.
ClosureStats triadic_closure(const Dataset& data, std::size_t cohort, const TimeGrid& grid, int idx,
                             Scope scope = Scope::Cohort);

std::vector<ClosureStats> closure_series(const Dataset& data, std::size_t cohort, const TimeGrid& grid,
                                         Scope scope = Scope::Cohort);

}  // namespace campusnet
