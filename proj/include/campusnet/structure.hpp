#pragma once

#include <optional>
#include <span>
#include <vector>

#include "campusnet/metric_series.hpp"
#include "campusnet/temporal_graph.hpp"

namespace campusnet {

struct Components {
  std::vector<std::uint32_t> label;  // component id per node, ids ordered by smallest member
  std::vector<std::uint32_t> size;   // nodes per component id
  std::uint32_t largest = 0;         // id of the largest component (smallest id on ties)
};

Components connected_components(const SnapshotView& view);

/// Largest component size over `member_count`; isolated members count in the
/// denominator. Throws std::invalid_argument when member_count is 0.
double lcc_fraction(const SnapshotView& view, std::size_t member_count);

/// Triangles through each node, counted from scratch with sorted intersections.
std::vector<std::uint64_t> local_triangle_counts(const SnapshotView& view);

/// Mean local clustering over all nodes; degree < 2 contributes 0. Uses the
/// view's tracked triangle counts when present.
double avg_clustering(const SnapshotView& view);

/// Standard modularity of a partition (community id per node).
double modularity(const SnapshotView& view, std::span<const std::uint32_t> community);

struct CommunityResult {
  double q = 0;
  std::vector<std::uint32_t> community;  // compact ids ordered by smallest member
  std::size_t merges = 0;
};

/// Clauset-Newman-Moore greedy agglomeration: repeatedly merges the adjacent
/// pair with the largest modularity gain until no gain is positive. Equal
/// gains resolve to the lowest (id, id) pair. Absent for an edgeless view.
/// Dense and sparse storage give identical partitions; Auto picks dense up
/// to kDenseCnmLimit nodes.
enum class CnmStorage { Auto, Dense, Sparse };
inline constexpr std::size_t kDenseCnmLimit = 4096;
std::optional<CommunityResult> cnm_modularity(const SnapshotView& view, CnmStorage storage = CnmStorage::Auto);

struct PathOptions {
  std::size_t exact_threshold = 2000;   // exact all-sources BFS up to this LCC size
  std::size_t sampled_sources = 256;    // sources used above the threshold
  std::optional<std::size_t> sample_size;  // forces this many sources when set
  std::uint64_t seed = 0x5eed;
};

struct PathLength {
  std::optional<double> mean;
  bool sampled = false;
  std::uint64_t seed = 0;
  std::size_t sources = 0;
  std::uint64_t pairs = 0;
};

struct DistanceTotals {
  std::uint64_t sum = 0;
  std::uint64_t pairs = 0;
};

/// Sum of BFS distances from each source to every node it reaches (itself
/// excluded). Sources run 64 at a time as bit-parallel BFS.
DistanceTotals distance_totals(const SnapshotView& view, std::span<const std::uint32_t> sources);

/// As distance_totals, but split by the group of the reached node
/// (groups[v] < n_groups; other values are ignored).
std::vector<DistanceTotals> distance_totals_by_group(const SnapshotView& view, std::span<const std::uint32_t> sources,
                                                     std::span<const std::uint32_t> groups, std::size_t n_groups);

/// Mean distance over connected ordered pairs; disconnected pairs are excluded.
PathLength avg_shortest_path(const SnapshotView& view, const PathOptions& options = {});

struct StructuralSnapshot {
  int idx = 0;
  double lcc_fraction = 0;
  double avg_clustering = 0;
  std::optional<double> modularity;
  std::vector<std::uint32_t> partition;
  PathLength avg_path;
};

StructuralSnapshot structural_snapshot(const SnapshotView& view, std::size_t member_count,
                                       const PathOptions& options);

/// Per-bucket structural statistics of a cohort network. Path seeds derive
/// from options.seed, the cohort index and the bucket index.
std::vector<StructuralSnapshot> structure_series(const Dataset& data, std::size_t cohort, const TimeGrid& grid,
                                                 const PathOptions& options = {});

/// Mean school-network distance from the focal cohort's members to each
/// counterpart cohort's members, one series per counterpart (series = key).
std::vector<MetricSeries> cross_cohort_path_series(const Dataset& data, std::size_t focal,
                                                   std::span<const std::size_t> counterparts, const TimeGrid& grid,
                                                   const PathOptions& options = {});

}  // namespace campusnet
